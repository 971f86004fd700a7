#include "oriv/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "oriv/parallel.hpp"
#include "oriv/rng.hpp"

namespace oriv {

void DgpConfig::check() const {
    require(sigma_omega >= 0 && eps_sd >= 0 && invest_shock_sd >= 0 && mu_log_sd >= 0,
            "DgpConfig: standard deviations must be nonnegative");
    require(std::fabs(theta_omega) < 1.0, "DgpConfig: |theta_omega| must be < 1");
    require(burn_in >= 0 && keep_periods >= 1, "DgpConfig: bad period counts");
}

PanelDataset simulate_dgp(const DgpConfig& cfg, int n, uint64_t seed) {
    cfg.check();
    require(n >= 1, "simulate_dgp: n must be positive");
    const int T = cfg.keep_periods;
    const int total = cfg.burn_in + T;
    const double innov_sd = cfg.sigma_omega * std::sqrt(1.0 - cfg.theta_omega * cfg.theta_omega);

    PanelDataset panel;
    panel.periods.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) panel.periods[static_cast<size_t>(t)] = t + 1;
    Matrix Y(n, T), K(n, T), I(n, T), W(n, T);
    panel.firm_ids.resize(static_cast<size_t>(n));

    long resims = 0;
    for (int i = 0; i < n; ++i) {
        panel.firm_ids[static_cast<size_t>(i)] = std::to_string(i + 1);
        for (int attempt = 0;; ++attempt) {
            Rng rng(Rng::derive(seed, static_cast<uint64_t>(i) * 7919ULL +
                                          static_cast<uint64_t>(attempt)));
            double w = rng.normal(0.0, cfg.sigma_omega);  // stationary start
            double klevel = 1.0;
            bool bad = false;
            int kept = 0;
            for (int t = 0; t < total; ++t) {
                if (t > 0) w = cfg.theta_omega * w + rng.normal(0.0, innov_sd);
                double Klog = std::log(klevel);
                double Ilog = cfg.gamma_0 + cfg.gamma_1 * Klog + cfg.gamma_2 * w +
                              std::exp(-0.5 * Klog + 0.5 * w);
                if (cfg.invest_shock_sd > 0) Ilog += rng.normal(0.0, cfg.invest_shock_sd);
                if (t >= cfg.burn_in) {
                    K(i, kept) = Klog;
                    I(i, kept) = Ilog;
                    W(i, kept) = w;
                    ++kept;
                }
                double mu = rng.lognormal(cfg.mu_log_mean, cfg.mu_log_sd);
                klevel = cfg.one_minus_delta * klevel + mu * std::exp(Ilog);
                if (!std::isfinite(klevel) || klevel <= 0.0) {
                    bad = true;
                    break;
                }
            }
            if (!bad) {
                for (int t = 0; t < T; ++t)
                    Y(i, t) = cfg.theta_1 + cfg.theta_k * K(i, t) + W(i, t) +
                              rng.normal(0.0, cfg.eps_sd);
                break;
            }
            ++resims;
            if (resims > std::max(10L, n / 100L))
                throw numeric_error("simulate_dgp: more than 1% of firms overflowed");
        }
    }
    panel.variables["Y"] = std::move(Y);
    panel.variables["K"] = std::move(K);
    panel.variables["I"] = std::move(I);
    panel.variables["omega"] = std::move(W);
    return panel;
}

RepRecord run_single(const PanelDataset& panel, const MomentSystem& system, const McOptions& opt,
                     uint64_t seed, double truth_k, DgmmResult* dgmm_out, DgmmResult* pi_out) {
    RepRecord rec;
    try {
        FoldPlan folds = make_folds(panel.n_firms(), opt.L, Rng::derive(seed, 1));
        CrossfitEta eta =
            crossfit_eta(panel, folds, opt.first_stage, system.eta_targets(),
                         Rng::derive(seed, 2));
        int kfree = system.kind == MomentSystem::Kind::capital_only ? 0 : 1;
        if (opt.run_dgmm) {
            OrivSet oriv = estimate_orivs(panel, folds, system, eta, system.default_menu(),
                                          opt.oriv, make_pi_prelim(panel, system, opt.gmm));
            DgmmResult dg = minimize_gmm(panel, folds, system, eta, oriv, opt.gmm);
            rec.theta_dgmm = dg.theta_free[kfree];
            rec.se_dgmm = dg.se[kfree];
            rec.hit_dgmm = dg.ci[static_cast<size_t>(kfree)].first <= truth_k &&
                           truth_k <= dg.ci[static_cast<size_t>(kfree)].second;
            if (dgmm_out) *dgmm_out = std::move(dg);
        }
        if (opt.run_pi) {
            DgmmResult pi =
                estimate_naive_pi(panel, folds, system, eta, opt.first_stage, opt.bootstrap_B,
                                  Rng::derive(seed, 3), opt.gmm, 1);
            rec.theta_pi = pi.theta_free[kfree];
            rec.se_pi = pi.se[kfree];
            rec.hit_pi = pi.ci[static_cast<size_t>(kfree)].first <= truth_k &&
                         truth_k <= pi.ci[static_cast<size_t>(kfree)].second;
            if (pi_out) *pi_out = std::move(pi);
        }
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

namespace {

McEstimatorReport summarize(const std::vector<RepRecord>& recs, bool pi, double truth) {
    McEstimatorReport r;
    std::vector<double> th, se;
    int hits = 0, cnt = 0;
    for (const auto& rec : recs) {
        if (!rec.ok) continue;
        th.push_back(pi ? rec.theta_pi : rec.theta_dgmm);
        se.push_back(pi ? rec.se_pi : rec.se_dgmm);
        hits += (pi ? rec.hit_pi : rec.hit_dgmm) ? 1 : 0;
        ++cnt;
    }
    if (cnt == 0) return r;
    double mean = 0, mse = 0, mse2 = 0;
    for (double t : th) mean += t;
    mean /= cnt;
    for (double t : th) {
        mse += (t - truth) * (t - truth);
        mse2 += 0.0;
    }
    (void)mse2;
    r.bias = mean - truth;
    r.rmse = std::sqrt(mse / cnt);
    double s = 0;
    for (double v : se) s += v;
    r.mean_se = s / cnt;
    r.coverage = static_cast<double>(hits) / cnt;
    r.coverage_mc_se = std::sqrt(std::max(0.0, r.coverage * (1.0 - r.coverage)) / cnt);
    return r;
}

}  // namespace

McReport run_experiment(const DgpConfig& cfg, int n, int reps, const McOptions& opt,
                        uint64_t seed) {
    require(reps >= 1, "run_experiment: reps must be >= 1");
    McReport report;
    report.reps = reps;
    report.records.assign(static_cast<size_t>(reps), RepRecord{});
    MomentSystem system = capital_only_system();

    parallel_for(reps, opt.workers, [&](int rep) {
        uint64_t rep_seed = Rng::derive(seed, 0xABC000ULL + static_cast<uint64_t>(rep));
        McOptions local = opt;
        local.workers = 1;
        PanelDataset panel = simulate_dgp(cfg, n, rep_seed);
        report.records[static_cast<size_t>(rep)] =
            run_single(panel, system, local, Rng::derive(rep_seed, 99), cfg.theta_k);
    });

    for (const auto& rec : report.records)
        if (!rec.ok) ++report.failures;
    if (report.failures * 20 > reps)
        throw numeric_error("run_experiment: more than 5% of replications failed");
    report.pi = summarize(report.records, true, cfg.theta_k);
    report.dgmm = summarize(report.records, false, cfg.theta_k);
    return report;
}

LassoOracleResult lasso_oracle_check(int n, int reps, uint64_t seed,
                                     const LassoOracleOptions& opt) {
    require(n >= 100, "lasso_oracle_check: n must be >= 100");
    std::vector<double> mses(static_cast<size_t>(reps));
    std::vector<char> selected(static_cast<size_t>(reps));
    const int r = opt.dim;

    parallel_for(reps, opt.workers, [&](int rep) {
        Rng rng(Rng::derive(seed, 0x5EED00ULL + static_cast<uint64_t>(rep)));
        Vector beta0 = Vector::Zero(r);
        beta0.head(3).setOnes();
        MultiEqDesign d;
        const double shift = std::pow(static_cast<double>(n), opt.perturb_exponent);
        for (int j = 0; j < opt.n_equations; ++j) {
            Matrix X(n, r);
            for (Index a = 0; a < X.rows(); ++a)
                for (Index b = 0; b < X.cols(); ++b) X(a, b) = rng.normal();
            Vector y = X * beta0;
            for (Index a = 0; a < y.size(); ++a) y[a] += rng.normal(0.0, opt.noise_sd);
            d.M.push_back(X.array() + shift);  // generated-regressor perturbation
            d.f.push_back(std::move(y));
        }
        PenalizedFitOptions pf;
        pf.c1 = opt.c1;
        pf.c2_scale = opt.c2_scale;
        for (int k = 0; k < opt.low_count; ++k) pf.low_indices.push_back(k);
        PenalizedFit fit = fit_penalized(d, pf);
        mses[static_cast<size_t>(rep)] = (fit.beta - beta0).squaredNorm();
        selected[static_cast<size_t>(rep)] =
            fit.solution.active == std::vector<int>{0, 1, 2} ? 1 : 0;
    });

    LassoOracleResult out;
    for (int rep = 0; rep < reps; ++rep) {
        out.mean_mse += mses[static_cast<size_t>(rep)];
        out.selection_rate += selected[static_cast<size_t>(rep)] ? 1.0 : 0.0;
    }
    out.mean_mse /= reps;
    out.selection_rate /= reps;
    return out;
}

Histogram histogram_export(const std::vector<double>& estimates, double truth, int bins) {
    require(!estimates.empty(), "histogram_export: no estimates");
    require(bins >= 1, "histogram_export: bins must be positive");
    double mean = 0;
    for (double v : estimates) mean += v;
    mean /= static_cast<double>(estimates.size());
    double var = 0;
    for (double v : estimates) var += (v - mean) * (v - mean);
    var /= static_cast<double>(estimates.size());
    if (var <= 0.0) throw numeric_error("histogram_export: zero standard deviation");
    double sd = std::sqrt(var);

    std::vector<double> z;
    z.reserve(estimates.size());
    for (double v : estimates) z.push_back((v - truth) / sd);
    Histogram h;
    h.lo = *std::min_element(z.begin(), z.end());
    h.hi = *std::max_element(z.begin(), z.end());
    if (h.hi <= h.lo) h.hi = h.lo + 1.0;
    h.counts.assign(static_cast<size_t>(bins), 0);
    for (double v : z) {
        int b = static_cast<int>((v - h.lo) / (h.hi - h.lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<size_t>(b)];
    }
    for (double v : z) h.mean_standardized += v;
    h.mean_standardized /= static_cast<double>(z.size());
    return h;
}

}  // namespace oriv
