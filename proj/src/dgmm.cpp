#include "oriv/dgmm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oriv/optimize.hpp"
#include "oriv/parallel.hpp"
#include "oriv/rng.hpp"

namespace oriv {

Matrix assemble_psi(const PanelDataset& panel, const MomentSystem& system,
                    const Vector& theta_full, const CrossfitEta& eta, const OrivSet& oriv) {
    const int n = panel.n_firms();
    if (static_cast<int>(oriv.kappa.size()) != eta.folds.L)
        throw numeric_error("assemble_psi: fold mismatch between eta and OR-IV sets");
    Matrix m = system.residuals(panel, theta_full, eta.heldout);
    Matrix psi = Matrix::Zero(n, oriv.q);
    for (int i = 0; i < n; ++i) {
        int l = eta.folds.assignment[static_cast<size_t>(i)];
        for (int q = 0; q < oriv.q; ++q) {
            const Matrix& kap = oriv.kappa[static_cast<size_t>(l)][static_cast<size_t>(q)];
            psi(i, q) = m.row(i).dot(kap.row(i));
        }
    }
    return psi;
}

Matrix assemble_psi_pi(const PanelDataset& panel, const MomentSystem& system,
                       const Vector& theta_full, const Matrix& eta_values) {
    const int n = panel.n_firms();
    Matrix m = system.residuals(panel, theta_full, eta_values);
    auto instruments = system.pi_instruments();
    Matrix psi = Matrix::Zero(n, static_cast<Index>(instruments.size()));
    for (size_t s = 0; s < instruments.size(); ++s) {
        for (const auto& pr : system.pairs()) {
            Vector g = panel.var(instruments[s].var).col(pr.z_period);
            if (instruments[s].power != 1) g = g.array().pow(instruments[s].power);
            psi.col(static_cast<Index>(s)).array() += m.col(pr.st_j).array() * g.array();
        }
    }
    return psi;
}

double gmm_objective(const Vector& psi_bar, const Matrix* weighting) {
    if (!weighting) return psi_bar.squaredNorm();
    return psi_bar.dot(*weighting * psi_bar);
}

Matrix jacobian_fd(const std::function<Vector(const Vector&)>& fn, const Vector& theta,
                   double scale) {
    Vector probe = fn(theta);
    Matrix J(probe.size(), theta.size());
    for (Index k = 0; k < theta.size(); ++k) {
        double h = scale * (1.0 + std::fabs(theta[k]));
        Vector up = theta, dn = theta;
        up[k] += h;
        dn[k] -= h;
        Vector fu = fn(up), fd = fn(dn);
        if (!fu.allFinite() || !fd.allFinite())
            throw numeric_error("jacobian_fd: non-finite moment at perturbed point");
        J.col(k) = (fu - fd) / (2.0 * h);
    }
    return J;
}

ProfiledSolve solve_profiled(const ProfiledProblem& prob, const GmmOptions& opt,
                             const Matrix* weighting) {
    const MomentSystem& sys = *prob.system;
    const int p = sys.n_free();
    Vector free0(p);
    free0.setConstant(0.5 * (opt.bracket_lo + opt.bracket_hi));

    auto objective_with = [&](const std::pair<double, double>& prof, const Vector& free) {
        Vector th = sys.full_theta(free, prof.first, prof.second);
        return gmm_objective(prob.psi_bar(th), weighting);
    };

    ProfiledSolve out;
    if (opt.reprofile_in_search) {
        auto obj = [&](const Vector& free) {
            return objective_with(prob.profile(free), free);
        };
        if (p == 1) {
            auto sm = grid_then_golden([&](double x) { return obj(Vector::Constant(1, x)); },
                                       opt.bracket_lo, opt.bracket_hi, opt.grid_points,
                                       opt.golden_tol);
            Vector free = Vector::Constant(1, sm.x);
            auto prof = prob.profile(free);
            out.theta_full = sys.full_theta(free, prof.first, prof.second);
            out.objective = sm.value;
            out.boundary = sm.at_boundary;
        } else {
            auto nm = nelder_mead(obj, free0, opt.nm_scale, opt.nm_restarts, opt.seed);
            auto prof = prob.profile(nm.x);
            out.theta_full = sys.full_theta(nm.x, prof.first, prof.second);
            out.objective = nm.value;
        }
        return out;
    }

    // fixed-profile iteration: profile at the incumbent, minimize with the
    // profiled parameters held fixed, repeat
    Vector free = free0;
    std::pair<double, double> prof{0.0, 0.0};
    for (int it = 0; it < std::max(1, opt.profile_iterations); ++it) {
        prof = prob.profile(free);
        if (p == 1) {
            auto sm = grid_then_golden(
                [&](double x) { return objective_with(prof, Vector::Constant(1, x)); },
                opt.bracket_lo, opt.bracket_hi, opt.grid_points, opt.golden_tol);
            free = Vector::Constant(1, sm.x);
            out.objective = sm.value;
            out.boundary = sm.at_boundary;
        } else {
            auto nm = nelder_mead(
                [&](const Vector& x) { return objective_with(prof, x); }, free,
                opt.nm_scale, opt.nm_restarts, opt.seed);
            free = nm.x;
            out.objective = nm.value;
        }
    }
    out.theta_full = sys.full_theta(free, prof.first, prof.second);
    return out;
}

namespace {

// Cached per-pair columns so the inner GMM search avoids re-reading the panel.
struct PiEvaluator {
    struct Pair {
        Vector y_next, eta_t;
        Vector k_next, k_t, l_next, l_t;
        Matrix G;  // n x q instrument values at the conditioning period
    };
    std::vector<Pair> pairs;
    bool two_input = false;
    double n = 0;

    PiEvaluator(const PanelDataset& panel, const MomentSystem& system, const Matrix& eta_values) {
        two_input = system.kind == MomentSystem::Kind::cobb_douglas_two_input;
        n = panel.n_firms();
        auto instruments = system.pi_instruments();
        for (const auto& pr : system.pairs()) {
            Pair p;
            int t = pr.z_period;
            p.y_next = panel.var("Y").col(t + 1);
            p.eta_t = eta_values.col(t);
            p.k_next = panel.var("K").col(t + 1);
            p.k_t = panel.var("K").col(t);
            if (two_input) {
                p.l_next = panel.var("L").col(t + 1);
                p.l_t = panel.var("L").col(t);
            }
            p.G.resize(panel.n_firms(), static_cast<Index>(instruments.size()));
            for (size_t s = 0; s < instruments.size(); ++s) {
                Vector g = panel.var(instruments[s].var).col(t);
                if (instruments[s].power != 1) g = g.array().pow(instruments[s].power);
                p.G.col(static_cast<Index>(s)) = g;
            }
            pairs.push_back(std::move(p));
        }
    }

    Vector psi_bar(const Vector& th) const {
        const double th1 = th[0];
        const double thw = th[th.size() - 1];
        Vector out = Vector::Zero(pairs.front().G.cols());
        Vector m;
        for (const auto& p : pairs) {
            if (two_input) {
                m = p.y_next - (th1 + th[1] * p.l_next.array() + th[2] * p.k_next.array()).matrix() -
                    thw * (p.eta_t -
                           (th1 + th[1] * p.l_t.array() + th[2] * p.k_t.array()).matrix());
            } else {
                m = p.y_next - (th1 + th[1] * p.k_next.array()).matrix() -
                    thw * (p.eta_t - (th1 + th[1] * p.k_t.array()).matrix());
            }
            out.noalias() += p.G.transpose() * m;
        }
        return out / n;
    }
};

}  // namespace

Vector pi_point_estimate(const PanelDataset& panel, const MomentSystem& system,
                         const Matrix& eta_values, const std::vector<int>& rows,
                         const GmmOptions& opt) {
    std::optional<PanelDataset> sub;
    const PanelDataset* p = &panel;
    Matrix eta = eta_values;
    if (static_cast<int>(rows.size()) != panel.n_firms()) {
        sub = panel.take_firms(rows);
        p = &*sub;
        eta = rows_of(eta_values, rows);
    }
    PiEvaluator eval(*p, system, eta);
    ProfiledProblem prob;
    prob.system = &system;
    prob.psi_bar = [&](const Vector& th) -> Vector { return eval.psi_bar(th); };
    prob.profile = [&](const Vector& free) {
        return system.profile(*p, eta, free, opt.backsolve_intercept);
    };
    return solve_profiled(prob, opt, nullptr).theta_full;
}

PrelimEstimator make_pi_prelim(const PanelDataset& panel, const MomentSystem& system,
                               const GmmOptions& opt) {
    return [&panel, &system, opt](const std::vector<int>& train_rows,
                                  const Matrix& eta_insample) {
        return pi_point_estimate(panel, system, eta_insample, train_rows, opt);
    };
}

namespace {

Matrix psi_at_prelim(const PanelDataset& panel, const MomentSystem& system,
                     const CrossfitEta& eta, const OrivSet& oriv) {
    // Psi-hat ingredients: psi_il at the fold-level preliminary theta
    const int n = panel.n_firms();
    Matrix psi(n, oriv.q);
    for (int l = 0; l < eta.folds.L; ++l) {
        Matrix m =
            system.residuals(panel, oriv.prelim_theta[static_cast<size_t>(l)], eta.heldout);
        for (int i : eta.folds.fold(l))
            for (int q = 0; q < oriv.q; ++q)
                psi(i, q) = m.row(i).dot(
                    oriv.kappa[static_cast<size_t>(l)][static_cast<size_t>(q)].row(i));
    }
    return psi;
}

Matrix sandwich(const Matrix& upsilon, const Matrix& psi_hat, const Matrix* weighting) {
    const Index p = upsilon.cols();
    Matrix lam = weighting ? *weighting : Matrix::Identity(upsilon.rows(), upsilon.rows());
    Matrix bread = (upsilon.transpose() * lam * upsilon).inverse();
    Matrix meat = upsilon.transpose() * lam * psi_hat * lam * upsilon;
    Matrix sigma = bread * meat * bread;
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    (void)p;
    return sigma;
}

}  // namespace

DgmmResult minimize_gmm(const PanelDataset& panel, const FoldPlan& folds,
                        const MomentSystem& system, const CrossfitEta& eta, const OrivSet& oriv,
                        const GmmOptions& opt) {
    system.validate(panel);
    const int n = panel.n_firms();

    ProfiledProblem prob;
    prob.system = &system;
    prob.psi_bar = [&](const Vector& th) -> Vector {
        return assemble_psi(panel, system, th, eta, oriv).colwise().mean();
    };
    prob.profile = [&](const Vector& free) {
        return system.profile(panel, eta.heldout, free, opt.backsolve_intercept);
    };

    // Psi-hat at the fold-level preliminary estimates
    Matrix psi_pre = psi_at_prelim(panel, system, eta, oriv);
    Matrix Psi = psi_pre.transpose() * psi_pre / n;

    Matrix lam_optimal;
    const Matrix* weighting = nullptr;
    if (opt.weighting == GmmOptions::Weighting::optimal) {
        lam_optimal = Psi.inverse();
        weighting = &lam_optimal;
    }

    ProfiledSolve sol = solve_profiled(prob, opt, weighting);

    DgmmResult res;
    res.theta_full = sol.theta_full;
    res.theta_free = system.free_of(sol.theta_full);
    res.objective = sol.objective;
    res.boundary_warning = sol.boundary;
    res.psi_bar = prob.psi_bar(sol.theta_full);
    res.psi_bar_norm = res.psi_bar.norm();

    // Jacobian over the free parameters; the profiled pair is held fixed unless
    // total_jacobian asks for the full map.
    double th1 = sol.theta_full[0], thw = sol.theta_full[sol.theta_full.size() - 1];
    auto map_fixed = [&](const Vector& free) {
        return prob.psi_bar(system.full_theta(free, th1, thw));
    };
    auto map_total = [&](const Vector& free) {
        auto prof = prob.profile(free);
        return prob.psi_bar(system.full_theta(free, prof.first, prof.second));
    };
    Matrix upsilon =
        opt.total_jacobian
            ? jacobian_fd(map_total, res.theta_free, opt.fd_scale)
            : jacobian_fd(map_fixed, res.theta_free, opt.fd_scale);

    res.sigma = sandwich(upsilon, Psi, weighting);
    res.se.resize(res.sigma.rows());
    for (Index k = 0; k < res.sigma.rows(); ++k) {
        res.se[k] = std::sqrt(std::max(0.0, res.sigma(k, k)) / n);
        res.ci.emplace_back(res.theta_free[k] - kZ975 * res.se[k],
                            res.theta_free[k] + kZ975 * res.se[k]);
    }
    return res;
}

DgmmResult estimate_naive_pi(const PanelDataset& panel, const FoldPlan& folds,
                             const MomentSystem& system, const CrossfitEta& eta,
                             const RegressorSpec& refit_spec, int bootstrap_B, uint64_t seed,
                             const GmmOptions& opt, int workers) {
    system.validate(panel);
    require(bootstrap_B >= 50, "estimate_naive_pi: bootstrap size must be >= 50");
    const int n = panel.n_firms();
    std::vector<int> all(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;

    DgmmResult res;
    res.theta_full = pi_point_estimate(panel, system, eta.heldout, all, opt);
    res.theta_free = system.free_of(res.theta_full);
    {
        Vector pb = assemble_psi_pi(panel, system, res.theta_full, eta.heldout).colwise().mean();
        res.psi_bar = pb;
        res.psi_bar_norm = pb.norm();
        res.objective = pb.squaredNorm();
    }

    // firm-level nonparametric bootstrap; the first stage is refit per resample
    const int p = system.n_free();
    Matrix draws(bootstrap_B, p);
    std::vector<char> ok(static_cast<size_t>(bootstrap_B), 0);
    auto targets = system.eta_targets();
    GmmOptions draw_opt = opt;
    draw_opt.grid_points = opt.bootstrap_grid_points;
    draw_opt.golden_tol = opt.bootstrap_golden_tol;
    parallel_for(bootstrap_B, workers, [&](int b) {
        Rng rng(Rng::derive(seed, static_cast<uint64_t>(b)));
        std::vector<int> idx(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = rng.uniform_int(n);
        try {
            PanelDataset pb = panel.take_firms(idx);
            FoldPlan fb = make_folds(n, folds.L, Rng::derive(seed, 0x700000ULL + b));
            CrossfitEta eb = crossfit_eta(pb, fb, refit_spec, targets,
                                          Rng::derive(seed, 0x800000ULL + b));
            std::vector<int> allb(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) allb[static_cast<size_t>(i)] = i;
            Vector th = pi_point_estimate(pb, system, eb.heldout, allb, draw_opt);
            draws.row(b) = system.free_of(th).transpose();
            ok[static_cast<size_t>(b)] = 1;
        } catch (const std::exception&) {
            ok[static_cast<size_t>(b)] = 0;
        }
    });
    int good = 0;
    Vector mean = Vector::Zero(p);
    for (int b = 0; b < bootstrap_B; ++b)
        if (ok[static_cast<size_t>(b)]) {
            ++good;
            mean += draws.row(b).transpose();
        }
    res.bootstrap_skips = bootstrap_B - good;
    if (res.bootstrap_skips * 10 > bootstrap_B)
        throw numeric_error("estimate_naive_pi: more than 10% of bootstrap resamples failed");
    mean /= good;
    Vector var = Vector::Zero(p);
    for (int b = 0; b < bootstrap_B; ++b)
        if (ok[static_cast<size_t>(b)])
            var += (draws.row(b).transpose() - mean).array().square().matrix();
    var /= good;

    res.sigma = (var * n).asDiagonal();
    res.se.resize(p);
    for (int k = 0; k < p; ++k) {
        res.se[k] = std::sqrt(var[k]);
        res.ci.emplace_back(res.theta_free[k] - kZ975 * res.se[k],
                            res.theta_free[k] + kZ975 * res.se[k]);
    }

    // first-stage-ignoring sandwich, reported for comparison only
    {
        Matrix psim = assemble_psi_pi(panel, system, res.theta_full, eta.heldout);
        Matrix Psi = psim.transpose() * psim / n -
                     (psim.colwise().mean().transpose() * psim.colwise().mean());
        double th1 = res.theta_full[0], thw = res.theta_full[res.theta_full.size() - 1];
        auto map_fixed = [&](const Vector& free) -> Vector {
            return assemble_psi_pi(panel, system, system.full_theta(free, th1, thw), eta.heldout)
                .colwise()
                .mean();
        };
        Matrix upsilon = jacobian_fd(map_fixed, res.theta_free, opt.fd_scale);
        Matrix sig = sandwich(upsilon, Psi, nullptr);
        res.se_naive.resize(p);
        for (int k = 0; k < p; ++k)
            res.se_naive[k] = std::sqrt(std::max(0.0, sig(k, k)) / n);
    }
    return res;
}

std::string DgmmResult::to_json(const std::vector<std::string>& names) const {
    nlohmann::json j;
    for (size_t k = 0; k < names.size(); ++k) {
        j["theta"][names[k]] = theta_free[static_cast<Index>(k)];
        j["se"][names[k]] = se[static_cast<Index>(k)];
        j["ci"][names[k]] = {ci[k].first, ci[k].second};
    }
    j["objective"] = objective;
    j["diagnostics"]["psi_bar_norm"] = psi_bar_norm;
    j["diagnostics"]["boundary_warning"] = boundary_warning;
    j["diagnostics"]["bootstrap_skips"] = bootstrap_skips;
    if (se_naive.size() > 0) {
        for (size_t k = 0; k < names.size(); ++k)
            j["diagnostics"]["se_naive"][names[k]] = se_naive[static_cast<Index>(k)];
    }
    return j.dump(2);
}

std::string DgmmResult::csv_header(const std::vector<std::string>& names) const {
    std::ostringstream os;
    for (size_t k = 0; k < names.size(); ++k) {
        if (k) os << ",";
        os << names[k] << "," << names[k] << "_se," << names[k] << "_lo," << names[k] << "_hi";
    }
    os << ",objective";
    return os.str();
}

std::string DgmmResult::csv_row() const {
    std::ostringstream os;
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        os << buf;
    };
    for (Index k = 0; k < theta_free.size(); ++k) {
        if (k) os << ",";
        put(theta_free[k]);
        os << ",";
        put(se[k]);
        os << ",";
        put(ci[static_cast<size_t>(k)].first);
        os << ",";
        put(ci[static_cast<size_t>(k)].second);
    }
    os << ",";
    put(objective);
    return os.str();
}

}  // namespace oriv
