#include "oriv/oriv.hpp"

#include <cmath>

#include "oriv/rng.hpp"

namespace oriv {

GeneratedDesign build_design_production(const PanelDataset& panel,
                                        const std::vector<int>& train_rows,
                                        const MomentSystem& system, double theta_omega,
                                        int dict_width, double clamp) {
    if (!std::isfinite(theta_omega))
        throw numeric_error("build_design_production: non-finite preliminary theta_omega");
    GeneratedDesign out;
    out.theta_omega = theta_omega;
    auto prs = system.pairs();
    out.M_train.resize(static_cast<size_t>(system.J()));
    out.M_all.resize(static_cast<size_t>(system.J()));
    for (const auto& pr : prs) {
        Matrix Xall = conditioner_matrix(panel, pr.z_vars, pr.z_period);
        Matrix Xtr = rows_of(Xall, train_rows);
        int w = dict_width > 0
                    ? dict_width
                    : (Xall.cols() == 2 ? default_dictionary_width(static_cast<int>(Xtr.rows()))
                                        : 5);
        Dictionary dict =
            fit_dictionary(Xtr, std::vector<int>(static_cast<size_t>(Xall.cols()), w), clamp);
        Matrix gamma_all = dict.eval(Xall);
        out.M_all[static_cast<size_t>(pr.fs_j)] = (1.0 + theta_omega) * gamma_all;
        out.M_all[static_cast<size_t>(pr.st_j)] =
            theta_omega * out.M_all[static_cast<size_t>(pr.fs_j)];
        out.M_train[static_cast<size_t>(pr.fs_j)] =
            rows_of(out.M_all[static_cast<size_t>(pr.fs_j)], train_rows);
        out.M_train[static_cast<size_t>(pr.st_j)] =
            theta_omega * out.M_train[static_cast<size_t>(pr.fs_j)];
        out.dicts.push_back(std::move(dict));
        out.r = static_cast<int>(gamma_all.cols());
    }
    for (const auto& m : out.M_all)
        if (!m.allFinite()) throw numeric_error("build_design_production: non-finite design");
    return out;
}

namespace {

Vector fit_predict_ce(const Matrix& Xall, const Vector& yall, const std::vector<int>& fit_rows,
                      const RegressorSpec& spec, uint64_t seed) {
    Matrix Xtr = rows_of(Xall, fit_rows);
    Vector ytr = entries_of(yall, fit_rows);
    if (spec.kind == RegressorSpec::Kind::gradient_boosted_trees) {
        GbtModel m = fit_gbt(Xtr, ytr, spec, seed);
        return m.predict(Xall);
    }
    int w = spec.basis_width > 0 ? spec.basis_width
                                 : default_dictionary_width(static_cast<int>(Xtr.rows()));
    Dictionary d =
        fit_dictionary(Xtr, std::vector<int>(static_cast<size_t>(Xtr.cols()), w), spec.clamp);
    RidgeBasisModel m = fit_ridge_basis(Xtr, ytr, d, spec.ridge);
    return m.predict(Xall);
}

}  // namespace

std::vector<Matrix> build_design_general(const GeneralDesignInputs& in,
                                         const std::vector<int>& rows_b,
                                         const std::vector<int>& rows_c) {
    if (rows_b.empty() || rows_c.empty())
        throw numeric_error("build_design_general: empty A/B/C split part");
    const int J = static_cast<int>(in.gamma_all.size());
    const Index n = in.V.rows();
    const Index d_eta = in.nu_a.at(0).cols();

    // inner regressions: for each (j', k, s) with nonzero nu component,
    // E_B[nu_{j',s} * gamma_{j'k} | V]
    int r_total = 0;
    for (const auto& g : in.gamma_all) r_total += static_cast<int>(g.cols());

    // alpha[j'][s] is an n x r_{j'} matrix of inner predictions (zero when the
    // nu component is identically zero)
    std::vector<std::vector<Matrix>> alpha(static_cast<size_t>(J));
    uint64_t tick = 0;
    for (int jp = 0; jp < J; ++jp) {
        const Matrix& g = in.gamma_all[static_cast<size_t>(jp)];
        alpha[static_cast<size_t>(jp)].assign(static_cast<size_t>(d_eta),
                                              Matrix::Zero(n, g.cols()));
        for (Index s = 0; s < d_eta; ++s) {
            Vector nu = in.nu_a[static_cast<size_t>(jp)].col(s);
            if (nu.cwiseAbs().maxCoeff() == 0.0) continue;
            for (Index k = 0; k < g.cols(); ++k) {
                Vector resp = nu.array() * g.col(k).array();
                alpha[static_cast<size_t>(jp)][static_cast<size_t>(s)].col(k) = fit_predict_ce(
                    in.V, resp, rows_b, in.ce, Rng::derive(in.seed, 0x10000ULL + tick++));
            }
        }
    }

    std::vector<Matrix> out(static_cast<size_t>(J));
    for (int j = 0; j < J; ++j) {
        out[static_cast<size_t>(j)].resize(n, r_total);
        Index col0 = 0;
        for (int jp = 0; jp < J; ++jp) {
            const Index rj = in.gamma_all[static_cast<size_t>(jp)].cols();
            for (Index k = 0; k < rj; ++k) {
                // response_i = sum_s alpha_s(V_i) * nu_b[j](i, s)
                Vector resp = Vector::Zero(n);
                for (Index s = 0; s < d_eta; ++s) {
                    const Matrix& a = alpha[static_cast<size_t>(jp)][static_cast<size_t>(s)];
                    if (a.col(k).cwiseAbs().maxCoeff() == 0.0 &&
                        in.nu_a[static_cast<size_t>(jp)].col(s).cwiseAbs().maxCoeff() == 0.0)
                        continue;
                    resp.array() +=
                        a.col(k).array() * in.nu_b[static_cast<size_t>(j)].col(s).array();
                }
                if (resp.cwiseAbs().maxCoeff() == 0.0) {
                    out[static_cast<size_t>(j)].col(col0 + k).setZero();
                    continue;
                }
                out[static_cast<size_t>(j)].col(col0 + k) =
                    fit_predict_ce(in.Z[static_cast<size_t>(j)], resp, rows_c, in.ce,
                                   Rng::derive(in.seed, 0x20000ULL + tick++));
            }
            col0 += rj;
        }
    }
    return out;
}

Matrix collapse_shared_beta(const Matrix& design, int blocks) {
    require(blocks >= 1 && design.cols() % blocks == 0,
            "collapse_shared_beta: column count not a multiple of block count");
    const Index r = design.cols() / blocks;
    Matrix out = Matrix::Zero(design.rows(), r);
    for (int b = 0; b < blocks; ++b) out += design.middleCols(b * r, r);
    return out;
}

std::array<std::vector<int>, 3> split_three(const std::vector<int>& rows, uint64_t seed) {
    std::vector<int> shuffled = rows;
    Rng rng(seed);
    rng.shuffle(shuffled);
    std::array<std::vector<int>, 3> out;
    const size_t n = shuffled.size();
    for (size_t i = 0; i < n; ++i) out[i % 3].push_back(shuffled[i]);
    for (auto& part : out) std::sort(part.begin(), part.end());
    return out;
}

OrivSet estimate_orivs(const PanelDataset& panel, const FoldPlan& folds,
                       const MomentSystem& system, const CrossfitEta& eta,
                       const std::vector<InstrumentVector>& menu, const OrivOptions& opts,
                       const PrelimEstimator& prelim) {
    require(!menu.empty(), "estimate_orivs: instrument menu is empty");
    OrivSet out;
    out.q = static_cast<int>(menu.size());
    out.J = system.J();
    out.kappa.resize(static_cast<size_t>(folds.L));
    out.beta.resize(static_cast<size_t>(folds.L));
    out.loadings.resize(static_cast<size_t>(folds.L));
    out.iterations.resize(static_cast<size_t>(folds.L));
    out.lambda.resize(static_cast<size_t>(folds.L));
    out.prelim_theta.resize(static_cast<size_t>(folds.L));

    // instrument values once; finiteness is part of the menu contract
    std::vector<Matrix> f_all;
    for (const auto& f : menu) {
        f_all.push_back(instrument_values(panel, f));
        if (!f_all.back().allFinite())
            throw numeric_error("estimate_orivs: non-finite instrument values");
    }

    for (int l = 0; l < folds.L; ++l) {
        auto train = folds.complement(l);
        Vector theta_pre;
        try {
            theta_pre = prelim(train, eta.per_fold[static_cast<size_t>(l)]);
        } catch (const std::exception& e) {
            throw numeric_error("estimate_orivs: preliminary estimate failed for fold " +
                                std::to_string(l) + ": " + e.what());
        }
        out.prelim_theta[static_cast<size_t>(l)] = theta_pre;
        double theta_omega = theta_pre[theta_pre.size() - 1];

        GeneratedDesign design;
        try {
            design = build_design_production(panel, train, system, theta_omega, opts.dict_width,
                                             opts.clamp);
        } catch (const std::exception& e) {
            throw numeric_error("estimate_orivs: design build failed for fold " +
                                std::to_string(l) + ": " + e.what());
        }

        PenalizedFitOptions pf = opts.penalty;
        if (pf.low_indices.empty())
            for (int k = 0; k < std::min(opts.low_count, design.r); ++k)
                pf.low_indices.push_back(k);

        out.kappa[static_cast<size_t>(l)].resize(static_cast<size_t>(out.q));
        for (int q = 0; q < out.q; ++q) {
            MultiEqDesign d;
            d.M = design.M_train;
            for (int j = 0; j < out.J; ++j)
                d.f.push_back(entries_of(f_all[static_cast<size_t>(q)].col(j), train));
            PenalizedFit fit;
            try {
                fit = fit_penalized(d, pf);
            } catch (const std::exception& e) {
                throw numeric_error("estimate_orivs: solve failed for fold " + std::to_string(l) +
                                    ", instrument " + std::to_string(q) + ": " + e.what());
            }
            out.lambda[static_cast<size_t>(l)] = fit.lambda;
            out.beta[static_cast<size_t>(l)].push_back(fit.beta);
            out.loadings[static_cast<size_t>(l)].push_back(fit.loadings);
            out.iterations[static_cast<size_t>(l)].push_back(fit.iterations);

            Matrix kappa(panel.n_firms(), out.J);
            for (int j = 0; j < out.J; ++j)
                kappa.col(j) = f_all[static_cast<size_t>(q)].col(j) -
                               design.M_all[static_cast<size_t>(j)] * fit.beta;
            if (!kappa.allFinite())
                throw numeric_error("estimate_orivs: non-finite residuals for fold " +
                                    std::to_string(l));
            out.kappa[static_cast<size_t>(l)][static_cast<size_t>(q)] = std::move(kappa);
        }
    }
    return out;
}

}  // namespace oriv
