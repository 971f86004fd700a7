#pragma once

#include <functional>
#include <vector>

#include "oriv/basis.hpp"
#include "oriv/first_stage.hpp"
#include "oriv/lasso.hpp"
#include "oriv/moments.hpp"
#include "oriv/panel.hpp"

namespace oriv {

// Generated design matrices for one fold. Under the shared-beta restriction the
// effective regressors collapse to one r-column block per CMR:
//   M_fs  = (1 + theta_w) * gamma(Z_t)
//   M_st  = theta_w * M_fs
struct GeneratedDesign {
    double theta_omega = 0.0;
    int r = 0;
    std::vector<Dictionary> dicts;  // one per CMR pair, fitted on training rows
    std::vector<Matrix> M_train;    // per CMR j, training rows only
    std::vector<Matrix> M_all;      // per CMR j, every firm (training standardization)
};

GeneratedDesign build_design_production(const PanelDataset& panel,
                                        const std::vector<int>& train_rows,
                                        const MomentSystem& system, double theta_omega,
                                        int dict_width = 0, double clamp = 3.0);

// General design of Eq-style nested conditional expectations, for CMRs whose
// derivative directions need estimated reduced forms. gamma_all[j] are the
// dictionary columns of CMR j for every firm; nu_a/nu_b are the nu-tilde values
// (n x d_eta) at the subsample-A and subsample-B estimates. The inner CE is fit
// on rows_b against V, the outer on rows_c against Z[j]. Returns one
// n x (sum_j r_j) matrix per CMR.
struct GeneralDesignInputs {
    std::vector<Matrix> gamma_all;
    std::vector<Matrix> nu_a;
    std::vector<Matrix> nu_b;
    Matrix V;
    std::vector<Matrix> Z;
    RegressorSpec ce;
    uint64_t seed = 0;
};

std::vector<Matrix> build_design_general(const GeneralDesignInputs& in,
                                         const std::vector<int>& rows_b,
                                         const std::vector<int>& rows_c);

// Collapse equal-size per-CMR coefficient blocks under beta_j = beta.
Matrix collapse_shared_beta(const Matrix& design, int blocks);

// Split rows into three near-equal parts, deterministically in seed.
std::array<std::vector<int>, 3> split_three(const std::vector<int>& rows, uint64_t seed);

// Preliminary (non-LR) estimator evaluated on a training subsample; returns the
// full theta vector. eta_insample holds the fold model's predictions for every
// firm.
using PrelimEstimator =
    std::function<Vector(const std::vector<int>& train_rows, const Matrix& eta_insample)>;

struct OrivOptions {
    PenalizedFitOptions penalty;
    int dict_width = 0;  // 0: width rule (2 vars) or 5 per variable (3 vars)
    double clamp = 3.0;
    int low_count = 5;
};

struct OrivSet {
    int q = 0;
    int J = 0;
    std::vector<std::vector<Matrix>> kappa;   // [L][q], each n_firms x J
    std::vector<Vector> prelim_theta;         // [L] full theta from the preliminary fit
    std::vector<double> lambda;               // [L]
    std::vector<std::vector<Vector>> beta;    // [L][q]
    std::vector<std::vector<Vector>> loadings;  // [L][q]
    std::vector<std::vector<int>> iterations;   // [L][q]
};

OrivSet estimate_orivs(const PanelDataset& panel, const FoldPlan& folds,
                       const MomentSystem& system, const CrossfitEta& eta,
                       const std::vector<InstrumentVector>& menu, const OrivOptions& opts,
                       const PrelimEstimator& prelim);

}  // namespace oriv
