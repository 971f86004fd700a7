#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oriv/first_stage.hpp"
#include "oriv/moments.hpp"
#include "oriv/oriv.hpp"
#include "oriv/panel.hpp"

namespace oriv {

struct GmmOptions {
    enum class Weighting { identity, optimal };
    Weighting weighting = Weighting::identity;

    double bracket_lo = 0.0, bracket_hi = 2.0;
    int grid_points = 101;
    double golden_tol = 1e-8;

    // AR(1) profiling of (theta_1, theta_omega)
    int profile_iterations = 3;
    bool reprofile_in_search = false;   // recompute the profile at every candidate
    bool backsolve_intercept = false;   // theta_1 = c~/(1-theta_w) instead of c~
    bool total_jacobian = false;        // FD through the profiling map

    int nm_restarts = 3;
    double nm_scale = 0.25;
    uint64_t seed = 0;
    double fd_scale = 1e-5;

    // cheaper search inside bootstrap resamples
    int bootstrap_grid_points = 51;
    double bootstrap_golden_tol = 1e-6;
};

constexpr double kZ975 = 1.959963984540054;

struct DgmmResult {
    Vector theta_free;
    Vector theta_full;
    Matrix sigma;    // asymptotic covariance of the free parameters
    Vector se;       // sqrt(diag(sigma)/n)
    std::vector<std::pair<double, double>> ci;
    double objective = 0.0;
    Vector psi_bar;
    double psi_bar_norm = 0.0;
    bool boundary_warning = false;
    int bootstrap_skips = 0;
    Vector se_naive;  // PI only: sandwich ignoring the first stage

    std::string to_json(const std::vector<std::string>& names) const;
    std::string csv_header(const std::vector<std::string>& names) const;
    std::string csv_row() const;
};

// Debiased moment values, one row per firm: psi_iq = sum_j m_ij * kappa_jq,
// with fold-l nuisances for firms in I_l.
Matrix assemble_psi(const PanelDataset& panel, const MomentSystem& system,
                    const Vector& theta_full, const CrossfitEta& eta, const OrivSet& oriv);

// Plug-in moment values with the fixed instrument patterns (structural CMRs).
Matrix assemble_psi_pi(const PanelDataset& panel, const MomentSystem& system,
                       const Vector& theta_full, const Matrix& eta_values);

double gmm_objective(const Vector& psi_bar, const Matrix* weighting);

// Central finite-difference Jacobian, h_k = scale*(1+|theta_k|).
Matrix jacobian_fd(const std::function<Vector(const Vector&)>& fn, const Vector& theta,
                   double scale = 1e-5);

// Profiled GMM solve shared by PI and DGMM: the moment map runs over the free
// parameters with (theta_1, theta_omega) supplied by the profiling map.
struct ProfiledProblem {
    std::function<Vector(const Vector& theta_full)> psi_bar;
    std::function<std::pair<double, double>(const Vector& free)> profile;
    const MomentSystem* system = nullptr;
};
struct ProfiledSolve {
    Vector theta_full;
    double objective = 0.0;
    bool boundary = false;
};
ProfiledSolve solve_profiled(const ProfiledProblem& prob, const GmmOptions& opt,
                             const Matrix* weighting);

// PI point estimate on a row subset (the preliminary estimator of the OR-IV
// algorithm and the final plug-in benchmark). eta_values: n x (T-1).
Vector pi_point_estimate(const PanelDataset& panel, const MomentSystem& system,
                         const Matrix& eta_values, const std::vector<int>& rows,
                         const GmmOptions& opt);

PrelimEstimator make_pi_prelim(const PanelDataset& panel, const MomentSystem& system,
                               const GmmOptions& opt);

DgmmResult minimize_gmm(const PanelDataset& panel, const FoldPlan& folds,
                        const MomentSystem& system, const CrossfitEta& eta, const OrivSet& oriv,
                        const GmmOptions& opt);

// Plug-in estimator with firm-level bootstrap standard errors; the first stage
// is refit on every resample.
DgmmResult estimate_naive_pi(const PanelDataset& panel, const FoldPlan& folds,
                             const MomentSystem& system, const CrossfitEta& eta,
                             const RegressorSpec& refit_spec, int bootstrap_B, uint64_t seed,
                             const GmmOptions& opt, int workers = 1);

}  // namespace oriv
