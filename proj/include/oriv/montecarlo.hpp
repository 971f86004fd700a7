#pragma once

#include <string>
#include <vector>

#include "oriv/dgmm.hpp"
#include "oriv/panel.hpp"

namespace oriv {

// Production-function data generating process. Defaults are the baseline
// no-investment-shock design; invest_shock_sd 0.5 / 0.7 give the two
// misspecified variants.
struct DgpConfig {
    double theta_1 = 0.0;
    double theta_k = 1.0;
    double theta_omega = 0.7;
    double sigma_omega = 0.1;
    double one_minus_delta = 0.9;
    double gamma_0 = 0.0;
    double gamma_1 = -0.7;
    double gamma_2 = 5.0;
    double mu_log_mean = 1.0;
    double mu_log_sd = 1.0;
    double invest_shock_sd = 0.0;
    double eps_sd = 1.0;  // output noise; not pinned by the reference design
    int burn_in = 100;
    int keep_periods = 3;

    void check() const;
};

// Panel with variables Y, K, I plus the latent "omega" (kept for diagnostics
// and oracle tests; estimators never read it).
PanelDataset simulate_dgp(const DgpConfig& cfg, int n, uint64_t seed);

struct McEstimatorReport {
    double bias = 0.0;
    double mean_se = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;
    double coverage_mc_se = 0.0;  // binomial sqrt(p(1-p)/reps)
};

struct RepRecord {
    bool ok = false;
    std::string error;
    double theta_pi = 0.0, se_pi = 0.0;
    double theta_dgmm = 0.0, se_dgmm = 0.0;
    bool hit_pi = false, hit_dgmm = false;
};

struct McReport {
    int reps = 0;
    int failures = 0;
    McEstimatorReport pi, dgmm;
    std::vector<RepRecord> records;
};

struct McOptions {
    int L = 5;
    RegressorSpec first_stage;         // paper settings by default
    OrivOptions oriv;
    GmmOptions gmm;
    int bootstrap_B = 200;
    bool run_pi = true;
    bool run_dgmm = true;
    int workers = 1;
};

McReport run_experiment(const DgpConfig& cfg, int n, int reps, const McOptions& opt,
                        uint64_t seed);

// One replication on a given panel (also used by the estimate command).
RepRecord run_single(const PanelDataset& panel, const MomentSystem& system, const McOptions& opt,
                     uint64_t seed, double truth_k, DgmmResult* dgmm_out = nullptr,
                     DgmmResult* pi_out = nullptr);

struct LassoOracleOptions {
    double c1 = 1.1;
    double c2_scale = 30.0;  // c2 = scale / log(n v r); see ledger
    int dim = 100;
    int n_equations = 2;
    int low_count = 5;
    double noise_sd = 1.0;
    double perturb_exponent = -0.4;  // generated regressors X + n^exponent
    int workers = 1;
};

struct LassoOracleResult {
    double mean_mse = 0.0;
    double selection_rate = 0.0;  // active set exactly the true support
};

LassoOracleResult lasso_oracle_check(int n, int reps, uint64_t seed,
                                     const LassoOracleOptions& opt);

// Standardized-estimate histogram: values are (theta-hat - theta0)/sd over the
// replication set; throws if sd is zero.
struct Histogram {
    double lo = 0.0, hi = 0.0;
    std::vector<int> counts;
    double mean_standardized = 0.0;
};
Histogram histogram_export(const std::vector<double>& estimates, double truth, int bins);

}  // namespace oriv
