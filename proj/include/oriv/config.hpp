#pragma once

#include <string>
#include <vector>

#include "oriv/montecarlo.hpp"

namespace oriv {

// All run settings with paper defaults; a flat INI-style config file and CLI
// flags override them (flags beat file beats defaults).
struct RunConfig {
    // [simulate]
    DgpConfig dgp;
    int sim_n = 1000;

    // [first_stage]
    RegressorSpec first_stage;  // GBT with the reference settings by default

    // [oriv]
    OrivOptions oriv;

    // [gmm]
    GmmOptions gmm;

    // [montecarlo]
    int mc_n = 1000;
    int mc_reps = 500;
    int L = 5;
    int bootstrap_B = 200;
    int histogram_bins = 20;
    std::string estimators = "both";  // both | pi | dgmm

    // [lasso_check]
    std::vector<int> lasso_grid = {500, 1000, 5000, 10000};
    int lasso_reps = 200;
    LassoOracleOptions lasso;

    // [estimate]
    std::string model = "capital_only";  // or cobb_douglas_two_input
    std::string firm_col = "firm_id", period_col = "period";
    std::string y_col = "Y", k_col = "K", i_col = "I", l_col = "L", e_col = "E";

    // shared
    uint64_t seed = 81;
    int workers = 1;
    std::string out_dir = ".";
    bool fast = false;
    bool histogram = false;

    void apply_fast_mode();
};

// Parse "key = value" lines under [section] headers; '#' starts a comment.
void apply_config_file(RunConfig& cfg, const std::string& path);

int cmd_simulate(const RunConfig& cfg, const std::string& panel_out);
int cmd_estimate(const RunConfig& cfg, const std::string& panel_path);
int cmd_montecarlo(const RunConfig& cfg);
int cmd_lasso_check(const RunConfig& cfg);

int cli_main(const std::vector<std::string>& args);

}  // namespace oriv
