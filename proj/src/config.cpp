#include "oriv/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace oriv {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct KeyValue {
    std::map<std::string, std::string> entries;  // "section.key" -> value

    bool get(const std::string& key, std::string& out) const {
        auto it = entries.find(key);
        if (it == entries.end()) return false;
        out = it->second;
        return true;
    }
    template <class T>
    void num(const std::string& key, T& out) const {
        std::string s;
        if (!get(key, s)) return;
        std::istringstream is(s);
        T v{};
        if (!(is >> v)) throw config_error("config: bad numeric value for " + key + ": " + s);
        out = v;
    }
    void flag(const std::string& key, bool& out) const {
        std::string s;
        if (!get(key, s)) return;
        if (s == "true" || s == "1" || s == "yes")
            out = true;
        else if (s == "false" || s == "0" || s == "no")
            out = false;
        else
            throw config_error("config: bad boolean for " + key + ": " + s);
    }
};

}  // namespace

void RunConfig::apply_fast_mode() {
    first_stage.kind = RegressorSpec::Kind::ridge_basis;
    mc_reps = std::min(mc_reps, 200);
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    KeyValue kv;
    std::string line, section;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        kv.entries[section.empty() ? key : section + "." + key] = val;
    }

    kv.num("simulate.n", cfg.sim_n);
    kv.num("simulate.theta_1", cfg.dgp.theta_1);
    kv.num("simulate.theta_k", cfg.dgp.theta_k);
    kv.num("simulate.theta_omega", cfg.dgp.theta_omega);
    kv.num("simulate.sigma_omega", cfg.dgp.sigma_omega);
    kv.num("simulate.one_minus_delta", cfg.dgp.one_minus_delta);
    kv.num("simulate.gamma_0", cfg.dgp.gamma_0);
    kv.num("simulate.gamma_1", cfg.dgp.gamma_1);
    kv.num("simulate.gamma_2", cfg.dgp.gamma_2);
    kv.num("simulate.mu_log_mean", cfg.dgp.mu_log_mean);
    kv.num("simulate.mu_log_sd", cfg.dgp.mu_log_sd);
    kv.num("simulate.invest_shock_sd", cfg.dgp.invest_shock_sd);
    kv.num("simulate.eps_sd", cfg.dgp.eps_sd);
    kv.num("simulate.burn_in", cfg.dgp.burn_in);
    kv.num("simulate.keep_periods", cfg.dgp.keep_periods);

    std::string kind;
    if (kv.get("first_stage.kind", kind)) {
        if (kind == "gbt" || kind == "gradient_boosted_trees")
            cfg.first_stage.kind = RegressorSpec::Kind::gradient_boosted_trees;
        else if (kind == "ridge" || kind == "ridge_basis")
            cfg.first_stage.kind = RegressorSpec::Kind::ridge_basis;
        else
            throw config_error("config: unknown first_stage.kind " + kind);
    }
    kv.num("first_stage.n_trees", cfg.first_stage.n_trees);
    kv.num("first_stage.predict_trees", cfg.first_stage.predict_trees);
    kv.num("first_stage.depth", cfg.first_stage.depth);
    kv.num("first_stage.min_node", cfg.first_stage.min_node);
    kv.num("first_stage.shrinkage", cfg.first_stage.shrinkage);
    kv.num("first_stage.bag_fraction", cfg.first_stage.bag_fraction);
    kv.num("first_stage.train_fraction", cfg.first_stage.train_fraction);
    kv.num("first_stage.ridge", cfg.first_stage.ridge);
    kv.num("first_stage.basis_width", cfg.first_stage.basis_width);
    kv.num("first_stage.clamp", cfg.first_stage.clamp);
    kv.num("first_stage.shrink_to_mean", cfg.first_stage.shrink_to_mean);

    kv.num("oriv.c1", cfg.oriv.penalty.c1);
    kv.num("oriv.c2", cfg.oriv.penalty.c2);
    kv.num("oriv.c2_scale", cfg.oriv.penalty.c2_scale);
    kv.num("oriv.max_iterations", cfg.oriv.penalty.max_iterations);
    kv.num("oriv.rel_tol", cfg.oriv.penalty.rel_tol);
    kv.num("oriv.cd_tol", cfg.oriv.penalty.cd_tol);
    kv.num("oriv.cd_max_sweeps", cfg.oriv.penalty.cd_max_sweeps);
    kv.num("oriv.loading_floor", cfg.oriv.penalty.loading_floor);
    kv.num("oriv.dict_width", cfg.oriv.dict_width);
    kv.num("oriv.clamp", cfg.oriv.clamp);
    kv.num("oriv.low_count", cfg.oriv.low_count);

    std::string weighting;
    if (kv.get("gmm.weighting", weighting)) {
        if (weighting == "identity")
            cfg.gmm.weighting = GmmOptions::Weighting::identity;
        else if (weighting == "optimal")
            cfg.gmm.weighting = GmmOptions::Weighting::optimal;
        else
            throw config_error("config: unknown gmm.weighting " + weighting);
    }
    kv.num("gmm.bracket_lo", cfg.gmm.bracket_lo);
    kv.num("gmm.bracket_hi", cfg.gmm.bracket_hi);
    kv.num("gmm.grid_points", cfg.gmm.grid_points);
    kv.num("gmm.golden_tol", cfg.gmm.golden_tol);
    kv.num("gmm.profile_iterations", cfg.gmm.profile_iterations);
    kv.flag("gmm.reprofile_in_search", cfg.gmm.reprofile_in_search);
    kv.flag("gmm.backsolve_intercept", cfg.gmm.backsolve_intercept);
    kv.flag("gmm.total_jacobian", cfg.gmm.total_jacobian);
    kv.num("gmm.nm_restarts", cfg.gmm.nm_restarts);
    kv.num("gmm.nm_scale", cfg.gmm.nm_scale);
    kv.num("gmm.fd_scale", cfg.gmm.fd_scale);

    kv.num("montecarlo.n", cfg.mc_n);
    kv.num("montecarlo.reps", cfg.mc_reps);
    kv.num("montecarlo.folds", cfg.L);
    kv.num("montecarlo.bootstrap_B", cfg.bootstrap_B);
    kv.num("montecarlo.histogram_bins", cfg.histogram_bins);
    kv.get("montecarlo.estimators", cfg.estimators);

    std::string grid;
    if (kv.get("lasso_check.grid", grid)) {
        cfg.lasso_grid.clear();
        std::istringstream is(grid);
        int v;
        while (is >> v) {
            cfg.lasso_grid.push_back(v);
            if (is.peek() == ',') is.get();
        }
        if (cfg.lasso_grid.empty()) throw config_error("config: empty lasso_check.grid");
    }
    kv.num("lasso_check.reps", cfg.lasso_reps);
    kv.num("lasso_check.c1", cfg.lasso.c1);
    kv.num("lasso_check.c2_scale", cfg.lasso.c2_scale);
    kv.num("lasso_check.dim", cfg.lasso.dim);
    kv.num("lasso_check.noise_sd", cfg.lasso.noise_sd);

    kv.get("estimate.model", cfg.model);
    kv.get("estimate.firm_col", cfg.firm_col);
    kv.get("estimate.period_col", cfg.period_col);
    kv.get("estimate.y_col", cfg.y_col);
    kv.get("estimate.k_col", cfg.k_col);
    kv.get("estimate.i_col", cfg.i_col);
    kv.get("estimate.l_col", cfg.l_col);
    kv.get("estimate.e_col", cfg.e_col);

    kv.num("seed", cfg.seed);
    kv.num("workers", cfg.workers);
    kv.get("out_dir", cfg.out_dir);
}

}  // namespace oriv
