#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "oriv/config.hpp"
#include "oriv/rng.hpp"

namespace oriv {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << text;
    if (!out) throw io_error("write failed: " + path);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

nlohmann::json dgp_json(const DgpConfig& d) {
    return nlohmann::json{{"theta_1", d.theta_1},
                          {"theta_k", d.theta_k},
                          {"theta_omega", d.theta_omega},
                          {"sigma_omega", d.sigma_omega},
                          {"one_minus_delta", d.one_minus_delta},
                          {"gamma_0", d.gamma_0},
                          {"gamma_1", d.gamma_1},
                          {"gamma_2", d.gamma_2},
                          {"mu_log_mean", d.mu_log_mean},
                          {"mu_log_sd", d.mu_log_sd},
                          {"invest_shock_sd", d.invest_shock_sd},
                          {"eps_sd", d.eps_sd},
                          {"burn_in", d.burn_in},
                          {"keep_periods", d.keep_periods}};
}

MomentSystem system_for(const RunConfig& cfg, const PanelDataset& panel) {
    if (cfg.model == "capital_only") return capital_only_system();
    if (cfg.model == "cobb_douglas_two_input")
        return cobb_douglas_two_input_system(panel.n_periods());
    throw config_error("unknown model: " + cfg.model);
}

McOptions mc_options(const RunConfig& cfg) {
    McOptions opt;
    opt.L = cfg.L;
    opt.first_stage = cfg.first_stage;
    opt.oriv = cfg.oriv;
    opt.gmm = cfg.gmm;
    opt.bootstrap_B = cfg.bootstrap_B;
    opt.workers = cfg.workers;
    opt.run_pi = cfg.estimators == "both" || cfg.estimators == "pi";
    opt.run_dgmm = cfg.estimators == "both" || cfg.estimators == "dgmm";
    if (!opt.run_pi && !opt.run_dgmm)
        throw config_error("estimators must be one of both|pi|dgmm");
    return opt;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, const std::string& panel_out) {
    cfg.dgp.check();
    PanelDataset panel = simulate_dgp(cfg.dgp, cfg.sim_n, cfg.seed);
    std::string path = panel_out.empty() ? out_path(cfg, "panel.csv") : panel_out;
    write_panel_csv(path, panel);
    std::fprintf(stdout, "wrote %s (%d firms x %d periods)\n", path.c_str(), panel.n_firms(),
                 panel.n_periods());
    return 0;
}

int cmd_estimate(const RunConfig& cfg, const std::string& panel_path) {
    CsvSchema schema;
    schema.firm_col = cfg.firm_col;
    schema.period_col = cfg.period_col;
    schema.variables = {{"Y", cfg.y_col}, {"K", cfg.k_col}};
    if (cfg.model == "capital_only") {
        schema.variables.emplace_back("I", cfg.i_col);
    } else {
        schema.variables.emplace_back("L", cfg.l_col);
        schema.variables.emplace_back("E", cfg.e_col);
    }
    PanelDataset panel = load_panel_csv(panel_path, schema);
    MomentSystem system = system_for(cfg, panel);
    system.validate(panel);

    McOptions opt = mc_options(cfg);
    DgmmResult dgmm, pi;
    RepRecord rec = run_single(panel, system, opt, cfg.seed, cfg.dgp.theta_k,
                               opt.run_dgmm ? &dgmm : nullptr, opt.run_pi ? &pi : nullptr);
    if (!rec.ok) throw numeric_error("estimation failed: " + rec.error);

    nlohmann::json j;
    j["n_firms"] = panel.n_firms();
    j["dropped_incomplete"] = panel.dropped_incomplete;
    j["model"] = cfg.model;
    auto names = system.free_names();
    if (opt.run_dgmm) j["dgmm"] = nlohmann::json::parse(dgmm.to_json(names));
    if (opt.run_pi) j["pi"] = nlohmann::json::parse(pi.to_json(names));
    write_text(out_path(cfg, "estimate.json"), j.dump(2) + "\n");

    std::string csv = "estimator," + dgmm.csv_header(names) + "\n";
    if (opt.run_dgmm) csv += "dgmm," + dgmm.csv_row() + "\n";
    if (opt.run_pi) csv += "pi," + pi.csv_row() + "\n";
    write_text(out_path(cfg, "estimate.csv"), csv);
    std::fprintf(stdout, "%s", csv.c_str());
    return 0;
}

int cmd_montecarlo(const RunConfig& cfg) {
    McOptions opt = mc_options(cfg);
    McReport report = run_experiment(cfg.dgp, cfg.mc_n, cfg.mc_reps, opt, cfg.seed);

    std::string csv =
        "n,PI Bias,DGMM Bias,PI SE,DGMM SE,PI RMSE,DGMM RMSE,PI 95Cvg,DGMM 95Cvg\n";
    csv += std::to_string(cfg.mc_n) + "," + fmt(report.pi.bias) + "," + fmt(report.dgmm.bias) +
           "," + fmt(report.pi.mean_se) + "," + fmt(report.dgmm.mean_se) + "," +
           fmt(report.pi.rmse) + "," + fmt(report.dgmm.rmse) + "," + fmt(report.pi.coverage) +
           "," + fmt(report.dgmm.coverage) + "\n";
    write_text(out_path(cfg, "table1.csv"), csv);
    std::fprintf(stdout, "%s", csv.c_str());

    nlohmann::json j;
    j["config"] = dgp_json(cfg.dgp);
    j["n"] = cfg.mc_n;
    j["reps"] = cfg.mc_reps;
    j["seed"] = cfg.seed;
    j["failures"] = report.failures;
    j["first_stage"] =
        cfg.first_stage.kind == RegressorSpec::Kind::gradient_boosted_trees ? "gbt" : "ridge_basis";
    j["coverage_mc_se"] = {{"pi", report.pi.coverage_mc_se}, {"dgmm", report.dgmm.coverage_mc_se}};
    for (const auto& r : report.records) {
        nlohmann::json rec{{"ok", r.ok}};
        if (r.ok) {
            rec["theta_pi"] = r.theta_pi;
            rec["se_pi"] = r.se_pi;
            rec["hit_pi"] = r.hit_pi;
            rec["theta_dgmm"] = r.theta_dgmm;
            rec["se_dgmm"] = r.se_dgmm;
            rec["hit_dgmm"] = r.hit_dgmm;
        } else {
            rec["error"] = r.error;
        }
        j["records"].push_back(rec);
    }
    write_text(out_path(cfg, "table1.json"), j.dump(2) + "\n");

    if (cfg.histogram) {
        std::vector<double> dg, pi;
        for (const auto& r : report.records)
            if (r.ok) {
                dg.push_back(r.theta_dgmm);
                pi.push_back(r.theta_pi);
            }
        std::string hist = "estimator,bin_lo,bin_hi,count\n";
        auto emit = [&](const std::string& name, const std::vector<double>& v) {
            Histogram h = histogram_export(v, cfg.dgp.theta_k, cfg.histogram_bins);
            double w = (h.hi - h.lo) / cfg.histogram_bins;
            for (size_t b = 0; b < h.counts.size(); ++b)
                hist += name + "," + fmt(h.lo + w * static_cast<double>(b)) + "," +
                        fmt(h.lo + w * static_cast<double>(b + 1)) + "," +
                        std::to_string(h.counts[b]) + "\n";
        };
        if (opt.run_dgmm) emit("dgmm", dg);
        if (opt.run_pi) emit("pi", pi);
        write_text(out_path(cfg, "histogram.csv"), hist);
    }
    return 0;
}

int cmd_lasso_check(const RunConfig& cfg) {
    LassoOracleOptions opt = cfg.lasso;
    opt.workers = cfg.workers;
    std::string csv = "n,mse,selection_pct\n";
    for (int n : cfg.lasso_grid) {
        LassoOracleResult r = lasso_oracle_check(n, cfg.lasso_reps, cfg.seed, opt);
        csv += std::to_string(n) + "," + fmt(r.mean_mse) + "," +
               fmt(100.0 * r.selection_rate) + "\n";
    }
    write_text(out_path(cfg, "lasso_check.csv"), csv);
    std::fprintf(stdout, "%s", csv.c_str());
    return 0;
}

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"Debiased GMM production-function estimation with orthogonal IVs"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path, panel_path, panel_out;
    bool fast = false, histogram = false;
    long long seed = -1;
    int workers = 0;
    std::string out_dir;

    app.add_option("--config", config_path, "config file (key = value sections)");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--workers", workers, "parallel workers");
    app.add_flag("--fast", fast, "ridge first stage, at most 200 reps");
    app.add_flag("--histogram", histogram, "also write binned standardized estimates");
    app.add_option("--out", out_dir, "output directory");

    app.fallthrough();

    auto* sim = app.add_subcommand("simulate", "write a simulated panel CSV");
    sim->fallthrough();
    sim->add_option("--n", cfg.sim_n, "number of firms");
    sim->add_option("--invest-shock-sd", cfg.dgp.invest_shock_sd, "investment shock sd");
    sim->add_option("--panel-out", panel_out, "output csv path");

    auto* est = app.add_subcommand("estimate", "estimate on a panel CSV");
    est->fallthrough();
    est->add_option("--panel", panel_path, "input panel csv")->required();
    est->add_option("--model", cfg.model, "capital_only | cobb_douglas_two_input");
    est->add_option("--estimator", cfg.estimators, "both | pi | dgmm");

    auto* mc = app.add_subcommand("montecarlo", "replication study");
    mc->fallthrough();
    mc->add_option("--n", cfg.mc_n, "firms per replication");
    mc->add_option("--reps", cfg.mc_reps, "replications");
    mc->add_option("--invest-shock-sd", cfg.dgp.invest_shock_sd, "investment shock sd");
    mc->add_option("--estimator", cfg.estimators, "both | pi | dgmm");

    auto* lc = app.add_subcommand("lasso-check", "penalized-solver oracle study");
    lc->fallthrough();
    lc->add_option("--reps", cfg.lasso_reps, "replications per n");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty()) {
            // precedence: flags > file > defaults. Apply the file over the
            // defaults, then re-parse so explicit flags land on top.
            apply_config_file(cfg, config_path);
            std::vector<std::string> rev(args.rbegin(), args.rend());
            app.parse(rev);
        }
        if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
        if (workers > 0) cfg.workers = workers;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        cfg.histogram = cfg.histogram || histogram;
        if (fast) {
            cfg.fast = true;
            cfg.apply_fast_mode();
        }
        cfg.dgp.check();

        if (sim->parsed()) return cmd_simulate(cfg, panel_out);
        if (est->parsed()) return cmd_estimate(cfg, panel_path);
        if (mc->parsed()) return cmd_montecarlo(cfg);
        if (lc->parsed()) return cmd_lasso_check(cfg);
        throw config_error("no subcommand given");
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace oriv
