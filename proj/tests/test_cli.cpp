#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "oriv/config.hpp"

using namespace oriv;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::initializer_list<std::string> args) { return cli_main(std::vector<std::string>(args)); }

}  // namespace

TEST_CASE("simulate writes 3 rows per firm and reruns byte-identically") {
    REQUIRE(run({"simulate", "--n", "10", "--seed", "5", "--out", "/tmp/oriv_cli_a"}) == 0);
    std::string a = slurp("/tmp/oriv_cli_a/panel.csv");
    CHECK(std::count(a.begin(), a.end(), '\n') == 31);  // header + 30 rows
    REQUIRE(run({"simulate", "--n", "10", "--seed", "5", "--out", "/tmp/oriv_cli_b"}) == 0);
    CHECK(a == slurp("/tmp/oriv_cli_b/panel.csv"));
}

TEST_CASE("invalid dgp parameter fails before any io") {
    std::remove("/tmp/oriv_cli_bad/panel.csv");
    int code = run({"simulate", "--n", "5", "--invest-shock-sd", "-1", "--out",
                    "/tmp/oriv_cli_bad"});
    CHECK(code == 2);
    std::ifstream in("/tmp/oriv_cli_bad/panel.csv");
    CHECK(!in.good());
}

TEST_CASE("missing panel file exits 2") {
    CHECK(run({"estimate", "--panel", "/tmp/definitely_missing_panel.csv"}) == 2);
}

TEST_CASE("estimate runs end to end on a simulated panel; pi-only filters output") {
    REQUIRE(run({"simulate", "--n", "200", "--seed", "9", "--out", "/tmp/oriv_cli_e"}) == 0);
    REQUIRE(run({"estimate", "--panel", "/tmp/oriv_cli_e/panel.csv", "--fast", "--seed", "3",
                 "--out", "/tmp/oriv_cli_e"}) == 0);
    std::string csv = slurp("/tmp/oriv_cli_e/estimate.csv");
    CHECK(csv.find("dgmm,") != std::string::npos);
    CHECK(csv.find("pi,") != std::string::npos);
    std::string js = slurp("/tmp/oriv_cli_e/estimate.json");
    CHECK(js.find("theta_k") != std::string::npos);

    REQUIRE(run({"estimate", "--panel", "/tmp/oriv_cli_e/panel.csv", "--fast", "--seed", "3",
                 "--estimator", "pi", "--out", "/tmp/oriv_cli_p"}) == 0);
    std::string csv2 = slurp("/tmp/oriv_cli_p/estimate.csv");
    CHECK(csv2.find("dgmm,") == std::string::npos);
    CHECK(csv2.find("pi,") != std::string::npos);
}

TEST_CASE("montecarlo emits the table row and histogram on request") {
    REQUIRE(run({"montecarlo", "--n", "100", "--reps", "2", "--fast", "--seed", "11",
                 "--histogram", "--workers", "2", "--out", "/tmp/oriv_cli_mc"}) == 0);
    std::string csv = slurp("/tmp/oriv_cli_mc/table1.csv");
    CHECK(csv.find("PI Bias,DGMM Bias,PI SE,DGMM SE,PI RMSE,DGMM RMSE,PI 95Cvg,DGMM 95Cvg") !=
          std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one row
    std::ifstream tcsv("/tmp/oriv_cli_mc/table1.csv");
    std::string cols;
    std::getline(tcsv, cols);
    CHECK(std::count(cols.begin(), cols.end(), ',') == 8);  // n + 8 metrics
    slurp("/tmp/oriv_cli_mc/histogram.csv");
    slurp("/tmp/oriv_cli_mc/table1.json");
}

TEST_CASE("montecarlo output is bit-identical across runs and worker counts") {
    REQUIRE(run({"montecarlo", "--n", "100", "--reps", "2", "--fast", "--seed", "11",
                 "--workers", "1", "--out", "/tmp/oriv_cli_d1"}) == 0);
    REQUIRE(run({"montecarlo", "--n", "100", "--reps", "2", "--fast", "--seed", "11",
                 "--workers", "2", "--out", "/tmp/oriv_cli_d2"}) == 0);
    CHECK(slurp("/tmp/oriv_cli_d1/table1.csv") == slurp("/tmp/oriv_cli_d2/table1.csv"));
    CHECK(slurp("/tmp/oriv_cli_d1/table1.json") == slurp("/tmp/oriv_cli_d2/table1.json"));
}

TEST_CASE("lasso-check writes one row per grid point with reproducible values") {
    std::ofstream cfg("/tmp/oriv_cli_lc.cfg");
    cfg << "[lasso_check]\ngrid = 300, 500\nreps = 2\n";
    cfg.close();
    REQUIRE(run({"lasso-check", "--config", "/tmp/oriv_cli_lc.cfg", "--seed", "4", "--out",
                 "/tmp/oriv_cli_lc1"}) == 0);
    REQUIRE(run({"lasso-check", "--config", "/tmp/oriv_cli_lc.cfg", "--seed", "4", "--out",
                 "/tmp/oriv_cli_lc2"}) == 0);
    std::string a = slurp("/tmp/oriv_cli_lc1/lasso_check.csv");
    CHECK(a == slurp("/tmp/oriv_cli_lc2/lasso_check.csv"));
    CHECK(std::count(a.begin(), a.end(), '\n') == 3);  // header + 2 rows
}

TEST_CASE("flags beat config file values") {
    std::ofstream cfg("/tmp/oriv_cli_prec.cfg");
    cfg << "[simulate]\nn = 7\nseed = 1\n";
    cfg.close();
    // file sets n=7; flag overrides to 4
    REQUIRE(run({"simulate", "--config", "/tmp/oriv_cli_prec.cfg", "--n", "4", "--out",
                 "/tmp/oriv_cli_prec"}) == 0);
    std::string a = slurp("/tmp/oriv_cli_prec/panel.csv");
    CHECK(std::count(a.begin(), a.end(), '\n') == 13);  // header + 4*3 rows
}

TEST_CASE("config file errors are usage errors") {
    CHECK(run({"simulate", "--config", "/tmp/missing_config_file.cfg"}) == 2);
    std::ofstream cfg("/tmp/oriv_cli_badcfg.cfg");
    cfg << "[simulate]\nnot a key value line\n";
    cfg.close();
    CHECK(run({"simulate", "--config", "/tmp/oriv_cli_badcfg.cfg"}) == 2);
}
