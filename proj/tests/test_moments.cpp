#include <doctest.h>

#include <cmath>

#include "oriv/moments.hpp"
#include "oriv/montecarlo.hpp"
#include "oriv/rng.hpp"

using namespace oriv;

namespace {

Matrix true_eta(const PanelDataset& panel, const MomentSystem& sys, const Vector& theta) {
    // eta_t = F(X_t, theta_p) + omega_t at the eta periods
    Matrix eta(panel.n_firms(), sys.n_pairs());
    for (const auto& pr : sys.pairs()) {
        int t = pr.z_period;
        Vector F = theta[0] + (theta[1] * panel.var("K").col(t).array());
        eta.col(t) = F + panel.var("omega").col(t);
    }
    return eta;
}

}  // namespace

TEST_CASE("capital_only system has 4 CMRs; residuals vanish at truth without noise") {
    DgpConfig cfg;
    cfg.eps_sd = 0.0;
    cfg.sigma_omega = 0.0;  // omega identically zero: no AR innovations either
    PanelDataset panel = simulate_dgp(cfg, 40, 3);
    MomentSystem sys = capital_only_system();
    sys.validate(panel);
    CHECK(sys.J() == 4);
    Vector theta(3);
    theta << cfg.theta_1, cfg.theta_k, cfg.theta_omega;
    Matrix eta = true_eta(panel, sys, theta);
    Matrix m = sys.residuals(panel, theta, eta);
    CHECK(m.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("noiseless output with AR omega: first-stage residuals vanish, structural equal the innovation") {
    DgpConfig cfg;
    cfg.eps_sd = 0.0;
    PanelDataset panel = simulate_dgp(cfg, 200, 5);
    MomentSystem sys = capital_only_system();
    Vector theta(3);
    theta << cfg.theta_1, cfg.theta_k, cfg.theta_omega;
    Matrix eta = true_eta(panel, sys, theta);
    Matrix m = sys.residuals(panel, theta, eta);
    CHECK(m.col(0).cwiseAbs().maxCoeff() < 1e-12);  // m1
    CHECK(m.col(2).cwiseAbs().maxCoeff() < 1e-12);  // m3
    // structural residuals equal the omega innovation
    const Matrix& W = panel.var("omega");
    Vector innov2 = W.col(1) - cfg.theta_omega * W.col(0);
    Vector innov3 = W.col(2) - cfg.theta_omega * W.col(1);
    CHECK((m.col(1) - innov2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((m.col(3) - innov3).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("m2 at theta_omega zero reduces to Y2 - th1 - thk K2") {
    DgpConfig cfg;
    PanelDataset panel = simulate_dgp(cfg, 30, 9);
    MomentSystem sys = capital_only_system();
    Vector theta(3);
    theta << 0.3, 1.2, 0.0;
    Matrix eta = Matrix::Random(30, 2);
    Matrix m = sys.residuals(panel, theta, eta);
    Vector expect = panel.var("Y").col(1) -
                    (0.3 + 1.2 * panel.var("K").col(1).array()).matrix();
    CHECK((m.col(1) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("residual means at the truth are within Monte Carlo noise") {
    DgpConfig cfg;
    const int n = 20000;
    PanelDataset panel = simulate_dgp(cfg, n, 17);
    MomentSystem sys = capital_only_system();
    Vector theta(3);
    theta << cfg.theta_1, cfg.theta_k, cfg.theta_omega;
    Matrix eta = true_eta(panel, sys, theta);
    Matrix m = sys.residuals(panel, theta, eta);
    for (Index j = 0; j < 4; ++j) {
        double mean = m.col(j).mean();
        double sd = std::sqrt((m.col(j).array() - mean).square().mean());
        CHECK(std::fabs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("structural residuals are affine in the free parameters") {
    DgpConfig cfg;
    PanelDataset panel = simulate_dgp(cfg, 25, 31);
    MomentSystem sys = capital_only_system();
    Matrix eta = Matrix::Random(25, 2);
    auto at = [&](double thk) {
        Vector theta(3);
        theta << 0.1, thk, 0.6;
        return sys.residuals(panel, theta, eta);
    };
    // second difference in theta_k identically zero
    Matrix second = at(1.4) - 2.0 * at(1.2) + at(1.0);
    CHECK(second.cwiseAbs().maxCoeff() < 1e-10);
    // first difference matches residuals_dfree
    Vector theta(3);
    theta << 0.1, 1.2, 0.6;
    Matrix d = sys.residuals_dfree(panel, theta, 0);
    Matrix fd = (at(1.2 + 1e-6) - at(1.2 - 1e-6)) / 2e-6;
    CHECK((d - fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("profiling recovers an exact AR(1)") {
    // eta_t - thk K_t = 0.7 lag exactly, zero innovation
    const int n = 50;
    PanelDataset panel;
    panel.periods = {1, 2, 3};
    panel.firm_ids.resize(n);
    Matrix K(n, 3), Y(n, 3), I(n, 3);
    Rng rng(2);
    for (int i = 0; i < n; ++i) {
        panel.firm_ids[static_cast<size_t>(i)] = std::to_string(i);
        for (int t = 0; t < 3; ++t) {
            K(i, t) = rng.normal();
            I(i, t) = rng.normal();
        }
    }
    panel.variables["K"] = K;
    panel.variables["Y"] = Y;
    panel.variables["I"] = I;
    MomentSystem sys = capital_only_system();
    double thk = 1.3;
    Matrix eta(n, 2);
    Vector w0(n);
    for (int i = 0; i < n; ++i) w0[i] = rng.normal();
    eta.col(0) = (thk * K.col(0).array() + w0.array()).matrix();
    eta.col(1) = (thk * K.col(1).array() + 0.7 * w0.array()).matrix();
    auto [c, slope] = sys.profile(panel, eta, Vector::Constant(1, thk), false);
    CHECK(slope == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(std::fabs(c) < 1e-10);
    // back-solved intercept agrees when the intercept is zero
    auto [c2, slope2] = sys.profile(panel, eta, Vector::Constant(1, thk), true);
    CHECK(std::fabs(c2) < 1e-10);
    CHECK(slope2 == doctest::Approx(slope).epsilon(1e-14));
}

TEST_CASE("profiling rejects a constant series") {
    const int n = 20;
    PanelDataset panel;
    panel.periods = {1, 2, 3};
    panel.firm_ids.resize(n);
    panel.variables["K"] = Matrix::Zero(n, 3);
    panel.variables["Y"] = Matrix::Zero(n, 3);
    panel.variables["I"] = Matrix::Zero(n, 3);
    Matrix eta = Matrix::Ones(n, 2);
    MomentSystem sys = capital_only_system();
    CHECK_THROWS_AS(sys.profile(panel, eta, Vector::Zero(1), false), numeric_error);
}

TEST_CASE("profiled theta_omega close to truth on simulated data with exact eta") {
    DgpConfig cfg;
    const int n = 5000;
    PanelDataset panel = simulate_dgp(cfg, n, 23);
    MomentSystem sys = capital_only_system();
    Vector theta(3);
    theta << cfg.theta_1, cfg.theta_k, cfg.theta_omega;
    Matrix eta = true_eta(panel, sys, theta);
    auto [c, slope] = sys.profile(panel, eta, Vector::Constant(1, cfg.theta_k), false);
    // MC sd of the AR(1) slope is about sqrt((1-rho^2)/n)
    double mc_sd = std::sqrt((1.0 - 0.49) / n);
    CHECK(std::fabs(slope - 0.7) <= 3.0 * mc_sd);
    CHECK(std::fabs(c) <= 0.02);
}

TEST_CASE("cobb_douglas system counts and noiseless recovery") {
    CHECK(cobb_douglas_two_input_system(2).J() == 2);
    CHECK(cobb_douglas_two_input_system(4).J() == 6);

    // synthetic noiseless two-input panel with known linear eta
    const int n = 80, T = 3;
    PanelDataset panel;
    panel.periods = {1, 2, 3};
    panel.firm_ids.resize(n);
    Matrix Y(n, T), L(n, T), K(n, T), E(n, T), W(n, T);
    Rng rng(4);
    double th1 = 0.5, thl = 0.6, thk = 0.3, thw = 0.7;
    for (int i = 0; i < n; ++i) {
        panel.firm_ids[static_cast<size_t>(i)] = std::to_string(i);
        double w = rng.normal();
        for (int t = 0; t < T; ++t) {
            if (t > 0) w = thw * w;  // exact AR(1), no innovation
            L(i, t) = rng.normal();
            K(i, t) = rng.normal();
            E(i, t) = 0.4 * w + 0.1 * L(i, t) - 0.2 * K(i, t);  // invertible proxy
            W(i, t) = w;
            Y(i, t) = th1 + thl * L(i, t) + thk * K(i, t) + w;  // no output noise
        }
    }
    panel.variables = {{"Y", Y}, {"L", L}, {"K", K}, {"E", E}};
    MomentSystem sys = cobb_douglas_two_input_system(T);
    sys.validate(panel);
    Vector theta(4);
    theta << th1, thl, thk, thw;
    Matrix eta(n, T - 1);
    for (int t = 0; t < T - 1; ++t)
        eta.col(t) = th1 + (thl * L.col(t).array() + thk * K.col(t).array() + W.col(t).array());
    Matrix m = sys.residuals(panel, theta, eta);
    CHECK(m.cwiseAbs().maxCoeff() < 1e-12);

    // theta_l = theta_k = theta_w = 0: structural residual is Y_t - th1
    Vector theta0(4);
    theta0 << th1, 0.0, 0.0, 0.0;
    Matrix m0 = sys.residuals(panel, theta0, eta);
    CHECK((m0.col(1) - (Y.col(1).array() - th1).matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("capital_only requires a 3-period panel and the right variables") {
    DgpConfig cfg;
    cfg.keep_periods = 4;
    PanelDataset p4 = simulate_dgp(cfg, 10, 1);
    MomentSystem sys = capital_only_system();
    CHECK_THROWS_AS(sys.validate(p4), config_error);

    cfg.keep_periods = 3;
    PanelDataset p3 = simulate_dgp(cfg, 10, 1);
    p3.variables.erase("I");
    CHECK_THROWS_AS(sys.validate(p3), config_error);
}

TEST_CASE("default menu shapes") {
    MomentSystem cap = capital_only_system();
    auto menu = cap.default_menu();
    REQUIRE(menu.size() == 4);
    for (const auto& f : menu) CHECK(f.size() == 4);
    // first menu vector is (K1, K1, K2, K2)
    CHECK(menu[0][0].var == "K");
    CHECK(menu[0][0].period == 0);
    CHECK(menu[0][2].period == 1);

    MomentSystem cd = cobb_douglas_two_input_system(3);
    auto menu2 = cd.default_menu();
    REQUIRE(menu2.size() == 5);
    for (const auto& f : menu2) CHECK(f.size() == 4);
}
