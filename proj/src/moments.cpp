#include "oriv/moments.hpp"

#include <cmath>

namespace oriv {

Matrix instrument_values(const PanelDataset& panel, const InstrumentVector& f) {
    Matrix out(panel.n_firms(), static_cast<Index>(f.size()));
    for (size_t j = 0; j < f.size(); ++j) {
        Vector col = panel.var(f[j].var).col(f[j].period);
        if (f[j].power != 1) col = col.array().pow(f[j].power);
        out.col(static_cast<Index>(j)) = col;
    }
    return out;
}

std::vector<std::string> MomentSystem::free_names() const {
    if (kind == Kind::capital_only) return {"theta_k"};
    return {"theta_l", "theta_k"};
}

std::vector<std::string> MomentSystem::required_vars() const {
    if (kind == Kind::capital_only) return {"Y", "K", "I"};
    return {"Y", "L", "K", "E"};
}

std::vector<MomentSystem::CmrPair> MomentSystem::pairs() const {
    std::vector<CmrPair> out;
    std::vector<std::string> z = kind == Kind::capital_only
                                     ? std::vector<std::string>{"I", "K"}
                                     : std::vector<std::string>{"E", "L", "K"};
    for (int p = 0; p < n_pairs(); ++p) out.push_back({2 * p, 2 * p + 1, p, z});
    return out;
}

std::vector<EtaTarget> MomentSystem::eta_targets() const {
    std::vector<EtaTarget> out;
    for (const auto& pr : pairs()) out.push_back({"Y", pr.z_vars, pr.z_period});
    return out;
}

void MomentSystem::validate(const PanelDataset& panel) const {
    if (kind == Kind::capital_only && (T != 3 || panel.n_periods() != 3))
        throw config_error("capital_only system requires a 3-period panel");
    if (panel.n_periods() < T) throw config_error("panel has fewer periods than the system");
    for (const auto& v : required_vars())
        if (!panel.has(v)) throw config_error("moment system needs panel variable " + v);
}

Vector MomentSystem::full_theta(const Vector& free, double th1, double thw) const {
    Vector theta(n_free() + 2);
    theta[0] = th1;
    for (int k = 0; k < n_free(); ++k) theta[k + 1] = free[k];
    theta[n_free() + 1] = thw;
    return theta;
}

Vector MomentSystem::free_of(const Vector& theta_full) const {
    return theta_full.segment(1, n_free());
}

namespace {

// F(X_t, theta_p) for the Cobb-Douglas cases, as an n-vector at period t.
Vector production_part(const PanelDataset& panel, MomentSystem::Kind kind,
                       const Vector& theta_full, int t) {
    if (kind == MomentSystem::Kind::capital_only)
        return theta_full[0] + (theta_full[1] * panel.var("K").col(t).array());
    return theta_full[0] + theta_full[1] * panel.var("L").col(t).array() +
           theta_full[2] * panel.var("K").col(t).array();
}

}  // namespace

Matrix MomentSystem::residuals(const PanelDataset& panel, const Vector& theta_full,
                               const Matrix& eta_values) const {
    const int n = panel.n_firms();
    const double thw = theta_full[theta_full.size() - 1];
    Matrix m(n, J());
    const Matrix& Y = panel.var("Y");
    for (const auto& pr : pairs()) {
        int t = pr.z_period;
        m.col(pr.fs_j) = Y.col(t) - eta_values.col(t);
        Vector Ft1 = production_part(panel, kind, theta_full, t + 1);
        Vector Ft = production_part(panel, kind, theta_full, t);
        m.col(pr.st_j) =
            Y.col(t + 1) - Ft1 - thw * (eta_values.col(t) - Ft);
    }
    return m;
}

Matrix MomentSystem::residuals_dfree(const PanelDataset& panel, const Vector& theta_full,
                                     int free_index) const {
    const int n = panel.n_firms();
    const double thw = theta_full[theta_full.size() - 1];
    const std::string var = kind == Kind::capital_only ? "K" : (free_index == 0 ? "L" : "K");
    Matrix d = Matrix::Zero(n, J());
    for (const auto& pr : pairs()) {
        int t = pr.z_period;
        d.col(pr.st_j) = -panel.var(var).col(t + 1) + thw * panel.var(var).col(t);
    }
    return d;
}

Matrix MomentSystem::profile_basis(const PanelDataset& panel, const Matrix& eta_values,
                                   const Vector& free) const {
    Matrix v = eta_values;
    for (Index t = 0; t < v.cols(); ++t) {
        if (kind == Kind::capital_only) {
            v.col(t) -= free[0] * panel.var("K").col(static_cast<int>(t));
        } else {
            v.col(t) -= free[0] * panel.var("L").col(static_cast<int>(t)) +
                        free[1] * panel.var("K").col(static_cast<int>(t));
        }
    }
    return v;
}

std::pair<double, double> MomentSystem::profile(const PanelDataset& panel,
                                                const Matrix& eta_values, const Vector& free,
                                                bool backsolve_intercept) const {
    Matrix v = profile_basis(panel, eta_values, free);
    if (v.cols() < 2) throw numeric_error("profiling needs at least two eta periods");
    // pooled regression of v_t on v_{t-1}
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long cnt = 0;
    for (Index t = 1; t < v.cols(); ++t) {
        sx += v.col(t - 1).sum();
        sy += v.col(t).sum();
        sxx += v.col(t - 1).squaredNorm();
        sxy += v.col(t - 1).dot(v.col(t));
        cnt += v.rows();
    }
    double mx = sx / cnt, my = sy / cnt;
    double varx = sxx / cnt - mx * mx;
    if (!(varx > 1e-14))
        throw numeric_error("profiling regressor is degenerate (constant series)");
    double slope = (sxy / cnt - mx * my) / varx;
    double intercept = my - slope * mx;
    if (backsolve_intercept) {
        if (std::fabs(1.0 - slope) <= 1e-6)
            throw numeric_error("profiling: theta_omega too close to 1 for the intercept");
        intercept /= (1.0 - slope);
    }
    return {intercept, slope};
}

std::vector<InstrumentVector> MomentSystem::default_menu() const {
    std::vector<InstrumentVector> menu;
    if (kind == Kind::capital_only) {
        auto quad = [](const std::string& a, const std::string& b, const std::string& c,
                       const std::string& d) {
            return InstrumentVector{{a, 0, 1}, {b, 0, 1}, {c, 1, 1}, {d, 1, 1}};
        };
        menu.push_back(quad("K", "K", "K", "K"));
        menu.push_back(quad("I", "I", "I", "I"));
        menu.push_back(quad("K", "K", "I", "I"));
        menu.push_back(quad("K", "I", "I", "I"));
        return menu;
    }
    // two-input system: five starting vectors per the empirical design
    struct Spec {
        std::string var;
        int pow;
        bool lead_structural;  // structural entry uses period t instead of t-1
    };
    for (const Spec& s : std::vector<Spec>{{"K", 1, false},
                                           {"K", 1, true},
                                           {"L", 1, false},
                                           {"K", 2, true},
                                           {"K", 4, true}}) {
        InstrumentVector f(static_cast<size_t>(J()));
        for (const auto& pr : pairs()) {
            f[static_cast<size_t>(pr.fs_j)] = {s.var, pr.z_period, s.pow};
            f[static_cast<size_t>(pr.st_j)] = {s.var, s.lead_structural ? pr.z_period + 1 : pr.z_period,
                                               s.pow};
        }
        menu.push_back(std::move(f));
    }
    return menu;
}

std::vector<PiInstrument> MomentSystem::pi_instruments() const {
    if (kind == Kind::capital_only) return {{"K", 1}, {"I", 1}, {"K", 2}, {"I", 2}};
    return {{"K", 1}, {"L", 1}, {"K", 2}, {"E", 1}};
}

MomentSystem capital_only_system() {
    MomentSystem s;
    s.kind = MomentSystem::Kind::capital_only;
    s.T = 3;
    return s;
}

MomentSystem cobb_douglas_two_input_system(int T) {
    require(T >= 2, "cobb_douglas_two_input_system: T must be >= 2");
    MomentSystem s;
    s.kind = MomentSystem::Kind::cobb_douglas_two_input;
    s.T = T;
    return s;
}

}  // namespace oriv
