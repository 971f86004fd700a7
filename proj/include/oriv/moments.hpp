#pragma once

#include <string>
#include <vector>

#include "oriv/first_stage.hpp"
#include "oriv/panel.hpp"
#include "oriv/types.hpp"

namespace oriv {

// One starting-instrument entry: value = panel.var(var)(firm, period)^power.
struct InstrumentFn {
    std::string var;
    int period = 0;
    int power = 1;
};
// One instrument vector f has an entry per CMR j.
using InstrumentVector = std::vector<InstrumentFn>;

Matrix instrument_values(const PanelDataset& panel, const InstrumentVector& f);  // n x J

// PI instrument: a (var, power) pattern applied at each structural CMR's
// conditioning period.
struct PiInstrument {
    std::string var;
    int power = 1;
};

// Concrete CMR wiring for the two supported models. CMRs come in
// (first-stage, structural) pairs sharing the conditioning variables Z_t.
struct MomentSystem {
    enum class Kind { capital_only, cobb_douglas_two_input };
    Kind kind = Kind::capital_only;
    int T = 3;

    struct CmrPair {
        int fs_j;                         // first-stage CMR index
        int st_j;                         // structural CMR index
        int z_period;                     // conditioning period
        std::vector<std::string> z_vars;  // conditioning variables
    };

    int n_pairs() const { return T - 1; }
    int J() const { return 2 * (T - 1); }
    int n_free() const { return kind == Kind::capital_only ? 1 : 2; }
    std::vector<std::string> free_names() const;
    std::vector<std::string> required_vars() const;
    std::vector<CmrPair> pairs() const;
    std::vector<EtaTarget> eta_targets() const;
    void validate(const PanelDataset& panel) const;

    // theta layout: capital_only (th1, thk, thw); cobb (th1, thl, thk, thw)
    Vector full_theta(const Vector& free, double th1, double thw) const;
    Vector free_of(const Vector& theta_full) const;

    // n x J residual matrix m_j(W_i; theta, eta). eta_values: n x (T-1).
    Matrix residuals(const PanelDataset& panel, const Vector& theta_full,
                     const Matrix& eta_values) const;

    // Partial derivative of the residuals wrt free parameter k (theta_1 and
    // theta_omega held fixed); zero columns for first-stage CMRs.
    Matrix residuals_dfree(const PanelDataset& panel, const Vector& theta_full,
                           int free_index) const;

    // v_t = eta_t - (free-parameter part of F) at eta period t, for profiling.
    Matrix profile_basis(const PanelDataset& panel, const Matrix& eta_values,
                         const Vector& free) const;

    // AR(1) profiling: slope and intercept of the pooled regression of v_t on
    // v_{t-1}. Returns (theta_1, theta_omega); with backsolve_intercept the
    // intercept is c~/(1-slope), otherwise c~ itself.
    std::pair<double, double> profile(const PanelDataset& panel, const Matrix& eta_values,
                                      const Vector& free, bool backsolve_intercept) const;

    std::vector<InstrumentVector> default_menu() const;
    std::vector<PiInstrument> pi_instruments() const;
};

MomentSystem capital_only_system();
MomentSystem cobb_douglas_two_input_system(int T);

}  // namespace oriv
