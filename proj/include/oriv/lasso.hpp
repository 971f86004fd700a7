#pragma once

#include <vector>

#include "oriv/types.hpp"

namespace oriv {

// J regression equations sharing one coefficient vector:
//   min_b  sum_j (1/N) ||f_j - M_j b||^2  +  2 * lambda * ||diag(D) b||_1
struct MultiEqDesign {
    std::vector<Matrix> M;  // each N x r
    std::vector<Vector> f;  // each N

    int n() const { return static_cast<int>(M.at(0).rows()); }
    int r() const { return static_cast<int>(M.at(0).cols()); }
    double objective(const Vector& beta, const Vector& loadings, double lambda) const;
};

// lambda = c1 / n_train^{1/4} * Phi^{-1}(1 - c2/(2r))
double lambda_rule(int n_train, int r, double c1, double c2);

// OLS on the low-dimensional columns, zeros elsewhere. Gram gets a jitter of
// 1e-10 * trace/r before inversion.
Vector init_beta_lowdim(const MultiEqDesign& d, const std::vector<int>& low_indices);

// D_l = sqrt( (1/N) sum_i ( sum_j M_j(i,l) * eps_j(i) )^2 ),  eps_j = f_j - M_j b.
// Entries are floored.
Vector update_loadings(const MultiEqDesign& d, const Vector& beta, double floor_at = 1e-12);

struct LassoSolution {
    Vector beta;
    std::vector<int> active;
    double objective = 0.0;
    int sweeps = 0;
    std::vector<double> objective_trace;  // objective after each sweep
};

// Cyclic coordinate descent with the soft-threshold update; stops when
// max |delta beta_l| < tol or after max_sweeps full sweeps.
LassoSolution coordinate_descent(const MultiEqDesign& d, const Vector& beta0,
                                 const Vector& loadings, double lambda, double tol = 1e-7,
                                 int max_sweeps = 1000);

// max_l  max(0, |A_l - B_l b_l| - D_l*lambda)  evaluated from the design.
double kkt_violation(const MultiEqDesign& d, const Vector& beta, const Vector& loadings,
                     double lambda);

struct PenalizedFitOptions {
    double c1 = 1.1;
    double c2 = -1.0;  // <=0: use c2_scale / log(n v r)
    double c2_scale = 0.5;
    int max_iterations = 10;   // loading updates
    double rel_tol = 1e-4;     // relative beta change between loading updates
    std::vector<int> low_indices;  // default: first 5 columns
    double cd_tol = 1e-7;
    int cd_max_sweeps = 1000;
    double loading_floor = 1e-12;
};

struct PenalizedFit {
    Vector beta;
    Vector loadings;
    double lambda = 0.0;
    int iterations = 0;
    LassoSolution solution;
};

// Full program: low-dimensional init, then iterate loadings / warm-started
// coordinate descent until convergence or the iteration cap.
PenalizedFit fit_penalized(const MultiEqDesign& d, const PenalizedFitOptions& opt);

}  // namespace oriv
