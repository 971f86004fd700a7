#pragma once

#include <functional>

#include "oriv/types.hpp"

namespace oriv {

struct ScalarMin {
    double x = 0.0;
    double value = 0.0;
    bool at_boundary = false;
};

// Coarse grid over [lo, hi] followed by golden-section refinement of the
// bracketing interval down to `tol` width.
ScalarMin grid_then_golden(const std::function<double(double)>& f, double lo, double hi,
                           int grid_points = 101, double tol = 1e-8);

struct SimplexMin {
    Vector x;
    double value = 0.0;
};

// Nelder-Mead with random restarts (seeded); the best local solution is kept.
SimplexMin nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                       double scale, int restarts, uint64_t seed, int max_iter = 500,
                       double tol = 1e-10);

}  // namespace oriv
