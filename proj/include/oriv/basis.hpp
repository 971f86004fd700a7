#pragma once

#include <vector>

#include "oriv/types.hpp"

namespace oriv {

// K rates equally spaced on [-1, 1].
Vector equally_spaced_rates(int K);

// Column k = exp(rates[k] * v), elementwise. Inputs are expected pre-scaled.
Matrix exponential_basis(const Vector& v, const Vector& rates);

// Columns are all pairwise products A[:,i] * B[:,j] at index i*wB + j.
Matrix tensor_product(const Matrix& A, const Matrix& B);

// Column standardizer fitted on training data. Column 0 is the constant and is
// left alone; other columns map to (x - mean)/sd. Zero-variance columns are
// dropped and counted.
struct Standardizer {
    Vector mean, sd;          // for kept columns (entry 0 unused)
    std::vector<int> kept;    // indices into the raw matrix, kept[0] == 0
    int dropped = 0;

    int r() const { return static_cast<int>(kept.size()); }
    Matrix apply(const Matrix& raw) const;
};

Standardizer fit_standardizer(const Matrix& raw);

// Exponential tensor dictionary over one or more input variables:
//   raw = [1, tensor(exp basis of var 1, exp basis of var 2, ...)]
// Inputs are standardized by training mean/sd and clamped to +-clamp sd before
// exponentiation; the clamp bounds the exponents on held-out data.
struct Dictionary {
    Vector in_mean, in_sd;
    double clamp = 3.0;
    std::vector<Vector> rates;  // per input variable
    Standardizer standardizer;

    int r() const { return standardizer.r(); }
    Matrix raw(const Matrix& X) const;   // unstandardized columns
    Matrix eval(const Matrix& X) const;  // standardized columns (training stats only)
};

Dictionary fit_dictionary(const Matrix& X, const std::vector<int>& widths, double clamp = 3.0);

// Per-variable width rule: max(2, floor(sqrt(n_train)/5)).
int default_dictionary_width(int n_train);

}  // namespace oriv
