#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace oriv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

// Errors that should surface as usage/I-O problems (CLI exit code 2).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything else (numeric failures, estimation failures) maps to exit code 1.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline Matrix rows_of(const Matrix& m, const std::vector<int>& idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (Index i = 0; i < out.rows(); ++i) out.row(i) = m.row(idx[static_cast<size_t>(i)]);
    return out;
}

inline Vector entries_of(const Vector& v, const std::vector<int>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (Index i = 0; i < out.size(); ++i) out[i] = v[idx[static_cast<size_t>(i)]];
    return out;
}

}  // namespace oriv
