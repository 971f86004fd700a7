#include "oriv/basis.hpp"

#include <cmath>

namespace oriv {

Vector equally_spaced_rates(int K) {
    require(K >= 1, "rates: K must be positive");
    Vector out(K);
    if (K == 1) {
        out[0] = 0.0;
        return out;
    }
    for (int k = 0; k < K; ++k) out[k] = -1.0 + 2.0 * k / (K - 1);
    return out;
}

Matrix exponential_basis(const Vector& v, const Vector& rates) {
    if (!v.allFinite()) throw numeric_error("exponential_basis: non-finite input");
    Matrix out(v.size(), rates.size());
    for (Index k = 0; k < rates.size(); ++k) out.col(k) = (rates[k] * v.array()).exp();
    return out;
}

Matrix tensor_product(const Matrix& A, const Matrix& B) {
    require(A.rows() == B.rows(), "tensor_product: row counts differ");
    Matrix out(A.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.cols(); ++i)
        for (Index j = 0; j < B.cols(); ++j)
            out.col(i * B.cols() + j) = A.col(i).array() * B.col(j).array();
    return out;
}

Matrix Standardizer::apply(const Matrix& raw) const {
    Matrix out(raw.rows(), r());
    out.col(0).setOnes();
    for (int k = 1; k < r(); ++k)
        out.col(k) = (raw.col(kept[static_cast<size_t>(k)]).array() - mean[k]) / sd[k];
    return out;
}

Standardizer fit_standardizer(const Matrix& raw) {
    require(raw.rows() >= 2, "fit_standardizer: need at least 2 rows");
    const double n = static_cast<double>(raw.rows());
    Standardizer s;
    s.kept.push_back(0);
    std::vector<double> means{0.0}, sds{0.0};
    for (Index k = 1; k < raw.cols(); ++k) {
        double m = raw.col(k).mean();
        double var = (raw.col(k).array() - m).square().sum() / n;
        if (var <= 1e-24) {
            ++s.dropped;  // degenerate column, e.g. a zero-rate tensor term
            continue;
        }
        s.kept.push_back(static_cast<int>(k));
        means.push_back(m);
        sds.push_back(std::sqrt(var));
    }
    s.mean = Eigen::Map<Vector>(means.data(), static_cast<Index>(means.size()));
    s.sd = Eigen::Map<Vector>(sds.data(), static_cast<Index>(sds.size()));
    return s;
}

Matrix Dictionary::raw(const Matrix& X) const {
    require(X.cols() == static_cast<Index>(rates.size()), "Dictionary: wrong input width");
    Matrix tens;
    for (size_t v = 0; v < rates.size(); ++v) {
        Vector u = (X.col(static_cast<Index>(v)).array() - in_mean[static_cast<Index>(v)]) /
                   in_sd[static_cast<Index>(v)];
        u = u.array().min(clamp).max(-clamp);
        Matrix b = exponential_basis(u, rates[v]);
        tens = (v == 0) ? b : tensor_product(tens, b);
    }
    Matrix out(X.rows(), tens.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(tens.cols()) = tens;
    return out;
}

Matrix Dictionary::eval(const Matrix& X) const { return standardizer.apply(raw(X)); }

Dictionary fit_dictionary(const Matrix& X, const std::vector<int>& widths, double clamp) {
    require(static_cast<size_t>(X.cols()) == widths.size(),
            "fit_dictionary: one width per input variable");
    Dictionary d;
    d.clamp = clamp;
    d.in_mean.resize(X.cols());
    d.in_sd.resize(X.cols());
    const double n = static_cast<double>(X.rows());
    for (Index v = 0; v < X.cols(); ++v) {
        d.in_mean[v] = X.col(v).mean();
        double var = (X.col(v).array() - d.in_mean[v]).square().sum() / n;
        d.in_sd[v] = var > 1e-24 ? std::sqrt(var) : 1.0;
        d.rates.push_back(equally_spaced_rates(widths[static_cast<size_t>(v)]));
    }
    d.standardizer = fit_standardizer(d.raw(X));
    return d;
}

int default_dictionary_width(int n_train) {
    int k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_train)) / 5.0));
    return std::max(2, k);
}

}  // namespace oriv
