#include "oriv/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "oriv/rng.hpp"

namespace oriv {

ScalarMin grid_then_golden(const std::function<double(double)>& f, double lo, double hi,
                           int grid_points, double tol) {
    require(hi > lo && grid_points >= 3, "grid_then_golden: bad bracket");
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> xs(static_cast<size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) {
        double x = lo + (hi - lo) * i / (grid_points - 1);
        xs[static_cast<size_t>(i)] = x;
        double v = f(x);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    double a = xs[static_cast<size_t>(std::max(0, best - 1))];
    double b = xs[static_cast<size_t>(std::min(grid_points - 1, best + 1))];

    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    ScalarMin out;
    out.x = 0.5 * (a + b);
    out.value = f(out.x);
    out.at_boundary = best == 0 || best == grid_points - 1;
    return out;
}

namespace {

SimplexMin nelder_mead_once(const std::function<double(const Vector&)>& f, const Vector& x0,
                            double scale, int max_iter, double tol) {
    const int d = static_cast<int>(x0.size());
    std::vector<Vector> pts(static_cast<size_t>(d + 1), x0);
    for (int i = 0; i < d; ++i) pts[static_cast<size_t>(i + 1)][i] += scale;
    std::vector<double> vals(static_cast<size_t>(d + 1));
    for (int i = 0; i <= d; ++i) vals[static_cast<size_t>(i)] = f(pts[static_cast<size_t>(i)]);

    auto order = [&] {
        std::vector<int> idx(static_cast<size_t>(d + 1));
        for (int i = 0; i <= d; ++i) idx[static_cast<size_t>(i)] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            return vals[static_cast<size_t>(a)] < vals[static_cast<size_t>(b)];
        });
        std::vector<Vector> p2;
        std::vector<double> v2;
        for (int i : idx) {
            p2.push_back(pts[static_cast<size_t>(i)]);
            v2.push_back(vals[static_cast<size_t>(i)]);
        }
        pts = std::move(p2);
        vals = std::move(v2);
    };

    for (int it = 0; it < max_iter; ++it) {
        order();
        if (std::fabs(vals.back() - vals.front()) <
            tol * (1.0 + std::fabs(vals.front())))
            break;
        Vector centroid = Vector::Zero(d);
        for (int i = 0; i < d; ++i) centroid += pts[static_cast<size_t>(i)];
        centroid /= d;
        Vector xr = centroid + (centroid - pts.back());
        double fr = f(xr);
        if (fr < vals.front()) {
            Vector xe = centroid + 2.0 * (centroid - pts.back());
            double fe = f(xe);
            if (fe < fr) {
                pts.back() = xe;
                vals.back() = fe;
            } else {
                pts.back() = xr;
                vals.back() = fr;
            }
        } else if (fr < vals[static_cast<size_t>(d - 1)]) {
            pts.back() = xr;
            vals.back() = fr;
        } else {
            Vector xc = centroid + 0.5 * (pts.back() - centroid);
            double fcv = f(xc);
            if (fcv < vals.back()) {
                pts.back() = xc;
                vals.back() = fcv;
            } else {
                for (int i = 1; i <= d; ++i) {
                    pts[static_cast<size_t>(i)] =
                        pts[0] + 0.5 * (pts[static_cast<size_t>(i)] - pts[0]);
                    vals[static_cast<size_t>(i)] = f(pts[static_cast<size_t>(i)]);
                }
            }
        }
    }
    order();
    return {pts.front(), vals.front()};
}

}  // namespace

SimplexMin nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                       double scale, int restarts, uint64_t seed, int max_iter, double tol) {
    SimplexMin best = nelder_mead_once(f, x0, scale, max_iter, tol);
    Rng rng(seed);
    for (int s = 0; s < restarts; ++s) {
        Vector x = x0;
        for (Index i = 0; i < x.size(); ++i) x[i] += scale * (2.0 * rng.uniform() - 1.0) * 2.0;
        SimplexMin cand = nelder_mead_once(f, x, scale, max_iter, tol);
        if (cand.value < best.value) best = cand;
    }
    return best;
}

}  // namespace oriv
