#include "oriv/first_stage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oriv/rng.hpp"

namespace oriv {

RegressorSpec RegressorSpec::gbt() { return RegressorSpec{}; }

RegressorSpec RegressorSpec::ridge_basis_spec(double ridge_penalty) {
    RegressorSpec s;
    s.kind = Kind::ridge_basis;
    s.ridge = ridge_penalty;
    return s;
}

double GbtModel::predict_one(const double* x, int) const {
    double f = intercept;
    int m = std::min<int>(predict_trees, static_cast<int>(trees.size()));
    for (int t = 0; t < m; ++t) {
        const auto& tree = trees[static_cast<size_t>(t)];
        int node = 0;
        while (tree[static_cast<size_t>(node)].feature >= 0) {
            const auto& nd = tree[static_cast<size_t>(node)];
            node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        f += shrinkage * tree[static_cast<size_t>(node)].value;
    }
    return f;
}

Vector GbtModel::predict(const Matrix& X) const {
    Vector out(X.rows());
    std::vector<double> row(static_cast<size_t>(X.cols()));
    for (Index i = 0; i < X.rows(); ++i) {
        for (Index j = 0; j < X.cols(); ++j) row[static_cast<size_t>(j)] = X(i, j);
        out[i] = predict_one(row.data(), static_cast<int>(X.cols()));
    }
    return out;
}

namespace {

// Tree builder working on per-feature sorted index lists; partitioning keeps
// them sorted, so there is no per-node re-sort.
struct TreeBuilder {
    const Matrix& X;
    const std::vector<double>& resid;
    int min_node;
    int max_depth;
    std::vector<GbtModel::Node>& nodes;
    std::vector<int>& stamp;  // per-row generation marks, shared across trees
    int mark = 0;

    struct NodeRows {
        std::vector<std::vector<int>> by_feature;  // same row set, sorted per feature
        int count() const { return static_cast<int>(by_feature[0].size()); }
    };

    int build(NodeRows rows, int depth) {
        const int m = rows.count();
        double sum = 0.0;
        for (int i : rows.by_feature[0]) sum += resid[static_cast<size_t>(i)];

        int best_feature = -1, best_pos = -1;
        double best_gain = 0.0, best_threshold = 0.0;
        if (depth < max_depth && m >= 2 * min_node) {
            const double base = sum * sum / m;
            for (size_t f = 0; f < rows.by_feature.size(); ++f) {
                const auto& ord = rows.by_feature[f];
                double left = 0.0;
                for (int p = 1; p < m; ++p) {
                    left += resid[static_cast<size_t>(ord[static_cast<size_t>(p - 1)])];
                    double xl = X(ord[static_cast<size_t>(p - 1)], static_cast<Index>(f));
                    double xr = X(ord[static_cast<size_t>(p)], static_cast<Index>(f));
                    if (xl == xr) continue;
                    if (p < min_node || m - p < min_node) continue;
                    double right = sum - left;
                    double gain = left * left / p + right * right / (m - p) - base;
                    if (gain > best_gain + 1e-14) {  // strict: first (lowest) threshold wins ties
                        best_gain = gain;
                        best_feature = static_cast<int>(f);
                        best_pos = p;
                        best_threshold = 0.5 * (xl + xr);
                    }
                }
            }
        }

        int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (best_feature < 0) {
            nodes[static_cast<size_t>(id)].value = sum / m;
            return id;
        }

        // membership of the left child, then stable partition of every sorted list
        const auto& ord = rows.by_feature[static_cast<size_t>(best_feature)];
        const int this_mark = ++mark;
        for (int p = 0; p < best_pos; ++p)
            stamp[static_cast<size_t>(ord[static_cast<size_t>(p)])] = this_mark;
        NodeRows left_rows, right_rows;
        left_rows.by_feature.resize(rows.by_feature.size());
        right_rows.by_feature.resize(rows.by_feature.size());
        for (size_t f = 0; f < rows.by_feature.size(); ++f) {
            for (int i : rows.by_feature[f]) {
                if (stamp[static_cast<size_t>(i)] == this_mark)
                    left_rows.by_feature[f].push_back(i);
                else
                    right_rows.by_feature[f].push_back(i);
            }
        }
        nodes[static_cast<size_t>(id)].feature = best_feature;
        nodes[static_cast<size_t>(id)].threshold = best_threshold;
        int li = build(std::move(left_rows), depth + 1);
        int ri = build(std::move(right_rows), depth + 1);
        nodes[static_cast<size_t>(id)].left = li;
        nodes[static_cast<size_t>(id)].right = ri;
        return id;
    }
};

double tree_value(const std::vector<GbtModel::Node>& tree, const double* x) {
    int node = 0;
    while (tree[static_cast<size_t>(node)].feature >= 0) {
        const auto& nd = tree[static_cast<size_t>(node)];
        node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return tree[static_cast<size_t>(node)].value;
}

}  // namespace

GbtModel fit_gbt(const Matrix& X, const Vector& y, const RegressorSpec& spec, uint64_t seed) {
    const int n = static_cast<int>(X.rows());
    if (n < 2 * spec.min_node)
        throw numeric_error("fit_gbt: fewer rows than one split requires (" + std::to_string(n) +
                            ")");
    Rng rng(seed);
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    int n_train = std::max(2 * spec.min_node,
                           static_cast<int>(std::lround(spec.train_fraction * n)));
    n_train = std::min(n_train, n);
    std::vector<int> train(order.begin(), order.begin() + n_train);
    std::vector<int> valid(order.begin() + n_train, order.end());

    GbtModel model;
    model.shrinkage = spec.shrinkage;
    model.predict_trees = std::min(spec.predict_trees, spec.n_trees);

    double mu = 0.0;
    for (int i : train) mu += y[i];
    mu /= n_train;
    model.intercept = mu;

    std::vector<double> fit(static_cast<size_t>(n), mu);
    std::vector<double> resid(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) resid[static_cast<size_t>(i)] = y[i] - fit[static_cast<size_t>(i)];

    const int bag_size =
        std::max(2 * spec.min_node, static_cast<int>(std::floor(spec.bag_fraction * n_train)));
    std::vector<int> scratch(train);
    std::vector<double> xrow(static_cast<size_t>(X.cols()));
    std::vector<int> stamp(static_cast<size_t>(n), 0);
    int mark_floor = 0;

    model.trees.reserve(static_cast<size_t>(spec.n_trees));
    model.train_loss.reserve(static_cast<size_t>(spec.n_trees));
    for (int t = 0; t < spec.n_trees; ++t) {
        // bag: partial Fisher-Yates over the training ids
        int bsz = std::min(bag_size, n_train);
        for (int k = 0; k < bsz; ++k) {
            int j = k + rng.uniform_int(n_train - k);
            std::swap(scratch[static_cast<size_t>(k)], scratch[static_cast<size_t>(j)]);
        }
        std::vector<int> bag(scratch.begin(), scratch.begin() + bsz);

        TreeBuilder::NodeRows rows;
        rows.by_feature.resize(static_cast<size_t>(X.cols()));
        for (Index f = 0; f < X.cols(); ++f) {
            auto& ord = rows.by_feature[static_cast<size_t>(f)];
            ord = bag;
            std::sort(ord.begin(), ord.end(), [&](int a, int b) {
                double xa = X(a, f), xb = X(b, f);
                return xa < xb || (xa == xb && a < b);
            });
        }
        std::vector<GbtModel::Node> tree;
        TreeBuilder builder{X, resid, spec.min_node, spec.depth, tree, stamp, mark_floor};
        builder.build(std::move(rows), 0);
        mark_floor = builder.mark;
        model.trees.push_back(std::move(tree));

        const auto& tr = model.trees.back();
        for (int i = 0; i < n; ++i) {
            for (Index j = 0; j < X.cols(); ++j) xrow[static_cast<size_t>(j)] = X(i, j);
            fit[static_cast<size_t>(i)] += spec.shrinkage * tree_value(tr, xrow.data());
            resid[static_cast<size_t>(i)] = y[i] - fit[static_cast<size_t>(i)];
        }
        double tl = 0.0;
        for (int i : train) tl += resid[static_cast<size_t>(i)] * resid[static_cast<size_t>(i)];
        model.train_loss.push_back(tl / n_train);
        if (!valid.empty()) {
            double vl = 0.0;
            for (int i : valid) vl += resid[static_cast<size_t>(i)] * resid[static_cast<size_t>(i)];
            model.valid_loss.push_back(vl / static_cast<double>(valid.size()));
        }
    }
    return model;
}

Vector RidgeBasisModel::predict(const Matrix& X) const {
    Vector raw = dict.eval(X) * beta;
    if (shrink_to_mean == 1.0) return raw;
    return Vector::Constant(raw.size(), train_mean) + shrink_to_mean * (raw.array() - train_mean).matrix();
}

RidgeBasisModel fit_ridge_basis(const Matrix& X, const Vector& y, const Dictionary& dict,
                                double ridge) {
    require(ridge > 0.0, "fit_ridge_basis: ridge must be positive");
    Matrix G = dict.eval(X);
    const double n = static_cast<double>(G.rows());
    Matrix A = G.transpose() * G / n;
    for (Index k = 1; k < A.rows(); ++k) A(k, k) += ridge;
    Vector b = G.transpose() * y / n;
    RidgeBasisModel model;
    model.dict = dict;
    model.beta = A.ldlt().solve(b);
    model.train_mean = y.mean();
    return model;
}

Matrix conditioner_matrix(const PanelDataset& panel, const std::vector<std::string>& vars,
                          int period) {
    Matrix out(panel.n_firms(), static_cast<Index>(vars.size()));
    for (size_t v = 0; v < vars.size(); ++v) out.col(static_cast<Index>(v)) = panel.var(vars[v]).col(period);
    return out;
}

CrossfitEta crossfit_eta(const PanelDataset& panel, const FoldPlan& folds,
                         const RegressorSpec& spec, const std::vector<EtaTarget>& targets,
                         uint64_t seed) {
    CrossfitEta out;
    out.folds = folds;
    const int n = panel.n_firms();
    const int nt = static_cast<int>(targets.size());
    out.heldout.resize(n, nt);
    out.per_fold.assign(static_cast<size_t>(folds.L), Matrix(n, nt));

    for (int l = 0; l < folds.L; ++l) {
        auto train = folds.complement(l);
        for (int t = 0; t < nt; ++t) {
            const auto& tgt = targets[static_cast<size_t>(t)];
            Matrix Xall = conditioner_matrix(panel, tgt.conditioners, tgt.period);
            Vector yall = panel.var(tgt.response).col(tgt.period);
            Matrix Xtr = rows_of(Xall, train);
            Vector ytr = entries_of(yall, train);
            uint64_t s = Rng::derive(seed, static_cast<uint64_t>(l) * 1000003ULL +
                                               static_cast<uint64_t>(t));
            Vector pred;
            try {
                if (spec.kind == RegressorSpec::Kind::gradient_boosted_trees) {
                    GbtModel m = fit_gbt(Xtr, ytr, spec, s);
                    pred = m.predict(Xall);
                } else {
                    int w = spec.basis_width > 0 ? spec.basis_width
                                                 : default_dictionary_width(static_cast<int>(Xtr.rows()));
                    Dictionary d = fit_dictionary(
                        Xtr, std::vector<int>(static_cast<size_t>(Xtr.cols()), w), spec.clamp);
                    RidgeBasisModel m = fit_ridge_basis(Xtr, ytr, d, spec.ridge);
                    m.shrink_to_mean = spec.shrink_to_mean;
                    pred = m.predict(Xall);
                }
            } catch (const std::exception& e) {
                throw numeric_error("first-stage fit failed for fold " + std::to_string(l) +
                                    ", target " + std::to_string(t) + ": " + e.what());
            }
            out.per_fold[static_cast<size_t>(l)].col(t) = pred;
        }
    }
    for (int i = 0; i < n; ++i)
        out.heldout.row(i) = out.per_fold[static_cast<size_t>(folds.assignment[static_cast<size_t>(i)])].row(i);
    return out;
}

}  // namespace oriv
