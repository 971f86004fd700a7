#pragma once

#include <string>
#include <vector>

#include "oriv/basis.hpp"
#include "oriv/panel.hpp"
#include "oriv/types.hpp"

namespace oriv {

struct RegressorSpec {
    enum class Kind { gradient_boosted_trees, ridge_basis };
    Kind kind = Kind::gradient_boosted_trees;

    // boosting (defaults follow the reference experiment settings)
    int n_trees = 2000;
    int predict_trees = 500;
    int depth = 3;
    int min_node = 10;
    double shrinkage = 0.001;
    double bag_fraction = 0.5;
    double train_fraction = 0.5;  // first half fits, second half tracks val loss

    // ridge on an exponential tensor dictionary
    double ridge = 0.1;
    int basis_width = 0;  // 0 -> default width rule
    double clamp = 3.0;
    double shrink_to_mean = 1.0;  // extra prediction shrink toward the training mean

    static RegressorSpec gbt();
    static RegressorSpec ridge_basis_spec(double ridge_penalty);
};

// Regression tree for boosting. Exact greedy splits over sorted unique values,
// ties broken toward the lower threshold.
struct GbtModel {
    struct Node {
        int feature = -1;  // -1: leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        double value = 0.0;
    };
    double intercept = 0.0;
    double shrinkage = 0.0;
    std::vector<std::vector<Node>> trees;
    std::vector<double> train_loss;  // train-half MSE after each tree
    std::vector<double> valid_loss;  // validation-half MSE after each tree
    int predict_trees = 0;

    double predict_one(const double* x, int n_features) const;
    Vector predict(const Matrix& X) const;
};

GbtModel fit_gbt(const Matrix& X, const Vector& y, const RegressorSpec& spec, uint64_t seed);

struct RidgeBasisModel {
    Dictionary dict;
    Vector beta;
    double train_mean = 0.0;
    double shrink_to_mean = 1.0;
    Vector predict(const Matrix& X) const;
};

// Closed-form penalized least squares on the standardized dictionary columns;
// the constant column is not penalized. Solves (G'G/n + ridge*P) b = G'y/n.
RidgeBasisModel fit_ridge_basis(const Matrix& X, const Vector& y, const Dictionary& dict,
                                double ridge);

// One first-stage regression: response variable at `period`, conditioning
// variables at the same period.
struct EtaTarget {
    std::string response;
    std::vector<std::string> conditioners;
    int period = 0;
};

// Cross-fitted eta estimates. per_fold[l] holds fold-l model predictions for
// every firm (held-out use on I_l, in-sample use on the complement); heldout
// stitches the fold-owned rows together.
struct CrossfitEta {
    FoldPlan folds;
    std::vector<Matrix> per_fold;  // L matrices, n_firms x n_targets
    Matrix heldout;                // n_firms x n_targets

    int n_targets() const { return static_cast<int>(heldout.cols()); }
};

CrossfitEta crossfit_eta(const PanelDataset& panel, const FoldPlan& folds,
                         const RegressorSpec& spec, const std::vector<EtaTarget>& targets,
                         uint64_t seed);

Matrix conditioner_matrix(const PanelDataset& panel, const std::vector<std::string>& vars,
                          int period);

}  // namespace oriv
