#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "comfort/encode.hpp"
#include "comfort/mtl.hpp"

namespace comfort {

enum class ModelKind {
    Mtl,
    Knn,
    DecisionTree,
    RandomForest,
    AdaBoost,
    LinearSvm,
    StlDnn,
};

// Config-facing names: mtl, knn, decision_tree, random_forest, adaboost,
// svm, dnn.
std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);
// Table-style display names (KNN, Decision Tree, ..., DeepComfort (MTL)).
std::string model_display_name(ModelKind kind);

struct BaselineParams {
    std::size_t knn_k = 5;
    std::size_t tree_max_depth = 10;
    std::size_t tree_min_leaf = 1;
    std::size_t forest_trees = 100;
    double forest_feature_fraction = 0.5;
    bool forest_bootstrap = true;
    std::size_t boost_rounds = 50;
    double svm_c = 1.0;
    std::size_t svm_epochs = 200;
    double svm_step = 0.001;
    double svm_bias_step = 0.001;
    Hyperparams dnn;  // single-task network settings
};

void validate_baseline_params(const BaselineParams& p);

std::string baseline_params_to_json(const BaselineParams& p);
BaselineParams baseline_params_from_json(const std::string& text);

// One task at a time against encoded rows; rows lacking the task's label
// are dropped at fit time. Fits are deterministic given the seed.
class SingleTaskModel {
  public:
    virtual ~SingleTaskModel() = default;
    virtual void fit(const EncodedDataset& train, std::size_t task,
                     std::uint64_t seed) = 0;
    // Predicted class index within the task's scale.
    virtual std::size_t predict_index(std::span<const double> x) const = 0;
    virtual void predict_batch(const EncodedDataset& data,
                               std::vector<std::size_t>& out) const;
    virtual ModelKind kind() const = 0;
};

std::unique_ptr<SingleTaskModel> make_baseline(ModelKind kind,
                                               const BaselineParams& params);

class KnnModel : public SingleTaskModel {
  public:
    explicit KnnModel(std::size_t k) : k_(k) {}
    void fit(const EncodedDataset& train, std::size_t task,
             std::uint64_t seed) override;
    std::size_t predict_index(std::span<const double> x) const override;
    ModelKind kind() const override { return ModelKind::Knn; }

  private:
    std::size_t k_;
    std::size_t d_ = 0;
    std::size_t classes_ = 0;
    std::vector<double> x_;             // row-major labeled training rows
    std::vector<std::size_t> y_;
};

// CART-style axis-aligned splits minimizing weighted Gini impurity. The
// predicate is x[feature] <= threshold with midpoint thresholds; split ties
// break toward the lower feature index, then the lower threshold.
struct TreeNode {
    bool leaf = true;
    std::size_t cls = 0;        // leaf majority class
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;       // node indices within the tree
    std::size_t right = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    std::size_t predict(std::span<const double> x) const;
};

// Sample-weighted fit over the given rows; weights must be non-negative.
// A subsampled feature list restricts split candidates (empty = all).
Tree fit_tree(const EncodedDataset& data, std::size_t task,
              const std::vector<std::size_t>& rows,
              const std::vector<double>& weights, std::size_t max_depth,
              std::size_t min_leaf, double feature_fraction, Rng* rng);

class DecisionTreeModel : public SingleTaskModel {
  public:
    DecisionTreeModel(std::size_t max_depth, std::size_t min_leaf)
        : max_depth_(max_depth), min_leaf_(min_leaf) {}
    void fit(const EncodedDataset& train, std::size_t task,
             std::uint64_t seed) override;
    std::size_t predict_index(std::span<const double> x) const override;
    ModelKind kind() const override { return ModelKind::DecisionTree; }

  private:
    std::size_t max_depth_;
    std::size_t min_leaf_;
    Tree tree_;
};

class RandomForestModel : public SingleTaskModel {
  public:
    RandomForestModel(std::size_t n_trees, std::size_t max_depth,
                      std::size_t min_leaf, double feature_fraction,
                      bool bootstrap);
    void fit(const EncodedDataset& train, std::size_t task,
             std::uint64_t seed) override;
    std::size_t predict_index(std::span<const double> x) const override;
    ModelKind kind() const override { return ModelKind::RandomForest; }

  private:
    std::size_t n_trees_;
    std::size_t max_depth_;
    std::size_t min_leaf_;
    double feature_fraction_;
    bool bootstrap_;
    std::size_t classes_ = 0;
    std::vector<Tree> trees_;
};

// Multiclass SAMME over depth-1 stumps. Boosting stops early when a round's
// weighted error reaches 1 - 1/K (no better than chance) or hits zero.
class AdaBoostModel : public SingleTaskModel {
  public:
    explicit AdaBoostModel(std::size_t rounds) : rounds_(rounds) {}
    void fit(const EncodedDataset& train, std::size_t task,
             std::uint64_t seed) override;
    std::size_t predict_index(std::span<const double> x) const override;
    ModelKind kind() const override { return ModelKind::AdaBoost; }

    struct Round {
        Tree stump;
        double alpha = 0.0;
        double error = 0.0;
    };
    const std::vector<Round>& rounds() const { return fitted_; }

  private:
    std::size_t rounds_;
    std::size_t classes_ = 0;
    std::size_t fallback_ = 0;  // majority class when no round survives
    std::vector<Round> fitted_;
};

// One-vs-rest linear classifiers trained by full-batch subgradient descent
// on hinge loss plus L2; prediction is the argmax margin.
class LinearSvmModel : public SingleTaskModel {
  public:
    LinearSvmModel(double c, std::size_t epochs, double step,
                   double bias_step);
    void fit(const EncodedDataset& train, std::size_t task,
             std::uint64_t seed) override;
    std::size_t predict_index(std::span<const double> x) const override;
    ModelKind kind() const override { return ModelKind::LinearSvm; }

  private:
    double c_;
    std::size_t epochs_;
    double step_;
    double bias_step_;
    std::size_t d_ = 0;
    std::size_t classes_ = 0;
    std::vector<double> w_;  // row-major classes x d
    std::vector<double> b_;
};

// The single-task ablation of the MTL network: same trunk defaults, one
// softmax head, identical parameter streams for the shared task name.
class StlDnnModel : public SingleTaskModel {
  public:
    explicit StlDnnModel(Hyperparams hp) : base_(std::move(hp)) {}
    void fit(const EncodedDataset& train, std::size_t task,
             std::uint64_t seed) override;
    std::size_t predict_index(std::span<const double> x) const override;
    void predict_batch(const EncodedDataset& data,
                       std::vector<std::size_t>& out) const override;
    ModelKind kind() const override { return ModelKind::StlDnn; }
    const MtlNetwork& network() const { return net_; }

  private:
    Hyperparams base_;
    MtlNetwork net_;
};

}  // namespace comfort
