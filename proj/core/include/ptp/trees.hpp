#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptp/encode.hpp"

namespace ptp::trees {

enum class Criterion { gini, entropy };
std::string_view to_string(Criterion c);
Criterion criterion_from_string(std::string_view text);

// impurity of a label distribution given absolute class counts:
// gini = 1 - sum p^2, entropy = -sum p log2 p (in bits)
double impurity(std::span<const std::int64_t> class_counts, Criterion criterion);

struct FeatureInfo {
  std::string name;
  bool categorical = false;
  std::size_t cardinality = 0;  // categorical levels incl. the unknown slot
};

// Columnar training view shared by all tree learners. Categorical levels are
// stored as exact small doubles (their dictionary index). The per-feature
// sort orders are computed once and reused by every tree grown on the data,
// which is what keeps boosted fits with hundreds of stages affordable.
struct TreeData {
  std::vector<FeatureInfo> features;
  std::size_t n_rows = 0;
  std::vector<double> values;  // n_rows x n_features, row-major
  std::vector<int> labels;     // 0/1; ignored by regression fits

  double at(std::size_t row, std::size_t feature) const {
    return values[row * features.size() + feature];
  }

  static TreeData from_encoded(const data::EncodedDataset& ds);
  void ensure_presorted() const;
  mutable std::vector<std::vector<std::uint32_t>> presorted;  // empty for categorical features
};

// feature vector for one encoded row, in the same order as from_encoded
std::vector<double> feature_row(const data::EncodedDataset& ds, std::size_t row);

struct Split {
  std::size_t feature = 0;
  bool categorical = false;
  double threshold = 0.0;          // continuous: value <= threshold goes left
  std::vector<int> left_levels;    // categorical: levels routed left
  std::vector<int> right_levels;   // remaining levels seen while fitting
  bool unknown_left = false;       // where levels never seen at this node go

  bool route_left(double value) const;
};

struct TreeConfig {
  Criterion criterion = Criterion::gini;
  std::size_t max_depth = 5;
  std::size_t min_samples_leaf = 1;   // weighted rows required on each side
  std::size_t min_samples_split = 2;  // weighted rows required to try a split
};

struct TreeNode {
  std::int64_t count = 0;  // weighted rows that reached the node
  std::array<std::int64_t, 2> class_counts{{0, 0}};
  int predicted = 0;        // majority class, ties -> 0
  double p_positive = 0.0;  // class-1 share while fitting
  bool leaf = true;
  Split split;
  double gain = 0.0;  // impurity decrease achieved by the split
  std::unique_ptr<TreeNode> left, right;
};

struct SplitScore {
  bool found = false;
  Split split;
  double weighted_impurity = 0.0;  // child impurities weighted by row share
  double gain = 0.0;
};

// Deterministic argmin over every candidate split: all midpoints between
// consecutive distinct values for continuous features, one-vs-rest for
// categorical levels. Exact ties resolve to the lowest feature index, then
// the lowest threshold (or level). Exposed so tests can compare the grower
// against an independent enumeration.
SplitScore best_split(const TreeData& data, std::span<const std::size_t> rows,
                      Criterion criterion, std::size_t min_samples_leaf = 1);

std::unique_ptr<TreeNode> grow_tree(const TreeData& data, const TreeConfig& config);
// per-row integer weights (bootstrap multiplicities); weight 0 excludes a row
std::unique_ptr<TreeNode> grow_tree(const TreeData& data, std::span<const std::int64_t> weights,
                                    const TreeConfig& config);

int tree_predict(const TreeNode& root, std::span<const double> row);
double tree_p_positive(const TreeNode& root, std::span<const double> row);

struct ForestConfig {
  TreeConfig tree{};
  std::size_t n_trees = 200;
  bool bootstrap = true;  // n draws with replacement per tree
  std::uint64_t seed = 1;
};

struct Forest {
  ForestConfig config;
  std::vector<FeatureInfo> features;
  std::vector<std::unique_ptr<TreeNode>> trees;
};

// Each tree draws its bootstrap sample from a seed derived as (seed, tree
// index), so the forest is reproducible and independent of build order.
Forest grow_forest(const TreeData& data, const ForestConfig& config);

int forest_predict(const Forest& forest, std::span<const double> row);  // vote, ties -> 0
double forest_p_positive(const Forest& forest, std::span<const double> row);  // vote share

enum class GbmLoss { squared, logistic };
std::string_view to_string(GbmLoss loss);
GbmLoss gbm_loss_from_string(std::string_view text);

struct GbmConfig {
  std::size_t n_stages = 300;
  double learning_rate = 0.1;
  std::size_t max_depth = 5;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  GbmLoss loss = GbmLoss::logistic;
};

struct RegressionNode {
  std::int64_t count = 0;
  double value = 0.0;  // mean target of the rows that reached the node
  bool leaf = true;
  Split split;
  double gain = 0.0;  // variance decrease achieved by the split
  std::unique_ptr<RegressionNode> left, right;
};

// squared-error regression tree on real targets; same candidate set and
// tie-break as the classification grower
std::unique_ptr<RegressionNode> grow_regression_tree(const TreeData& data,
                                                     std::span<const double> targets,
                                                     std::size_t max_depth,
                                                     std::size_t min_samples_leaf = 1,
                                                     std::size_t min_samples_split = 2);
double regression_predict(const RegressionNode& root, std::span<const double> row);

// Stagewise additive model: start from a constant, then repeatedly fit a
// regression tree to the current residuals and add it scaled by the learning
// rate. squared loss tracks mean 0.5(y-F)^2; logistic fits y - sigmoid(F)
// and tracks mean log-loss.
struct Gbm {
  GbmConfig config;
  std::vector<FeatureInfo> features;
  double f0 = 0.0;
  std::vector<std::unique_ptr<RegressionNode>> stages;
  std::vector<double> train_loss;  // n_stages + 1 entries, loss before/after each stage
};

Gbm fit_gbm(const TreeData& data, const GbmConfig& config);
double gbm_raw_score(const Gbm& model, std::span<const double> row);
double gbm_p_positive(const Gbm& model, std::span<const double> row);

// Mean-decrease-in-impurity importance: each split contributes its gain
// scaled by the fraction of (weighted) rows that reached it; forest and
// boosted variants accumulate over all trees. Normalized to sum to 1 when
// any split exists.
std::vector<double> importance(const TreeNode& root, std::size_t n_features);
std::vector<double> importance(const Forest& forest);
std::vector<double> importance(const Gbm& model);

}  // namespace ptp::trees
