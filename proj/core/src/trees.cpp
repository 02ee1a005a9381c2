#include "ptp/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ptp/random.hpp"

namespace ptp::trees {

namespace {

using std::int64_t;
using std::size_t;
using std::uint32_t;

// row ids of one node, with a value-sorted copy per continuous feature so
// split sweeps never re-sort
struct ListSet {
  std::vector<uint32_t> ids;
  std::vector<std::vector<uint32_t>> per_feature;
};

double class_impurity(int64_t c0, int64_t c1, Criterion criterion) {
  const std::array<int64_t, 2> counts{{c0, c1}};
  return impurity(std::span<const int64_t>(counts.data(), 2), criterion);
}

struct ClsCandidate {
  bool found = false;
  size_t feature = 0;
  bool categorical = false;
  double threshold = 0.0;
  int level = 0;
  double weighted_impurity = std::numeric_limits<double>::infinity();
  double gain = 0.0;
};

ClsCandidate search_best_cls(const TreeData& data, const ListSet& rows,
                             std::span<const int64_t> w, Criterion criterion, int64_t msl) {
  std::array<int64_t, 2> total{{0, 0}};
  for (uint32_t id : rows.ids) total[static_cast<size_t>(data.labels[id])] += w[id];
  const int64_t wtotal = total[0] + total[1];
  const double parent = class_impurity(total[0], total[1], criterion);
  const double dtotal = static_cast<double>(wtotal);

  ClsCandidate best;
  auto consider = [&](size_t f, bool categorical, double threshold, int level, int64_t l0,
                      int64_t l1) {
    const int64_t wl = l0 + l1, wr = wtotal - wl;
    if (wl < msl || wr < msl) return;
    const double wi = (static_cast<double>(wl) * class_impurity(l0, l1, criterion) +
                       static_cast<double>(wr) * class_impurity(total[0] - l0, total[1] - l1,
                                                                criterion)) /
                      dtotal;
    // strict improvement only: candidates arrive in (feature, threshold)
    // order, so exact ties keep the earliest winner
    if (wi < best.weighted_impurity) {
      best.found = true;
      best.feature = f;
      best.categorical = categorical;
      best.threshold = threshold;
      best.level = level;
      best.weighted_impurity = wi;
      best.gain = parent - wi;
    }
  };

  for (size_t f = 0; f < data.features.size(); ++f) {
    if (data.features[f].categorical) {
      std::vector<std::array<int64_t, 2>> level_counts(data.features[f].cardinality, {{0, 0}});
      for (uint32_t id : rows.ids) {
        const auto level = static_cast<size_t>(data.at(id, f));
        level_counts[level][static_cast<size_t>(data.labels[id])] += w[id];
      }
      for (size_t level = 0; level < level_counts.size(); ++level) {
        const auto [l0, l1] = level_counts[level];
        if (l0 + l1 == 0) continue;
        consider(f, true, 0.0, static_cast<int>(level), l0, l1);
      }
    } else {
      const auto& ord = rows.per_feature[f];
      std::array<int64_t, 2> left{{0, 0}};
      for (size_t k = 0; k < ord.size(); ++k) {
        const uint32_t id = ord[k];
        if (k > 0) {
          const double prev = data.at(ord[k - 1], f);
          const double cur = data.at(id, f);
          if (cur > prev) consider(f, false, 0.5 * (prev + cur), 0, left[0], left[1]);
        }
        left[static_cast<size_t>(data.labels[id])] += w[id];
      }
    }
  }
  return best;
}

struct RegCandidate {
  bool found = false;
  size_t feature = 0;
  bool categorical = false;
  double threshold = 0.0;
  int level = 0;
  double weighted_impurity = std::numeric_limits<double>::infinity();  // mean squared deviation
  double gain = 0.0;
};

RegCandidate search_best_reg(const TreeData& data, const ListSet& rows,
                             std::span<const int64_t> w, std::span<const double> y, int64_t msl) {
  int64_t wtotal = 0;
  double sum = 0.0, sumsq = 0.0;
  for (uint32_t id : rows.ids) {
    const double wi = static_cast<double>(w[id]);
    wtotal += w[id];
    sum += wi * y[id];
    sumsq += wi * y[id] * y[id];
  }
  const double dtotal = static_cast<double>(wtotal);
  auto sse = [](double s, double ss, int64_t n) {
    if (n == 0) return 0.0;
    return std::max(0.0, ss - s * s / static_cast<double>(n));
  };
  const double parent = sse(sum, sumsq, wtotal) / dtotal;

  RegCandidate best;
  auto consider = [&](size_t f, bool categorical, double threshold, int level, int64_t wl,
                      double sl, double ssl) {
    const int64_t wr = wtotal - wl;
    if (wl < msl || wr < msl) return;
    const double wi = (sse(sl, ssl, wl) + sse(sum - sl, sumsq - ssl, wr)) / dtotal;
    if (wi < best.weighted_impurity) {
      best.found = true;
      best.feature = f;
      best.categorical = categorical;
      best.threshold = threshold;
      best.level = level;
      best.weighted_impurity = wi;
      best.gain = parent - wi;
    }
  };

  for (size_t f = 0; f < data.features.size(); ++f) {
    if (data.features[f].categorical) {
      struct LevelStat {
        int64_t w = 0;
        double sum = 0.0, sumsq = 0.0;
      };
      std::vector<LevelStat> stats(data.features[f].cardinality);
      for (uint32_t id : rows.ids) {
        auto& s = stats[static_cast<size_t>(data.at(id, f))];
        const double wi = static_cast<double>(w[id]);
        s.w += w[id];
        s.sum += wi * y[id];
        s.sumsq += wi * y[id] * y[id];
      }
      for (size_t level = 0; level < stats.size(); ++level) {
        if (stats[level].w == 0) continue;
        consider(f, true, 0.0, static_cast<int>(level), stats[level].w, stats[level].sum,
                 stats[level].sumsq);
      }
    } else {
      const auto& ord = rows.per_feature[f];
      int64_t wl = 0;
      double sl = 0.0, ssl = 0.0;
      for (size_t k = 0; k < ord.size(); ++k) {
        const uint32_t id = ord[k];
        if (k > 0) {
          const double prev = data.at(ord[k - 1], f);
          const double cur = data.at(id, f);
          if (cur > prev) consider(f, false, 0.5 * (prev + cur), 0, wl, sl, ssl);
        }
        const double wi = static_cast<double>(w[id]);
        wl += w[id];
        sl += wi * y[id];
        ssl += wi * y[id] * y[id];
      }
    }
  }
  return best;
}

// completes a winning candidate into a routable Split (seen levels, unknown
// routing) and partitions the node rows
template <typename Candidate>
Split finish_split(const TreeData& data, const ListSet& rows, std::span<const int64_t> w,
                   const Candidate& cand) {
  Split split;
  split.feature = cand.feature;
  split.categorical = cand.categorical;
  split.threshold = cand.threshold;
  if (cand.categorical) {
    split.left_levels = {cand.level};
    std::vector<int64_t> level_weight(data.features[cand.feature].cardinality, 0);
    for (uint32_t id : rows.ids) {
      level_weight[static_cast<size_t>(data.at(id, cand.feature))] += w[id];
    }
    int64_t wl = 0, wr = 0;
    for (size_t level = 0; level < level_weight.size(); ++level) {
      if (level_weight[level] == 0) continue;
      if (static_cast<int>(level) == cand.level) {
        wl += level_weight[level];
      } else {
        split.right_levels.push_back(static_cast<int>(level));
        wr += level_weight[level];
      }
    }
    split.unknown_left = wl > wr;
  }
  return split;
}

void partition(const TreeData& data, const ListSet& rows, const Split& split, ListSet& left,
               ListSet& right) {
  auto goes_left = [&](uint32_t id) { return split.route_left(data.at(id, split.feature)); };
  for (uint32_t id : rows.ids) (goes_left(id) ? left : right).ids.push_back(id);
  left.per_feature.resize(rows.per_feature.size());
  right.per_feature.resize(rows.per_feature.size());
  for (size_t f = 0; f < rows.per_feature.size(); ++f) {
    for (uint32_t id : rows.per_feature[f]) {
      (goes_left(id) ? left : right).per_feature[f].push_back(id);
    }
  }
}

ListSet root_list_set(const TreeData& data, std::span<const int64_t> w) {
  data.ensure_presorted();
  ListSet root;
  for (size_t r = 0; r < data.n_rows; ++r) {
    if (w[r] > 0) root.ids.push_back(static_cast<uint32_t>(r));
  }
  root.per_feature.resize(data.features.size());
  for (size_t f = 0; f < data.features.size(); ++f) {
    if (data.features[f].categorical) continue;
    root.per_feature[f].reserve(root.ids.size());
    for (uint32_t id : data.presorted[f]) {
      if (w[id] > 0) root.per_feature[f].push_back(id);
    }
  }
  return root;
}

std::unique_ptr<TreeNode> grow_cls(const TreeData& data, const ListSet& rows,
                                   std::span<const int64_t> w, const TreeConfig& config,
                                   size_t depth) {
  auto node = std::make_unique<TreeNode>();
  for (uint32_t id : rows.ids) {
    node->class_counts[static_cast<size_t>(data.labels[id])] += w[id];
  }
  node->count = node->class_counts[0] + node->class_counts[1];
  node->predicted = node->class_counts[1] > node->class_counts[0] ? 1 : 0;
  node->p_positive =
      node->count == 0
          ? 0.0
          : static_cast<double>(node->class_counts[1]) / static_cast<double>(node->count);

  const bool pure = node->class_counts[0] == 0 || node->class_counts[1] == 0;
  if (depth >= config.max_depth || pure ||
      node->count < static_cast<int64_t>(config.min_samples_split)) {
    return node;
  }
  // A zero-gain winner is still taken (like the usual greedy growers); the
  // recursion terminates anyway because both children must be nonempty.
  const ClsCandidate cand =
      search_best_cls(data, rows, w, config.criterion,
                      std::max<int64_t>(1, static_cast<int64_t>(config.min_samples_leaf)));
  if (!cand.found) return node;

  node->leaf = false;
  node->split = finish_split(data, rows, w, cand);
  node->gain = cand.gain;
  ListSet left, right;
  partition(data, rows, node->split, left, right);
  node->left = grow_cls(data, left, w, config, depth + 1);
  node->right = grow_cls(data, right, w, config, depth + 1);
  return node;
}

std::unique_ptr<RegressionNode> grow_reg(const TreeData& data, const ListSet& rows,
                                         std::span<const int64_t> w, std::span<const double> y,
                                         size_t max_depth, size_t msl, size_t mss, size_t depth) {
  auto node = std::make_unique<RegressionNode>();
  int64_t wtotal = 0;
  double sum = 0.0;
  for (uint32_t id : rows.ids) {
    wtotal += w[id];
    sum += static_cast<double>(w[id]) * y[id];
  }
  node->count = wtotal;
  node->value = wtotal == 0 ? 0.0 : sum / static_cast<double>(wtotal);

  // exact purity test, immune to the floating-point noise of the sum-of-
  // squares identity used during the search
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (uint32_t id : rows.ids) {
    lo = std::min(lo, y[id]);
    hi = std::max(hi, y[id]);
  }
  const bool pure = !(lo < hi);
  if (depth >= max_depth || pure || wtotal < static_cast<int64_t>(mss)) return node;
  const RegCandidate cand =
      search_best_reg(data, rows, w, y, std::max<int64_t>(1, static_cast<int64_t>(msl)));
  if (!cand.found) return node;

  node->leaf = false;
  node->split = finish_split(data, rows, w, cand);
  node->gain = cand.gain;
  ListSet left, right;
  partition(data, rows, node->split, left, right);
  node->left = grow_reg(data, left, w, y, max_depth, msl, mss, depth + 1);
  node->right = grow_reg(data, right, w, y, max_depth, msl, mss, depth + 1);
  return node;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::string_view to_string(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }

Criterion criterion_from_string(std::string_view text) {
  if (text == "gini") return Criterion::gini;
  if (text == "entropy") return Criterion::entropy;
  throw std::runtime_error("trees: unknown criterion '" + std::string(text) + "'");
}

std::string_view to_string(GbmLoss loss) {
  return loss == GbmLoss::squared ? "squared" : "logistic";
}

GbmLoss gbm_loss_from_string(std::string_view text) {
  if (text == "squared") return GbmLoss::squared;
  if (text == "logistic") return GbmLoss::logistic;
  throw std::runtime_error("trees: unknown loss '" + std::string(text) + "'");
}

double impurity(std::span<const int64_t> class_counts, Criterion criterion) {
  int64_t total = 0;
  for (int64_t c : class_counts) {
    if (c < 0) throw std::invalid_argument("impurity: negative class count");
    total += c;
  }
  if (total == 0) return 0.0;
  if (criterion == Criterion::gini) {
    double acc = 1.0;
    for (int64_t c : class_counts) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      acc -= p * p;
    }
    return acc;
  }
  double acc = 0.0;
  for (int64_t c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    acc -= p * std::log2(p);
  }
  return acc;
}

TreeData TreeData::from_encoded(const data::EncodedDataset& ds) {
  TreeData out;
  out.n_rows = ds.n_rows;
  out.labels = ds.labels;
  for (const auto& col : ds.encoder.columns) {
    if (col.kind == data::ColumnKind::categorical) {
      out.features.push_back({col.name, true, col.cat.cardinality()});
    } else {
      out.features.push_back({col.name, false, 0});
    }
  }
  out.values.resize(ds.n_rows * out.features.size());
  for (size_t r = 0; r < ds.n_rows; ++r) {
    size_t jc = 0, jq = 0;
    for (size_t f = 0; f < out.features.size(); ++f) {
      out.values[r * out.features.size() + f] =
          out.features[f].categorical ? static_cast<double>(ds.cat_at(r, jc++))
                                      : ds.cont_at(r, jq++);
    }
  }
  return out;
}

std::vector<double> feature_row(const data::EncodedDataset& ds, size_t row) {
  std::vector<double> out;
  out.reserve(ds.encoder.columns.size());
  size_t jc = 0, jq = 0;
  for (const auto& col : ds.encoder.columns) {
    if (col.kind == data::ColumnKind::categorical) {
      out.push_back(static_cast<double>(ds.cat_at(row, jc++)));
    } else {
      out.push_back(ds.cont_at(row, jq++));
    }
  }
  return out;
}

void TreeData::ensure_presorted() const {
  if (!presorted.empty()) return;
  presorted.resize(features.size());
  for (size_t f = 0; f < features.size(); ++f) {
    if (features[f].categorical) continue;
    auto& ord = presorted[f];
    ord.resize(n_rows);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](uint32_t a, uint32_t b) { return at(a, f) < at(b, f); });
  }
}

bool Split::route_left(double value) const {
  if (!categorical) return value <= threshold;
  const int level = static_cast<int>(std::llround(value));
  if (std::find(left_levels.begin(), left_levels.end(), level) != left_levels.end()) return true;
  if (std::find(right_levels.begin(), right_levels.end(), level) != right_levels.end()) {
    return false;
  }
  return unknown_left;
}

SplitScore best_split(const TreeData& data, std::span<const size_t> rows, Criterion criterion,
                      size_t min_samples_leaf) {
  std::vector<int64_t> w(data.n_rows, 0);
  for (size_t r : rows) {
    if (r >= data.n_rows) throw std::out_of_range("best_split: row index out of range");
    ++w[r];
  }
  const ListSet set = root_list_set(data, w);
  const ClsCandidate cand =
      search_best_cls(data, set, w, criterion, static_cast<int64_t>(min_samples_leaf));
  SplitScore out;
  out.found = cand.found;
  if (cand.found) {
    out.split = finish_split(data, set, w, cand);
    out.weighted_impurity = cand.weighted_impurity;
    out.gain = cand.gain;
  }
  return out;
}

std::unique_ptr<TreeNode> grow_tree(const TreeData& data, const TreeConfig& config) {
  const std::vector<int64_t> w(data.n_rows, 1);
  return grow_tree(data, w, config);
}

std::unique_ptr<TreeNode> grow_tree(const TreeData& data, std::span<const int64_t> weights,
                                    const TreeConfig& config) {
  if (weights.size() != data.n_rows) {
    throw std::invalid_argument("grow_tree: weights must cover every row");
  }
  for (int label : data.labels) {
    if (label != 0 && label != 1) {
      throw std::invalid_argument("grow_tree: labels must be 0 or 1");
    }
  }
  const ListSet root = root_list_set(data, weights);
  if (root.ids.empty()) throw std::invalid_argument("grow_tree: no rows with positive weight");
  return grow_cls(data, root, weights, config, 0);
}

int tree_predict(const TreeNode& root, std::span<const double> row) {
  const TreeNode* node = &root;
  while (!node->leaf) {
    node = node->split.route_left(row[node->split.feature]) ? node->left.get()
                                                            : node->right.get();
  }
  return node->predicted;
}

double tree_p_positive(const TreeNode& root, std::span<const double> row) {
  const TreeNode* node = &root;
  while (!node->leaf) {
    node = node->split.route_left(row[node->split.feature]) ? node->left.get()
                                                            : node->right.get();
  }
  return node->p_positive;
}

Forest grow_forest(const TreeData& data, const ForestConfig& config) {
  if (config.n_trees == 0) throw std::invalid_argument("grow_forest: n_trees must be positive");
  Forest forest;
  forest.config = config;
  forest.features = data.features;
  forest.trees.reserve(config.n_trees);
  data.ensure_presorted();
  std::vector<int64_t> w(data.n_rows);
  for (size_t t = 0; t < config.n_trees; ++t) {
    if (config.bootstrap) {
      std::fill(w.begin(), w.end(), 0);
      Rng rng(mix_seed(config.seed, t));
      for (size_t draw = 0; draw < data.n_rows; ++draw) ++w[rng.index(data.n_rows)];
    } else {
      std::fill(w.begin(), w.end(), 1);
    }
    forest.trees.push_back(grow_tree(data, w, config.tree));
  }
  return forest;
}

double forest_p_positive(const Forest& forest, std::span<const double> row) {
  size_t votes = 0;
  for (const auto& tree : forest.trees) votes += tree_predict(*tree, row) == 1 ? 1 : 0;
  return static_cast<double>(votes) / static_cast<double>(forest.trees.size());
}

int forest_predict(const Forest& forest, std::span<const double> row) {
  // strict majority for the positive class; exact ties fall back to class 0
  return forest_p_positive(forest, row) > 0.5 ? 1 : 0;
}

std::unique_ptr<RegressionNode> grow_regression_tree(const TreeData& data,
                                                     std::span<const double> targets,
                                                     size_t max_depth, size_t min_samples_leaf,
                                                     size_t min_samples_split) {
  if (targets.size() != data.n_rows) {
    throw std::invalid_argument("grow_regression_tree: targets must cover every row");
  }
  const std::vector<int64_t> w(data.n_rows, 1);
  const ListSet root = root_list_set(data, w);
  if (root.ids.empty()) throw std::invalid_argument("grow_regression_tree: empty data");
  return grow_reg(data, root, w, targets, max_depth, min_samples_leaf, min_samples_split, 0);
}

double regression_predict(const RegressionNode& root, std::span<const double> row) {
  const RegressionNode* node = &root;
  while (!node->leaf) {
    node = node->split.route_left(row[node->split.feature]) ? node->left.get()
                                                            : node->right.get();
  }
  return node->value;
}

namespace {

double predict_reg_on_data(const RegressionNode& root, const TreeData& data, size_t row) {
  const RegressionNode* node = &root;
  while (!node->leaf) {
    node = node->split.route_left(data.at(row, node->split.feature)) ? node->left.get()
                                                                     : node->right.get();
  }
  return node->value;
}

}  // namespace

Gbm fit_gbm(const TreeData& data, const GbmConfig& config) {
  if (data.n_rows == 0) throw std::invalid_argument("fit_gbm: empty data");
  if (config.learning_rate <= 0.0 || config.learning_rate > 1.0) {
    throw std::invalid_argument("fit_gbm: learning_rate must lie in (0, 1]");
  }
  for (int label : data.labels) {
    if (label != 0 && label != 1) throw std::invalid_argument("fit_gbm: labels must be 0 or 1");
  }
  data.ensure_presorted();

  Gbm model;
  model.config = config;
  model.features = data.features;

  const size_t n = data.n_rows;
  const double mean_y =
      std::accumulate(data.labels.begin(), data.labels.end(), 0.0) / static_cast<double>(n);
  if (config.loss == GbmLoss::squared) {
    model.f0 = mean_y;
  } else {
    const double p = std::clamp(mean_y, 1e-12, 1.0 - 1e-12);
    model.f0 = std::log(p / (1.0 - p));
  }

  std::vector<double> f(n, model.f0);
  std::vector<double> residual(n);
  auto mean_loss = [&] {
    double acc = 0.0;
    if (config.loss == GbmLoss::squared) {
      for (size_t r = 0; r < n; ++r) {
        const double d = static_cast<double>(data.labels[r]) - f[r];
        acc += 0.5 * d * d;
      }
    } else {
      for (size_t r = 0; r < n; ++r) {
        // numerically stable -[y log s + (1-y) log(1-s)] for s = sigmoid(f)
        acc += std::max(f[r], 0.0) - f[r] * static_cast<double>(data.labels[r]) +
               std::log1p(std::exp(-std::abs(f[r])));
      }
    }
    return acc / static_cast<double>(n);
  };
  model.train_loss.push_back(mean_loss());

  for (size_t stage = 0; stage < config.n_stages; ++stage) {
    for (size_t r = 0; r < n; ++r) {
      residual[r] = static_cast<double>(data.labels[r]) -
                    (config.loss == GbmLoss::squared ? f[r] : sigmoid(f[r]));
    }
    auto tree = grow_regression_tree(data, residual, config.max_depth, config.min_samples_leaf,
                                     config.min_samples_split);
    for (size_t r = 0; r < n; ++r) {
      f[r] += config.learning_rate * predict_reg_on_data(*tree, data, r);
    }
    model.stages.push_back(std::move(tree));
    model.train_loss.push_back(mean_loss());
  }
  return model;
}

double gbm_raw_score(const Gbm& model, std::span<const double> row) {
  double f = model.f0;
  for (const auto& stage : model.stages) {
    f += model.config.learning_rate * regression_predict(*stage, row);
  }
  return f;
}

double gbm_p_positive(const Gbm& model, std::span<const double> row) {
  const double f = gbm_raw_score(model, row);
  return model.config.loss == GbmLoss::squared ? std::clamp(f, 0.0, 1.0) : sigmoid(f);
}

namespace {

template <typename Node>
void accumulate_importance(const Node& node, double root_count, std::vector<double>& acc) {
  if (node.leaf) return;
  acc[node.split.feature] += (static_cast<double>(node.count) / root_count) * node.gain;
  accumulate_importance(*node.left, root_count, acc);
  accumulate_importance(*node.right, root_count, acc);
}

std::vector<double> normalized(std::vector<double> acc) {
  const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
  if (total > 0.0) {
    for (double& v : acc) v /= total;
  }
  return acc;
}

}  // namespace

std::vector<double> importance(const TreeNode& root, size_t n_features) {
  std::vector<double> acc(n_features, 0.0);
  accumulate_importance(root, static_cast<double>(root.count), acc);
  return normalized(std::move(acc));
}

std::vector<double> importance(const Forest& forest) {
  std::vector<double> acc(forest.features.size(), 0.0);
  for (const auto& tree : forest.trees) {
    accumulate_importance(*tree, static_cast<double>(tree->count), acc);
  }
  return normalized(std::move(acc));
}

std::vector<double> importance(const Gbm& model) {
  std::vector<double> acc(model.features.size(), 0.0);
  for (const auto& stage : model.stages) {
    accumulate_importance(*stage, static_cast<double>(stage->count), acc);
  }
  return normalized(std::move(acc));
}

}  // namespace ptp::trees
