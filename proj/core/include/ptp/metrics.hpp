#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace ptp::metrics {

// prediction value for a classifier that declines to decide; such rows stay
// out of the confusion matrix and are tallied separately
inline constexpr int kUndecided = -1;

struct ConfusionMatrix {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::int64_t total() const { return tp + tn + fp + fn; }
};

struct ConfusionResult {
  ConfusionMatrix matrix;
  std::int64_t abstained = 0;
};

// y_true in {0,1}; y_pred in {0,1,kUndecided}
ConfusionResult confusion(std::span<const int> y_true, std::span<const int> y_pred);

// Metrics with an empty denominator come back unset instead of silently 0.
struct BasicMetrics {
  std::optional<double> accuracy, precision, recall, f1;
};

BasicMetrics basic_metrics(const ConfusionMatrix& m);
std::optional<double> cohen_kappa(const ConfusionMatrix& m);

// Area under the ROC curve by trapezoidal sweep over score thresholds; tied
// scores are collapsed into one sweep step, which makes the result equal the
// pairwise probability P(score+ > score-) + 0.5 P(equal). All counting is
// integer, one final division. Throws if only one class is present.
double roc_auc(std::span<const int> y_true, std::span<const double> scores);

struct ClassRow {
  std::string label;
  std::optional<double> precision, recall, f1;
  std::int64_t support = 0;
};

// per-class rows plus macro (plain mean) and support-weighted averages
struct ClasswiseReport {
  ClassRow negative, positive, macro, weighted;
};

ClasswiseReport classwise_report(const ConfusionMatrix& m);

struct Evaluation {
  ConfusionMatrix matrix;
  std::int64_t abstained = 0;
  BasicMetrics basic;
  std::optional<double> kappa, auc;
  ClasswiseReport classwise;

  double abstention_rate() const;
};

// scores may be empty (no AUC) or one score per row, higher meaning more
// confidently positive; rows the classifier abstained on still contribute
// their score
Evaluation evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                    std::span<const double> scores = {});

void write_metrics_json(const Evaluation& ev, const std::string& model, const std::string& path);
// both append per call, writing the header first when the file is new, so
// several models can share one comparison table
void append_metrics_table(const Evaluation& ev, const std::string& model, const std::string& path);
void write_classwise_csv(const Evaluation& ev, const std::string& model, const std::string& path);

}  // namespace ptp::metrics
