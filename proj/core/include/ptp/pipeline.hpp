#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptp/baselines.hpp"
#include "ptp/bnn.hpp"
#include "ptp/clean.hpp"
#include "ptp/dnn.hpp"
#include "ptp/metrics.hpp"
#include "ptp/model_store.hpp"
#include "ptp/trees.hpp"

namespace ptp::pipeline {

enum class ModelKind { bnn, dnn, dt, rf, xgb, lr, mnb };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view text);  // throws, message lists valid names
std::span<const ModelKind> all_model_kinds();

struct PrepareConfig {
  data::CleanConfig clean{};
  std::string order_column;      // empty: the first date column in the schema
  double test_fraction = 0.2;
  bool oversample_train = true;  // balance classes in the train split only
  std::uint64_t seed = 1;
  std::size_t bins = 10;
};

struct Prepared {
  data::EncodedDataset train;
  data::EncodedDataset test;
  data::CleanReport clean_report;
  std::string order_column;
};

// Training preparation: clean, expand date columns into calendar features,
// time-order split on order_column, oversample the train side, then fit the
// encoder on train and apply it to both sides.
Prepared prepare(const data::Dataset& raw, const PrepareConfig& config);

// Inference preparation for data shaped like the original schema: normalize
// text, expand date columns, apply the stored encoder. Rows are never dropped
// by cleaning rules here; only rows with missing feature cells are skipped,
// and source_rows maps each encoded row back to its input row.
data::EncodedDataset prepare_for_model(const data::Encoder& encoder, const data::Dataset& raw);

struct TrainSpec {
  ModelKind kind = ModelKind::bnn;
  std::uint64_t seed = 1;  // copied into every sub-config that draws randomness
  trees::TreeConfig dt{trees::Criterion::entropy, 5, 1, 2};
  trees::ForestConfig rf{};
  trees::GbmConfig xgb{};
  baselines::LogisticConfig lr{};
  baselines::NaiveBayesConfig mnb{};
  ptp::dnn::Config dnn{};
  ptp::bnn::Config bnn{};
};

model_store::Artifact train_model(const TrainSpec& spec, const data::EncodedDataset& train);

struct PredictConfig {
  double threshold = 0.5;        // bnn: leading median must exceed this to decide
  std::size_t sample_count = 0;  // bnn posterior draws; 0 uses the model's setting
  std::uint64_t seed = 1;        // bnn posterior noise
};

struct Predictions {
  std::vector<int> outcomes;       // 0/1, or -1 where the model abstains
  std::vector<double> scores;      // P(positive); posterior median for the bnn
  std::vector<double> confidence;  // probability of the predicted class
  std::vector<double> spread;      // posterior stddev of that class; 0 for point models
};

Predictions predict_with_model(const model_store::Artifact& artifact,
                               const data::EncodedDataset& ds, const PredictConfig& config = {});

// Scores every row against the labels; throws if any row is unlabeled.
metrics::Evaluation evaluate_predictions(const data::EncodedDataset& ds,
                                         const Predictions& predictions);

}  // namespace ptp::pipeline
