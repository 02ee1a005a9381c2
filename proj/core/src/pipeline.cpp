#include "ptp/pipeline.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <utility>

#include "ptp/transform.hpp"

namespace ptp::pipeline {

namespace {

constexpr std::array<ModelKind, 7> kAllKinds{ModelKind::bnn, ModelKind::dnn, ModelKind::dt,
                                             ModelKind::rf,  ModelKind::xgb, ModelKind::lr,
                                             ModelKind::mnb};

std::vector<std::string> date_columns(const data::FeatureSchema& schema) {
  std::vector<std::string> out;
  for (const auto& col : schema.columns) {
    if (col.kind == data::ColumnKind::date) out.push_back(col.name);
  }
  return out;
}

data::Dataset expand_all_dates(data::Dataset ds, const std::string& skip = {}) {
  for (const auto& name : date_columns(ds.schema)) {
    if (name != skip) ds = data::expand_date(ds, name);
  }
  return ds;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::bnn: return "bnn";
    case ModelKind::dnn: return "dnn";
    case ModelKind::dt: return "dt";
    case ModelKind::rf: return "rf";
    case ModelKind::xgb: return "xgb";
    case ModelKind::lr: return "lr";
    case ModelKind::mnb: return "mnb";
  }
  throw std::logic_error("pipeline: bad ModelKind");
}

ModelKind model_kind_from_string(std::string_view text) {
  for (ModelKind kind : kAllKinds) {
    if (text == to_string(kind)) return kind;
  }
  throw std::runtime_error("pipeline: unknown model '" + std::string(text) +
                           "', expected one of bnn dnn dt rf xgb lr mnb");
}

std::span<const ModelKind> all_model_kinds() { return kAllKinds; }

Prepared prepare(const data::Dataset& raw, const PrepareConfig& config) {
  raw.schema.validate();
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw std::invalid_argument("pipeline: test_fraction must be in (0, 1)");
  }

  Prepared out;
  data::Dataset cleaned = data::clean(raw, config.clean, &out.clean_report);

  std::string order = config.order_column;
  if (order.empty()) {
    const auto dates = date_columns(cleaned.schema);
    if (dates.empty()) {
      throw std::runtime_error("pipeline: no date column to order the train/test split by");
    }
    order = dates.front();
  } else {
    const data::Column* col = cleaned.schema.find(order);
    if (!col || col->kind != data::ColumnKind::date) {
      throw std::runtime_error("pipeline: order column '" + order + "' is not a date column");
    }
  }
  out.order_column = order;

  // Expand every other date column first; the order column survives until the
  // split, then becomes calendar features on both sides.
  cleaned = expand_all_dates(std::move(cleaned), order);
  auto [train_raw, test_raw] = data::time_split(cleaned, order, config.test_fraction);
  train_raw = data::expand_date(train_raw, order);
  test_raw = data::expand_date(test_raw, order);

  if (config.oversample_train) train_raw = data::oversample(train_raw, config.seed);

  auto [train, test] = data::encode(train_raw, test_raw, config.bins);
  out.train = std::move(train);
  out.test = std::move(test);
  return out;
}

data::EncodedDataset prepare_for_model(const data::Encoder& encoder, const data::Dataset& raw) {
  data::Dataset ds = data::normalize_cells(raw);
  ds = expand_all_dates(std::move(ds));
  return data::apply_encoder(encoder, ds);
}

model_store::Artifact train_model(const TrainSpec& spec, const data::EncodedDataset& train) {
  if (train.n_rows == 0) throw std::invalid_argument("pipeline: empty training set");
  if (!train.fully_labeled()) {
    throw std::invalid_argument("pipeline: training data has unlabeled rows");
  }

  model_store::Artifact artifact;
  artifact.kind = std::string(to_string(spec.kind));
  artifact.encoder = train.encoder;

  switch (spec.kind) {
    case ModelKind::bnn: {
      auto config = spec.bnn;
      config.seed = spec.seed;
      auto model = bnn::build(train.encoder, config);
      bnn::train(model, train);
      artifact.model = std::move(model);
      break;
    }
    case ModelKind::dnn: {
      auto config = spec.dnn;
      config.seed = spec.seed;
      auto model = dnn::build(train.encoder, config);
      dnn::train(model, train);
      artifact.model = std::move(model);
      break;
    }
    case ModelKind::dt: {
      auto data = trees::TreeData::from_encoded(train);
      model_store::DecisionTreeModel model;
      model.config = spec.dt;
      model.features = data.features;
      model.root = trees::grow_tree(data, spec.dt);
      artifact.model = std::move(model);
      break;
    }
    case ModelKind::rf: {
      auto data = trees::TreeData::from_encoded(train);
      auto config = spec.rf;
      config.seed = spec.seed;
      artifact.model = trees::grow_forest(data, config);
      break;
    }
    case ModelKind::xgb: {
      auto data = trees::TreeData::from_encoded(train);
      artifact.model = trees::fit_gbm(data, spec.xgb);
      break;
    }
    case ModelKind::lr:
      artifact.model =
          model_store::LogisticArtifact{spec.lr, baselines::fit_logistic(train, spec.lr)};
      break;
    case ModelKind::mnb:
      artifact.model =
          model_store::NaiveBayesArtifact{spec.mnb, baselines::fit_naive_bayes(train, spec.mnb)};
      break;
  }
  return artifact;
}

Predictions predict_with_model(const model_store::Artifact& artifact,
                               const data::EncodedDataset& ds, const PredictConfig& config) {
  if (artifact.encoder.fingerprint() != ds.encoder.fingerprint()) {
    throw std::runtime_error("pipeline: data was encoded with a different encoder than the model");
  }

  Predictions out;
  const std::size_t n = ds.n_rows;
  out.outcomes.reserve(n);
  out.scores.reserve(n);
  out.confidence.reserve(n);
  out.spread.reserve(n);

  auto from_scores = [&](const std::vector<double>& p1) {
    for (double p : p1) {
      const int y = p > 0.5 ? 1 : 0;
      out.outcomes.push_back(y);
      out.scores.push_back(p);
      out.confidence.push_back(y == 1 ? p : 1.0 - p);
      out.spread.push_back(0.0);
    }
  };

  if (const auto* m = std::get_if<bnn::Model>(&artifact.model)) {
    const std::size_t samples =
        config.sample_count > 0 ? config.sample_count : m->config.sample_count;
    const auto posteriors = bnn::posterior_predictive(*m, ds, samples, config.seed);
    for (const auto& posterior : posteriors) {
      const bnn::Decision d = bnn::decide(posterior, config.threshold);
      out.outcomes.push_back(d.outcome == bnn::Outcome::undecided ? metrics::kUndecided
                                                                  : static_cast<int>(d.outcome));
      out.scores.push_back(posterior.median[1]);
      out.confidence.push_back(d.confidence);
      out.spread.push_back(d.spread);
    }
  } else if (const auto* m = std::get_if<dnn::Model>(&artifact.model)) {
    from_scores(dnn::scores(*m, ds));
  } else if (const auto* m = std::get_if<model_store::DecisionTreeModel>(&artifact.model)) {
    std::vector<double> p1(n);
    for (std::size_t r = 0; r < n; ++r) {
      p1[r] = trees::tree_p_positive(*m->root, trees::feature_row(ds, r));
    }
    from_scores(p1);
  } else if (const auto* m = std::get_if<trees::Forest>(&artifact.model)) {
    std::vector<double> p1(n);
    for (std::size_t r = 0; r < n; ++r) {
      p1[r] = trees::forest_p_positive(*m, trees::feature_row(ds, r));
    }
    from_scores(p1);
  } else if (const auto* m = std::get_if<trees::Gbm>(&artifact.model)) {
    std::vector<double> p1(n);
    for (std::size_t r = 0; r < n; ++r) {
      p1[r] = trees::gbm_p_positive(*m, trees::feature_row(ds, r));
    }
    from_scores(p1);
  } else if (const auto* m = std::get_if<model_store::LogisticArtifact>(&artifact.model)) {
    from_scores(baselines::logistic_scores(m->model, ds));
  } else {
    const auto& nb = std::get<model_store::NaiveBayesArtifact>(artifact.model);
    from_scores(baselines::naive_bayes_scores(nb.model, ds));
  }
  return out;
}

metrics::Evaluation evaluate_predictions(const data::EncodedDataset& ds,
                                         const Predictions& predictions) {
  if (!ds.fully_labeled()) {
    throw std::invalid_argument("pipeline: cannot evaluate against unlabeled rows");
  }
  if (predictions.outcomes.size() != ds.n_rows) {
    throw std::invalid_argument("pipeline: prediction count does not match the dataset");
  }
  return metrics::evaluate(ds.labels, predictions.outcomes, predictions.scores);
}

}  // namespace ptp::pipeline
