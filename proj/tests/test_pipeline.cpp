#include <doctest.h>

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "encoded_fixtures.hpp"
#include "ptp/pipeline.hpp"
#include "ptp/synthetic.hpp"

using namespace ptp::pipeline;
namespace data = ptp::data;

namespace {

data::Dataset small_synthetic(std::size_t rows, std::uint64_t seed, bool separable = false) {
  data::SyntheticConfig cfg;
  cfg.n_rows = rows;
  cfg.seed = seed;
  cfg.separable = separable;
  return data::generate_synthetic(cfg);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("model kinds parse both ways") {
  CHECK(all_model_kinds().size() == 7);
  for (ModelKind kind : all_model_kinds()) {
    CHECK(model_kind_from_string(to_string(kind)) == kind);
  }
  CHECK(to_string(ModelKind::xgb) == "xgb");
  CHECK_THROWS_WITH_AS(model_kind_from_string("svm"),
                       doctest::Contains("expected one of bnn dnn dt rf xgb lr mnb"),
                       std::runtime_error);
}

TEST_CASE("prepare cleans, splits in time order and balances the train side") {
  const auto raw = small_synthetic(600, 4);
  PrepareConfig cfg;
  const Prepared prep = prepare(raw, cfg);

  CHECK(prep.order_column == "issue_date");  // first date column in the schema
  CHECK(prep.train.n_rows > 0);
  CHECK(prep.test.n_rows > 0);
  CHECK(prep.clean_report.passes >= 1);

  // oversampling equalizes the classes on the training side only
  CHECK(prep.train.positive_count() * 2 == prep.train.n_rows);
  CHECK(prep.train.fully_labeled());
  CHECK(prep.test.fully_labeled());

  // date columns entered as calendar categories, so the encoder has no gaps
  CHECK(prep.train.encoder.find("issue_date_year") != nullptr);
  CHECK(prep.train.encoder.find("issue_date_month") != nullptr);
  CHECK(prep.train.encoder.find("due_date_dow") != nullptr);
  CHECK(prep.train.encoder.find("issue_date") == nullptr);

  // both splits share the one encoder fitted on the training rows
  CHECK(prep.train.encoder.fingerprint() == prep.test.encoder.fingerprint());

  // fully deterministic end to end
  const Prepared again = prepare(raw, cfg);
  CHECK(again.train.n_rows == prep.train.n_rows);
  CHECK(again.test.n_rows == prep.test.n_rows);
  CHECK(again.train.encoder.fingerprint() == prep.train.encoder.fingerprint());
  CHECK(again.train.labels == prep.train.labels);
}

TEST_CASE("order column can be chosen and is validated") {
  const auto raw = small_synthetic(300, 9);
  PrepareConfig cfg;
  cfg.order_column = "due_date";
  CHECK(prepare(raw, cfg).order_column == "due_date");

  cfg.order_column = "bill_duration";
  CHECK_THROWS_WITH_AS(prepare(raw, cfg),
                       doctest::Contains("order column 'bill_duration' is not a date column"),
                       std::runtime_error);

  cfg.order_column = "absent";
  CHECK_THROWS_AS(prepare(raw, cfg), std::runtime_error);

  cfg.order_column.clear();
  cfg.test_fraction = 0.0;
  CHECK_THROWS_AS(prepare(raw, cfg), std::invalid_argument);
}

TEST_CASE("a dataset without dates cannot be time split") {
  data::Dataset ds;
  ds.schema.columns = {{"x", data::ColumnKind::continuous},
                       {"paid", data::ColumnKind::target}};
  ds.schema.target_positive_label = "yes";
  for (int i = 0; i < 8; ++i) {
    ds.rows.push_back({data::Cell{static_cast<double>(i)},
                       data::Cell{std::string(i % 2 ? "yes" : "no")}});
  }
  CHECK_THROWS_WITH_AS(prepare(ds, PrepareConfig{}),
                       doctest::Contains("no date column"), std::runtime_error);
}

TEST_CASE("train, predict and evaluate connect end to end") {
  const auto raw = small_synthetic(600, 11, true);
  const Prepared prep = prepare(raw, PrepareConfig{});

  TrainSpec spec;
  spec.kind = ModelKind::lr;
  const auto artifact = train_model(spec, prep.train);
  CHECK(artifact.kind == "lr");
  CHECK(artifact.encoder.fingerprint() == prep.train.encoder.fingerprint());

  const Predictions pred = predict_with_model(artifact, prep.test);
  REQUIRE(pred.outcomes.size() == prep.test.n_rows);
  REQUIRE(pred.scores.size() == prep.test.n_rows);
  for (std::size_t r = 0; r < pred.outcomes.size(); ++r) {
    CHECK((pred.outcomes[r] == 0 || pred.outcomes[r] == 1));  // point model never abstains
    CHECK(pred.spread[r] == 0.0);
    const double expect_conf = pred.outcomes[r] == 1 ? pred.scores[r] : 1.0 - pred.scores[r];
    CHECK(pred.confidence[r] == doctest::Approx(expect_conf).epsilon(1e-12));
  }

  const auto ev = evaluate_predictions(prep.test, pred);
  CHECK(ev.matrix.total() == static_cast<std::int64_t>(prep.test.n_rows));
  CHECK(ev.abstained == 0);
  REQUIRE(ev.basic.accuracy.has_value());
  CHECK(*ev.basic.accuracy > 0.7);  // separable labels, linear model
  CHECK(ev.auc.has_value());
}

TEST_CASE("uncertainty-aware prediction abstains below the threshold") {
  const auto raw = small_synthetic(400, 2, true);
  const Prepared prep = prepare(raw, PrepareConfig{});

  TrainSpec spec;
  spec.kind = ModelKind::bnn;
  spec.bnn.hidden = 16;
  spec.bnn.epochs = 2;
  spec.bnn.batch_size = 64;
  spec.bnn.sample_count = 16;
  const auto artifact = train_model(spec, prep.train);

  PredictConfig loose;
  loose.threshold = 0.0;
  loose.sample_count = 16;
  loose.seed = 3;
  const Predictions decided = predict_with_model(artifact, prep.test, loose);
  for (int o : decided.outcomes) CHECK((o == 0 || o == 1));

  PredictConfig strict = loose;
  strict.threshold = 0.999;
  const Predictions abstaining = predict_with_model(artifact, prep.test, strict);
  std::size_t undecided = 0;
  for (int o : abstaining.outcomes) undecided += o == ptp::metrics::kUndecided;
  CHECK(undecided > 0);  // an early-stopped posterior is rarely that sure

  // the glue reproduces the posterior summaries exactly
  const auto& model = std::get<ptp::bnn::Model>(artifact.model);
  const auto posts = ptp::bnn::posterior_predictive(model, prep.test, 16, 3);
  for (std::size_t r = 0; r < prep.test.n_rows; ++r) {
    const auto d = ptp::bnn::decide(posts[r], 0.999);
    CHECK(abstaining.scores[r] == posts[r].median[1]);
    CHECK(abstaining.confidence[r] == d.confidence);
    CHECK(abstaining.spread[r] == d.spread);
  }

  // sample_count 0 falls back to the model's own setting (16 here)
  PredictConfig defaulted = loose;
  defaulted.sample_count = 0;
  const Predictions fallback = predict_with_model(artifact, prep.test, defaulted);
  CHECK(fallback.scores == decided.scores);
}

TEST_CASE("prediction data must come from the model's encoder") {
  const auto ds = fixtures::mixed_cloud(50, 1);
  TrainSpec spec;
  spec.kind = ModelKind::mnb;
  const auto artifact = train_model(spec, ds);

  auto other = ds;
  other.encoder.columns[0].cont.mean = 1.0;  // same shape, different statistics
  CHECK_THROWS_WITH_AS(predict_with_model(artifact, other),
                       doctest::Contains("different encoder"), std::runtime_error);
}

TEST_CASE("training input validation") {
  TrainSpec spec;
  data::EncodedDataset empty;
  CHECK_THROWS_WITH_AS(train_model(spec, empty), doctest::Contains("empty training set"),
                       std::invalid_argument);

  auto unlabeled = fixtures::mixed_cloud(30, 2);
  unlabeled.labels[4] = -1;
  CHECK_THROWS_WITH_AS(train_model(spec, unlabeled), doctest::Contains("unlabeled"),
                       std::invalid_argument);
}

TEST_CASE("evaluation input validation") {
  const auto ds = fixtures::mixed_cloud(20, 3);
  Predictions pred;
  pred.outcomes.assign(20, 0);
  pred.scores.assign(20, 0.5);

  auto unlabeled = ds;
  unlabeled.labels[0] = -1;
  CHECK_THROWS_WITH_AS(evaluate_predictions(unlabeled, pred),
                       doctest::Contains("unlabeled"), std::invalid_argument);

  Predictions short_pred;
  short_pred.outcomes.assign(19, 0);
  CHECK_THROWS_WITH_AS(evaluate_predictions(ds, short_pred),
                       doctest::Contains("prediction count"), std::invalid_argument);
}

TEST_CASE("inference preparation maps prepared rows back to their source") {
  const auto raw = small_synthetic(200, 6);
  const Prepared prep = prepare(raw, PrepareConfig{});
  const auto& encoder = prep.train.encoder;

  auto probe = raw;
  probe.rows[3][probe.col("bill_duration")] = data::Cell{};    // missing feature: row skipped
  probe.rows[5][probe.col("paid_on_time")] = data::Cell{};     // missing target: kept, unlabeled

  const auto encoded = prepare_for_model(encoder, probe);
  CHECK(encoded.n_rows == probe.n_rows() - 1);
  CHECK(encoded.encoder.fingerprint() == encoder.fingerprint());

  bool saw_three = false;
  for (std::size_t k = 0; k < encoded.n_rows; ++k) {
    saw_three |= encoded.source_rows[k] == 3;
    if (k > 0) CHECK(encoded.source_rows[k] > encoded.source_rows[k - 1]);
  }
  CHECK_FALSE(saw_three);

  for (std::size_t k = 0; k < encoded.n_rows; ++k) {
    if (encoded.source_rows[k] == 5) CHECK(encoded.labels[k] == -1);
  }

  // prediction flows straight through on inference-shaped data
  TrainSpec spec;
  spec.kind = ModelKind::dt;
  const auto artifact = train_model(spec, prep.train);
  const auto pred = predict_with_model(artifact, encoded);
  CHECK(pred.outcomes.size() == encoded.n_rows);
}

}  // TEST_SUITE
