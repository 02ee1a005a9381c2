#include <doctest.h>

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "encoded_fixtures.hpp"
#include "ptp/dnn.hpp"

using namespace ptp::dnn;

TEST_SUITE("dnn") {

TEST_CASE("embedding width is half the dictionary, capped") {
  CHECK(embedding_dim(1) == 1);
  CHECK(embedding_dim(2) == 1);
  CHECK(embedding_dim(3) == 2);
  CHECK(embedding_dim(4) == 2);
  CHECK(embedding_dim(5) == 3);
  CHECK(embedding_dim(99) == 50);
  CHECK(embedding_dim(100) == 50);
  CHECK(embedding_dim(1000) == 50);
}

TEST_CASE("build lays out tables and layers to size") {
  const auto ds = fixtures::mixed_cloud(10, 1);  // x0, x1 continuous; group with 3 levels
  Config cfg;
  cfg.hidden = {5};
  const Model model = build(ds.encoder, cfg);

  REQUIRE(model.tables.size() == 1);
  CHECK(model.tables[0]->value.rows() == 3);
  CHECK(model.tables[0]->value.cols() == 2);  // embedding_dim(3)
  CHECK(model.input_width() == 4);            // 2 continuous + 2 embedding

  REQUIRE(model.weights.size() == 2);
  REQUIRE(model.biases.size() == 2);
  CHECK(model.weights[0]->value.rows() == 4);
  CHECK(model.weights[0]->value.cols() == 5);
  CHECK(model.weights[1]->value.rows() == 5);
  CHECK(model.weights[1]->value.cols() == 2);
  for (const auto& b : model.biases) {
    for (double v : b->value) CHECK(v == 0.0);
  }
  for (const auto& p : model.parameters()) CHECK(p->requires_grad);
}

TEST_CASE("initialization is a pure function of the seed") {
  const auto ds = fixtures::mixed_cloud(10, 1);
  Config cfg;
  cfg.hidden = {6, 3};
  cfg.seed = 42;
  const Model a = build(ds.encoder, cfg);
  const Model b = build(ds.encoder, cfg);
  REQUIRE(a.weights.size() == b.weights.size());
  CHECK(a.tables[0]->value.data() == b.tables[0]->value.data());
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    CHECK(a.weights[i]->value.data() == b.weights[i]->value.data());
  }

  cfg.seed = 43;
  const Model c = build(ds.encoder, cfg);
  CHECK(a.weights[0]->value.data() != c.weights[0]->value.data());

  Config bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(build(ds.encoder, bad), std::invalid_argument);
}

TEST_CASE("forward on a batch equals forward row by row") {
  const auto ds = fixtures::mixed_cloud(12, 9);
  Config cfg;
  cfg.hidden = {8};
  const Model model = build(ds.encoder, cfg);

  std::vector<std::size_t> all(ds.n_rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto batch = forward(model, ds, all);
  REQUIRE(batch->value.rows() == ds.n_rows);
  REQUIRE(batch->value.cols() == 2);
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    const std::vector<std::size_t> one{r};
    const auto single = forward(model, ds, one);
    CHECK(batch->value.at(r, 0) == doctest::Approx(single->value.at(0, 0)).epsilon(1e-14));
    CHECK(batch->value.at(r, 1) == doctest::Approx(single->value.at(0, 1)).epsilon(1e-14));
    CHECK(single->value.at(0, 0) + single->value.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }

  const auto s = scores(model, ds);
  REQUIRE(s.size() == ds.n_rows);
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    CHECK(s[r] == doctest::Approx(batch->value.at(r, 1)).epsilon(1e-14));
  }
}

TEST_CASE("a zero learning rate leaves the parameters untouched") {
  const auto ds = fixtures::mixed_cloud(40, 4);
  Config cfg;
  cfg.hidden = {4};
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.0;
  Model model = build(ds.encoder, cfg);
  const auto before = model.weights[0]->value.data();
  const auto table_before = model.tables[0]->value.data();

  const auto log = train(model, ds);
  REQUIRE(log.size() == 3);
  CHECK(model.weights[0]->value.data() == before);
  CHECK(model.tables[0]->value.data() == table_before);
  // the loss is a fixed function of the frozen parameters; only the batch
  // boundaries move between epochs
  CHECK(log[1].mean_loss == doctest::Approx(log[0].mean_loss).epsilon(1e-12));
  CHECK(log[2].mean_loss == doctest::Approx(log[0].mean_loss).epsilon(1e-12));
}

TEST_CASE("training validation") {
  const auto ds = fixtures::mixed_cloud(10, 2);
  Config cfg;
  Model model = build(ds.encoder, cfg);
  ptp::data::EncodedDataset empty;
  empty.encoder = ds.encoder;
  empty.n_cat_ = 1;
  empty.n_cont_ = 2;
  CHECK_THROWS_AS(train(model, empty), std::invalid_argument);

  auto unlabeled = ds;
  unlabeled.labels[3] = -1;
  CHECK_THROWS_AS(train(model, unlabeled), std::invalid_argument);
}

TEST_CASE("the network learns a separable cloud") {
  const auto ds = fixtures::mixed_cloud(300, 5);
  Config cfg;
  cfg.hidden = {16};
  cfg.epochs = 40;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.05;
  cfg.seed = 2;
  Model model = build(ds.encoder, cfg);
  const auto log = train(model, ds);
  REQUIRE(log.size() == 40);
  CHECK(log.back().mean_loss < log.front().mean_loss);

  const auto s = scores(model, ds);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    correct += (s[r] > 0.5 ? 1 : 0) == ds.labels[r];
  }
  CHECK(static_cast<double>(correct) / 300.0 > 0.95);
}

}  // TEST_SUITE
