#include "ptp/dnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ptp/random.hpp"

namespace ptp::dnn {

namespace {

diff::Tensor glorot_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  diff::Tensor t = diff::Tensor::matrix(rows, cols);
  for (double& v : t) v = rng.uniform(-limit, limit);
  return t;
}

}  // namespace

std::size_t embedding_dim(std::size_t cardinality) {
  return std::min<std::size_t>(50, (cardinality + 1) / 2);
}

std::size_t Model::input_width() const {
  std::size_t width = encoder.n_continuous();
  for (const auto& table : tables) width += table->value.cols();
  return width;
}

std::vector<diff::NodePtr> Model::parameters() const {
  std::vector<diff::NodePtr> params = tables;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    params.push_back(weights[i]);
    params.push_back(biases[i]);
  }
  return params;
}

Model build(const data::Encoder& encoder, const Config& config) {
  if (config.batch_size == 0) throw std::invalid_argument("dnn: batch_size must be positive");
  Model model;
  model.encoder = encoder;
  model.config = config;

  Rng rng(mix_seed(config.seed, 0xd00));
  for (const auto& col : encoder.columns) {
    if (col.kind != data::ColumnKind::categorical) continue;
    const std::size_t card = col.cat.cardinality();
    model.tables.push_back(diff::leaf(glorot_matrix(card, embedding_dim(card), rng), true));
  }

  std::size_t in = model.input_width();
  for (std::size_t width : config.hidden) {
    model.weights.push_back(diff::leaf(glorot_matrix(in, width, rng), true));
    model.biases.push_back(diff::leaf(diff::Tensor::vector(width), true));
    in = width;
  }
  model.weights.push_back(diff::leaf(glorot_matrix(in, 2, rng), true));
  model.biases.push_back(diff::leaf(diff::Tensor::vector(2), true));
  return model;
}

diff::NodePtr forward(const Model& model, const data::EncodedDataset& ds,
                      std::span<const std::size_t> rows) {
  const std::size_t n_cat = ds.encoder.n_categorical();
  const std::size_t n_cont = ds.encoder.n_continuous();
  if (n_cat != model.tables.size()) {
    throw std::invalid_argument("dnn: dataset does not match the model's categorical columns");
  }

  std::vector<diff::NodePtr> parts;
  for (std::size_t j = 0; j < n_cat; ++j) {
    std::vector<int> indices;
    indices.reserve(rows.size());
    for (std::size_t r : rows) indices.push_back(ds.cat_at(r, j));
    parts.push_back(diff::embed(model.tables[j], std::move(indices)));
  }
  if (n_cont > 0) {
    diff::Tensor block = diff::Tensor::matrix(rows.size(), n_cont);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < n_cont; ++j) block.at(i, j) = ds.cont_at(rows[i], j);
    }
    parts.push_back(diff::constant(std::move(block)));
  }

  diff::NodePtr x = parts.size() == 1 ? parts.front() : diff::concat_cols(parts);
  for (std::size_t layer = 0; layer + 1 < model.weights.size(); ++layer) {
    x = diff::relu(diff::affine(x, model.weights[layer], model.biases[layer]));
  }
  x = diff::affine(x, model.weights.back(), model.biases.back());
  return diff::softmax(x);
}

std::vector<EpochLog> train(Model& model, const data::EncodedDataset& train) {
  if (train.n_rows == 0) throw std::invalid_argument("dnn: empty training data");
  if (!train.fully_labeled()) throw std::invalid_argument("dnn: training rows need labels");

  const auto params = model.parameters();
  std::vector<std::size_t> order(train.n_rows);
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochLog> log;
  for (std::size_t epoch = 0; epoch < model.config.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(model.config.seed, 0xe0000 + epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += model.config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + model.config.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);

      std::vector<int> labels;
      labels.reserve(batch.size());
      for (std::size_t r : batch) labels.push_back(train.labels[r]);

      auto loss = diff::cross_entropy(forward(model, train, batch), std::move(labels));
      diff::zero_grad(params);
      diff::backward(loss);
      for (const auto& p : params) {
        diff::add_scaled(p->value, p->grad, -model.config.learning_rate);
      }
      loss_sum += loss->value.item() * static_cast<double>(batch.size());
    }
    log.push_back({loss_sum / static_cast<double>(order.size())});
  }
  return log;
}

std::vector<double> scores(const Model& model, const data::EncodedDataset& ds) {
  std::vector<double> out(ds.n_rows);
  constexpr std::size_t kChunk = 1024;
  std::vector<std::size_t> rows;
  for (std::size_t begin = 0; begin < ds.n_rows; begin += kChunk) {
    const std::size_t end = std::min(ds.n_rows, begin + kChunk);
    rows.resize(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    const auto probs = forward(model, ds, rows);
    for (std::size_t i = 0; i < rows.size(); ++i) out[begin + i] = probs->value.at(i, 1);
  }
  return out;
}

}  // namespace ptp::dnn
