#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptp/autodiff.hpp"
#include "ptp/encode.hpp"

namespace ptp::dnn {

// Feed-forward classifier: entity embeddings for the categorical columns,
// standardized continuous inputs, ReLU hidden stack, two-way softmax out.
// Trained with plain mini-batch SGD, no dropout or momentum.
struct Config {
  std::vector<std::size_t> hidden{200, 100};
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
};

// embedding width for a dictionary of the given cardinality (unknown slot
// included): half the cardinality rounded up, capped at 50
std::size_t embedding_dim(std::size_t cardinality);

struct Model {
  data::Encoder encoder;
  Config config;
  std::vector<diff::NodePtr> tables;   // one per categorical column
  std::vector<diff::NodePtr> weights;  // hidden layers then the output layer
  std::vector<diff::NodePtr> biases;

  std::size_t input_width() const;  // embeddings plus continuous columns
  std::vector<diff::NodePtr> parameters() const;
};

// Glorot-uniform weights and embeddings, zero biases; deterministic in the
// config seed.
Model build(const data::Encoder& encoder, const Config& config);

// probability graph for a set of rows (softmax output, [n x 2]); exposed so
// gradient checks can differentiate through the full network
diff::NodePtr forward(const Model& model, const data::EncodedDataset& ds,
                      std::span<const std::size_t> rows);

struct EpochLog {
  double mean_loss = 0.0;  // batch-size weighted training cross-entropy
};

std::vector<EpochLog> train(Model& model, const data::EncodedDataset& train);

std::vector<double> scores(const Model& model, const data::EncodedDataset& ds);  // P(class 1)

}  // namespace ptp::dnn
