#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ptp/autodiff.hpp"
#include "ptp/encode.hpp"
#include "ptp/random.hpp"

namespace ptp::bnn {

// Bayesian classifier trained by backprop through sampled weights: every
// weight carries a Gaussian posterior (mu, rho) with sigma = softplus(rho),
// the training loss is the cross-entropy of one sampled network plus the
// weighted closed-form KL against a zero-mean Gaussian prior, and prediction
// aggregates many forward passes with fresh weight draws. Inputs are the
// one-hot/standardized feature vector.
struct Config {
  std::size_t hidden = 1024;       // single hidden layer width
  std::size_t sample_count = 100;  // posterior draws per prediction
  double threshold = 0.5;          // decision threshold on the median probability
  double prior_sigma = 1.0;
  std::size_t epochs = 5;
  std::size_t batch_size = 128;
  double learning_rate = 0.05;
  double kl_weight = 0.0;  // 0 picks 1 / batches_per_epoch
  std::uint64_t seed = 1;
};

struct VariationalParameter {
  diff::NodePtr mu;
  diff::NodePtr rho;  // sigma = ln(1 + e^rho), always positive
};

struct Layer {
  VariationalParameter w, b;
};

struct Model {
  data::Encoder encoder;
  Config config;
  std::size_t input_width = 0;
  std::vector<Layer> layers;  // input -> hidden, hidden -> 2

  std::vector<diff::NodePtr> parameters() const;
};

Model build(const data::Encoder& encoder, const Config& config);

double softplus(double x);

// one reparameterized draw: mu + softplus(rho) * noise, differentiable in
// both variational parameters
diff::NodePtr sample_gaussian(const VariationalParameter& p, const diff::Tensor& noise);

// KL(q || N(0, prior_sigma^2)) summed over elements, closed form
double kl_divergence(const VariationalParameter& p, double prior_sigma);
diff::NodePtr kl_node(const VariationalParameter& p, double prior_sigma);
double total_kl(const Model& model);

// cross-entropy of one sampled network on the batch plus kl_weight times the
// total KL; noise is drawn from `noise_rng` layer by layer (weights then
// bias), so a frozen rng replays the identical draw
diff::NodePtr elbo_loss(const Model& model, const diff::Tensor& inputs,
                        std::vector<int> labels, double kl_weight, Rng& noise_rng);

struct EpochLog {
  double mean_loss = 0.0;  // batch-size weighted ELBO loss
};

std::vector<EpochLog> train(Model& model, const data::EncodedDataset& train);

// Per-row posterior predictive: sample_count class-probability draws, their
// per-class median (even counts average the middle two) and sample standard
// deviation (n-1 denominator).
struct Posterior {
  std::size_t sample_count = 0;
  std::vector<double> probabilities;  // sample_count x 2, row-major
  std::array<double, 2> median{{0.0, 0.0}};
  std::array<double, 2> stddev{{0.0, 0.0}};

  double p(std::size_t sample, int cls) const { return probabilities[sample * 2 + cls]; }
};

// The noise for draw s depends only on (seed, s), never on the rows being
// scored, so scoring rows one at a time or all at once gives identical
// posteriors.
std::vector<Posterior> posterior_predictive(const Model& model, const data::EncodedDataset& ds,
                                            std::size_t sample_count, std::uint64_t seed);

// deterministic forward pass through the posterior means, [p0, p1] per row
std::vector<std::array<double, 2>> mean_forward(const Model& model,
                                                const data::EncodedDataset& ds);

enum class Outcome { negative = 0, positive = 1, undecided = 2 };

struct Decision {
  Outcome outcome = Outcome::undecided;
  int leading_class = 0;    // argmax of the median, ties to class 0
  double confidence = 0.0;  // median probability of the leading class
  double spread = 0.0;      // posterior stddev of the leading class
};

// decided only when the leading median strictly exceeds the threshold;
// raising the threshold can only widen the undecided set
Decision decide(const Posterior& posterior, double threshold);

struct HistogramBin {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
};

// equal-width histogram of ln p over [min ln p, 0] for one class; a
// degenerate range (all draws identical) lands every count in the top bin
std::vector<HistogramBin> log_probability_histogram(const Posterior& posterior, int cls,
                                                    std::size_t bins);

}  // namespace ptp::bnn
