#include "ptp/bnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ptp::bnn {

namespace {

constexpr double kRhoInit = -5.0;  // softplus(-5) ~ 6.7e-3, a tight initial posterior

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

diff::Tensor glorot_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  diff::Tensor t = diff::Tensor::matrix(rows, cols);
  for (double& v : t) v = rng.uniform(-limit, limit);
  return t;
}

diff::Tensor constant_like(const diff::Tensor& shape, double v) {
  diff::Tensor t = diff::Tensor::zeros_like(shape);
  t.fill(v);
  return t;
}

diff::Tensor draw_noise_like(const diff::Tensor& shape, Rng& rng) {
  diff::Tensor t = diff::Tensor::zeros_like(shape);
  for (double& v : t) v = rng.normal();
  return t;
}

}  // namespace

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

std::vector<diff::NodePtr> Model::parameters() const {
  std::vector<diff::NodePtr> params;
  for (const auto& layer : layers) {
    params.push_back(layer.w.mu);
    params.push_back(layer.w.rho);
    params.push_back(layer.b.mu);
    params.push_back(layer.b.rho);
  }
  return params;
}

Model build(const data::Encoder& encoder, const Config& config) {
  if (config.hidden == 0) throw std::invalid_argument("bnn: hidden width must be positive");
  if (config.batch_size == 0) throw std::invalid_argument("bnn: batch_size must be positive");
  if (config.prior_sigma <= 0.0) throw std::invalid_argument("bnn: prior_sigma must be positive");

  Model model;
  model.encoder = encoder;
  model.config = config;
  model.input_width = data::OneHotLayout::standardized(encoder).width;

  Rng rng(mix_seed(config.seed, 0xb00));
  auto make_layer = [&](std::size_t in, std::size_t out) {
    Layer layer;
    layer.w.mu = diff::leaf(glorot_matrix(in, out, rng), true);
    layer.w.rho = diff::leaf(constant_like(layer.w.mu->value, kRhoInit), true);
    layer.b.mu = diff::leaf(diff::Tensor::vector(out), true);
    layer.b.rho = diff::leaf(constant_like(layer.b.mu->value, kRhoInit), true);
    return layer;
  };
  model.layers.push_back(make_layer(model.input_width, config.hidden));
  model.layers.push_back(make_layer(config.hidden, 2));
  return model;
}

diff::NodePtr sample_gaussian(const VariationalParameter& p, const diff::Tensor& noise) {
  if (!p.mu->value.same_shape(p.rho->value) || !p.mu->value.same_shape(noise)) {
    throw std::invalid_argument("bnn: mu, rho and noise shapes must match");
  }
  diff::Tensor value = p.mu->value;
  for (std::size_t i = 0; i < value.size(); ++i) {
    value[i] += softplus(p.rho->value[i]) * noise[i];
  }
  auto noise_copy = std::make_shared<diff::Tensor>(noise);
  return diff::make_node(std::move(value), {p.mu, p.rho}, [noise_copy](diff::Node& n) {
    const auto& mu = n.parents[0];
    const auto& rho = n.parents[1];
    if (mu->requires_grad) {
      if (mu->grad.size() != mu->value.size()) mu->grad = diff::Tensor::zeros_like(mu->value);
      diff::add_in_place(mu->grad, n.grad);
    }
    if (rho->requires_grad) {
      if (rho->grad.size() != rho->value.size()) {
        rho->grad = diff::Tensor::zeros_like(rho->value);
      }
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        rho->grad[i] += n.grad[i] * (*noise_copy)[i] * sigmoid(rho->value[i]);
      }
    }
  });
}

double kl_divergence(const VariationalParameter& p, double prior_sigma) {
  const double log_prior = std::log(prior_sigma);
  const double inv_2p2 = 1.0 / (2.0 * prior_sigma * prior_sigma);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.mu->value.size(); ++i) {
    const double mu = p.mu->value[i];
    const double sig = softplus(p.rho->value[i]);
    acc += log_prior - std::log(sig) + (sig * sig + mu * mu) * inv_2p2 - 0.5;
  }
  return acc;
}

diff::NodePtr kl_node(const VariationalParameter& p, double prior_sigma) {
  const double inv_p2 = 1.0 / (prior_sigma * prior_sigma);
  return diff::make_node(
      diff::Tensor::scalar(kl_divergence(p, prior_sigma)), {p.mu, p.rho},
      [inv_p2](diff::Node& n) {
        const auto& mu = n.parents[0];
        const auto& rho = n.parents[1];
        const double g = n.grad.item();
        if (mu->requires_grad) {
          if (mu->grad.size() != mu->value.size()) mu->grad = diff::Tensor::zeros_like(mu->value);
          for (std::size_t i = 0; i < mu->value.size(); ++i) {
            mu->grad[i] += g * mu->value[i] * inv_p2;
          }
        }
        if (rho->requires_grad) {
          if (rho->grad.size() != rho->value.size()) {
            rho->grad = diff::Tensor::zeros_like(rho->value);
          }
          for (std::size_t i = 0; i < rho->value.size(); ++i) {
            const double sig = softplus(rho->value[i]);
            rho->grad[i] += g * (sig * inv_p2 - 1.0 / sig) * sigmoid(rho->value[i]);
          }
        }
      });
}

double total_kl(const Model& model) {
  double acc = 0.0;
  for (const auto& layer : model.layers) {
    acc += kl_divergence(layer.w, model.config.prior_sigma);
    acc += kl_divergence(layer.b, model.config.prior_sigma);
  }
  return acc;
}

diff::NodePtr elbo_loss(const Model& model, const diff::Tensor& inputs, std::vector<int> labels,
                        double kl_weight, Rng& noise_rng) {
  if (inputs.cols() != model.input_width) {
    throw std::invalid_argument("bnn: input width does not match the model");
  }
  diff::NodePtr x = diff::constant(inputs);
  diff::NodePtr kl_sum;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& layer = model.layers[i];
    diff::NodePtr w = sample_gaussian(layer.w, draw_noise_like(layer.w.mu->value, noise_rng));
    auto b2d = sample_gaussian(layer.b, draw_noise_like(layer.b.mu->value, noise_rng));
    x = diff::affine(x, w, b2d);
    if (i + 1 < model.layers.size()) x = diff::relu(x);

    diff::NodePtr layer_kl = diff::add(kl_node(layer.w, model.config.prior_sigma),
                                       kl_node(layer.b, model.config.prior_sigma));
    kl_sum = kl_sum ? diff::add(kl_sum, layer_kl) : layer_kl;
  }
  diff::NodePtr ce = diff::cross_entropy(diff::softmax(x), std::move(labels));
  return diff::add(ce, diff::scale(kl_sum, kl_weight));
}

std::vector<EpochLog> train(Model& model, const data::EncodedDataset& train) {
  if (train.n_rows == 0) throw std::invalid_argument("bnn: empty training data");
  if (!train.fully_labeled()) throw std::invalid_argument("bnn: training rows need labels");

  const data::OneHotLayout layout = data::OneHotLayout::standardized(train.encoder);
  if (layout.width != model.input_width) {
    throw std::invalid_argument("bnn: dataset width does not match the model");
  }
  const auto params = model.parameters();
  const std::size_t batches =
      (train.n_rows + model.config.batch_size - 1) / model.config.batch_size;
  const double kl_weight = model.config.kl_weight > 0.0
                               ? model.config.kl_weight
                               : 1.0 / static_cast<double>(batches);

  std::vector<std::size_t> order(train.n_rows);
  std::iota(order.begin(), order.end(), 0);
  Rng noise_rng(mix_seed(model.config.seed, 0xb0153));

  std::vector<EpochLog> log;
  for (std::size_t epoch = 0; epoch < model.config.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(model.config.seed, 0xb5000 + epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += model.config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + model.config.batch_size);
      const std::size_t rows = end - begin;

      diff::Tensor inputs = diff::Tensor::matrix(rows, layout.width);
      std::vector<int> labels(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        layout.fill_row(train, order[begin + i], inputs.begin() + i * layout.width);
        labels[i] = train.labels[order[begin + i]];
      }

      auto loss = elbo_loss(model, inputs, std::move(labels), kl_weight, noise_rng);
      diff::zero_grad(params);
      diff::backward(loss);
      for (const auto& p : params) {
        diff::add_scaled(p->value, p->grad, -model.config.learning_rate);
      }
      loss_sum += loss->value.item() * static_cast<double>(rows);
    }
    log.push_back({loss_sum / static_cast<double>(order.size())});
  }
  return log;
}

namespace {

// plain forward pass on raw buffers; the prediction path runs this hundreds
// of times per dataset, so it stays off the autodiff graph
struct DenseWeights {
  std::vector<double> w1, b1, w2, b2;
  std::size_t in = 0, hidden = 0;
};

DenseWeights sample_weights(const Model& model, Rng& rng) {
  DenseWeights dw;
  dw.in = model.input_width;
  dw.hidden = model.config.hidden;
  auto draw = [&](const VariationalParameter& p, std::vector<double>& out) {
    out.resize(p.mu->value.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = p.mu->value[i] + softplus(p.rho->value[i]) * rng.normal();
    }
  };
  draw(model.layers[0].w, dw.w1);
  draw(model.layers[0].b, dw.b1);
  draw(model.layers[1].w, dw.w2);
  draw(model.layers[1].b, dw.b2);
  return dw;
}

DenseWeights mean_weights(const Model& model) {
  DenseWeights dw;
  dw.in = model.input_width;
  dw.hidden = model.config.hidden;
  dw.w1 = model.layers[0].w.mu->value.data();
  dw.b1 = model.layers[0].b.mu->value.data();
  dw.w2 = model.layers[1].w.mu->value.data();
  dw.b2 = model.layers[1].b.mu->value.data();
  return dw;
}

// probs must hold 2 * rows doubles
void forward_dense(const double* x, std::size_t rows, const DenseWeights& dw, double* probs,
                   std::vector<double>& hidden_scratch) {
  const std::size_t in = dw.in, hid = dw.hidden;
  hidden_scratch.assign(rows * hid, 0.0);
  double* h = hidden_scratch.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * in;
    double* hr = h + r * hid;
    for (std::size_t k = 0; k < in; ++k) {
      const double v = xr[k];
      if (v == 0.0) continue;  // one-hot inputs are mostly zeros
      const double* wrow = dw.w1.data() + k * hid;
      for (std::size_t j = 0; j < hid; ++j) hr[j] += v * wrow[j];
    }
    for (std::size_t j = 0; j < hid; ++j) {
      hr[j] += dw.b1[j];
      if (hr[j] < 0.0) hr[j] = 0.0;
    }
    double z0 = dw.b2[0], z1 = dw.b2[1];
    for (std::size_t j = 0; j < hid; ++j) {
      z0 += hr[j] * dw.w2[j * 2];
      z1 += hr[j] * dw.w2[j * 2 + 1];
    }
    const double mx = std::max(z0, z1);
    const double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
    probs[r * 2] = e0 / (e0 + e1);
    probs[r * 2 + 1] = e1 / (e0 + e1);
  }
}

}  // namespace

std::vector<Posterior> posterior_predictive(const Model& model, const data::EncodedDataset& ds,
                                            std::size_t sample_count, std::uint64_t seed) {
  if (sample_count == 0) throw std::invalid_argument("bnn: sample_count must be positive");
  const data::OneHotLayout layout = data::OneHotLayout::standardized(ds.encoder);
  if (layout.width != model.input_width) {
    throw std::invalid_argument("bnn: dataset width does not match the model");
  }

  std::vector<Posterior> out(ds.n_rows);
  for (auto& p : out) {
    p.sample_count = sample_count;
    p.probabilities.assign(sample_count * 2, 0.0);
  }

  std::vector<double> x(ds.n_rows * layout.width);
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    layout.fill_row(ds, r, x.data() + r * layout.width);
  }

  constexpr std::size_t kChunk = 2048;
  std::vector<double> probs(std::min(kChunk, ds.n_rows ? ds.n_rows : 1) * 2);
  std::vector<double> hidden_scratch;
  for (std::size_t s = 0; s < sample_count; ++s) {
    // noise keyed by (seed, draw) only: row batching cannot change a draw
    Rng rng(mix_seed(seed, 0xdaaa + s));
    const DenseWeights dw = sample_weights(model, rng);
    for (std::size_t begin = 0; begin < ds.n_rows; begin += kChunk) {
      const std::size_t rows = std::min(kChunk, ds.n_rows - begin);
      forward_dense(x.data() + begin * layout.width, rows, dw, probs.data(), hidden_scratch);
      for (std::size_t i = 0; i < rows; ++i) {
        out[begin + i].probabilities[s * 2] = probs[i * 2];
        out[begin + i].probabilities[s * 2 + 1] = probs[i * 2 + 1];
      }
    }
  }

  std::vector<double> values(sample_count);
  for (auto& posterior : out) {
    for (int cls = 0; cls < 2; ++cls) {
      for (std::size_t s = 0; s < sample_count; ++s) values[s] = posterior.p(s, cls);
      std::sort(values.begin(), values.end());
      const std::size_t mid = sample_count / 2;
      posterior.median[cls] = sample_count % 2 == 1
                                  ? values[mid]
                                  : 0.5 * (values[mid - 1] + values[mid]);
      if (sample_count > 1) {
        const double mean =
            std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(sample_count);
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        posterior.stddev[cls] = std::sqrt(ss / static_cast<double>(sample_count - 1));
      }
    }
  }
  return out;
}

std::vector<std::array<double, 2>> mean_forward(const Model& model,
                                                const data::EncodedDataset& ds) {
  const data::OneHotLayout layout = data::OneHotLayout::standardized(ds.encoder);
  if (layout.width != model.input_width) {
    throw std::invalid_argument("bnn: dataset width does not match the model");
  }
  const DenseWeights dw = mean_weights(model);
  std::vector<std::array<double, 2>> out(ds.n_rows);
  std::vector<double> x(layout.width), probs(2);
  std::vector<double> hidden_scratch;
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    layout.fill_row(ds, r, x.data());
    forward_dense(x.data(), 1, dw, probs.data(), hidden_scratch);
    out[r] = {probs[0], probs[1]};
  }
  return out;
}

Decision decide(const Posterior& posterior, double threshold) {
  Decision d;
  d.leading_class = posterior.median[1] > posterior.median[0] ? 1 : 0;
  d.confidence = posterior.median[d.leading_class];
  d.spread = posterior.stddev[d.leading_class];
  if (d.confidence > threshold) {
    d.outcome = d.leading_class == 1 ? Outcome::positive : Outcome::negative;
  } else {
    d.outcome = Outcome::undecided;
  }
  return d;
}

std::vector<HistogramBin> log_probability_histogram(const Posterior& posterior, int cls,
                                                    std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("bnn: histogram needs at least one bin");
  if (cls != 0 && cls != 1) throw std::invalid_argument("bnn: class must be 0 or 1");

  std::vector<double> logs(posterior.sample_count);
  double lo = 0.0;
  for (std::size_t s = 0; s < posterior.sample_count; ++s) {
    logs[s] = std::log(std::max(posterior.p(s, cls), 1e-12));
    lo = std::min(lo, logs[s]);
  }
  std::vector<HistogramBin> out(bins);
  const double width = (0.0 - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + width * static_cast<double>(b);
    out[b].hi = lo + width * static_cast<double>(b + 1);
  }
  out.back().hi = 0.0;
  for (double v : logs) {
    std::size_t b;
    if (width == 0.0) {
      b = bins - 1;  // every draw at ln p = 0
    } else {
      const double t = (v - lo) / width;
      b = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(t))));
    }
    ++out[b].count;
  }
  return out;
}

}  // namespace ptp::bnn
