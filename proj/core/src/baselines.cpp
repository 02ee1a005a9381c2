#include "ptp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ptp::baselines {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// mean log-loss of raw scores f against 0/1 labels, evaluated stably
double log_loss_term(double f, int y) {
  return std::max(f, 0.0) - f * static_cast<double>(y) + std::log1p(std::exp(-std::abs(f)));
}

struct Objective {
  const data::EncodedDataset& ds;
  const data::OneHotLayout& layout;
  double c;

  double value(std::span<const double> w, double b) const {
    double acc = 0.0;
    for (std::size_t r = 0; r < ds.n_rows; ++r) {
      acc += log_loss_term(layout.dot(ds, r, w.data()) + b, ds.labels[r]);
    }
    const double n = static_cast<double>(ds.n_rows);
    double penalty = 0.0;
    for (double wi : w) penalty += wi * wi;
    return acc / n + penalty / (2.0 * c * n);
  }

  // fills grad_w (layout.width) and grad_b
  void gradient(std::span<const double> w, double b, std::span<double> grad_w,
                double& grad_b) const {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    grad_b = 0.0;
    for (std::size_t r = 0; r < ds.n_rows; ++r) {
      const double err = sigmoid(layout.dot(ds, r, w.data()) + b) -
                         static_cast<double>(ds.labels[r]);
      layout.axpy(ds, r, err, grad_w.data());
      grad_b += err;
    }
    const double n = static_cast<double>(ds.n_rows);
    for (std::size_t j = 0; j < grad_w.size(); ++j) {
      grad_w[j] = grad_w[j] / n + w[j] / (c * n);
    }
    grad_b /= n;
  }
};

}  // namespace

LogisticModel fit_logistic(const data::EncodedDataset& train, const LogisticConfig& config) {
  if (train.n_rows == 0) throw std::invalid_argument("logistic: empty training data");
  if (!train.fully_labeled()) throw std::invalid_argument("logistic: training rows need labels");
  if (config.c <= 0.0) throw std::invalid_argument("logistic: c must be positive");

  const data::OneHotLayout layout = data::OneHotLayout::standardized(train.encoder);
  const Objective objective{train, layout, config.c};

  LogisticModel model;
  model.weights.assign(layout.width, 0.0);
  model.intercept = 0.0;

  std::vector<double> grad(layout.width), trial(layout.width);
  double current = objective.value(model.weights, model.intercept);
  model.objective_trace.push_back(current);

  constexpr double kArmijo = 1e-4;
  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    double grad_b = 0.0;
    objective.gradient(model.weights, model.intercept, grad, grad_b);

    double max_norm = std::abs(grad_b);
    double sq_norm = grad_b * grad_b;
    for (double g : grad) {
      max_norm = std::max(max_norm, std::abs(g));
      sq_norm += g * g;
    }
    if (max_norm < config.tol) {
      model.converged = true;
      break;
    }

    // fresh unit step every iteration, halved until the Armijo condition holds
    double step = 1.0;
    double next = current;
    double next_b = model.intercept;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t j = 0; j < layout.width; ++j) {
        trial[j] = model.weights[j] - step * grad[j];
      }
      next_b = model.intercept - step * grad_b;
      next = objective.value(trial, next_b);
      if (next <= current - kArmijo * step * sq_norm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent step left at double precision

    model.weights.swap(trial);
    model.intercept = next_b;
    current = next;
    model.objective_trace.push_back(current);
    model.iterations = iter + 1;
  }
  return model;
}

std::vector<double> logistic_scores(const LogisticModel& model, const data::EncodedDataset& ds) {
  const data::OneHotLayout layout = data::OneHotLayout::standardized(ds.encoder);
  if (layout.width != model.weights.size()) {
    throw std::invalid_argument("logistic: feature width does not match the model");
  }
  std::vector<double> out(ds.n_rows);
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    out[r] = sigmoid(layout.dot(ds, r, model.weights.data()) + model.intercept);
  }
  return out;
}

double logistic_objective(const LogisticModel& model, const data::EncodedDataset& ds, double c) {
  const data::OneHotLayout layout = data::OneHotLayout::standardized(ds.encoder);
  if (layout.width != model.weights.size()) {
    throw std::invalid_argument("logistic: feature width does not match the model");
  }
  return Objective{ds, layout, c}.value(model.weights, model.intercept);
}

NaiveBayesModel fit_naive_bayes_counts(std::span<const double> counts, std::size_t width,
                                       std::span<const int> labels,
                                       const NaiveBayesConfig& config) {
  if (width == 0 || labels.empty() || counts.size() != width * labels.size()) {
    throw std::invalid_argument("naive_bayes: counts shape mismatch");
  }
  if (config.alpha <= 0.0) throw std::invalid_argument("naive_bayes: alpha must be positive");

  NaiveBayesModel model;
  model.alpha = config.alpha;
  model.width = width;
  model.log_likelihood.assign(2 * width, 0.0);

  std::array<double, 2> class_rows{{0.0, 0.0}};
  std::vector<double> slot(2 * width, 0.0);
  std::array<double, 2> slot_total{{0.0, 0.0}};
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int y = labels[r];
    if (y != 0 && y != 1) throw std::invalid_argument("naive_bayes: labels must be 0 or 1");
    class_rows[static_cast<std::size_t>(y)] += 1.0;
    for (std::size_t j = 0; j < width; ++j) {
      const double v = counts[r * width + j];
      if (v < 0.0) throw std::invalid_argument("naive_bayes: negative count");
      slot[static_cast<std::size_t>(y) * width + j] += v;
      slot_total[static_cast<std::size_t>(y)] += v;
    }
  }
  for (int c = 0; c < 2; ++c) {
    const double denom = slot_total[c] + config.alpha * static_cast<double>(width);
    for (std::size_t j = 0; j < width; ++j) {
      model.log_likelihood[static_cast<std::size_t>(c) * width + j] =
          std::log((slot[static_cast<std::size_t>(c) * width + j] + config.alpha) / denom);
    }
    if (config.fit_prior) {
      model.log_prior[c] = class_rows[c] > 0.0
                               ? std::log(class_rows[c] / static_cast<double>(labels.size()))
                               : -std::numeric_limits<double>::infinity();
    } else {
      model.log_prior[c] = std::log(0.5);
    }
  }
  return model;
}

NaiveBayesModel fit_naive_bayes(const data::EncodedDataset& train,
                                const NaiveBayesConfig& config) {
  if (train.n_rows == 0) throw std::invalid_argument("naive_bayes: empty training data");
  if (!train.fully_labeled()) throw std::invalid_argument("naive_bayes: training rows need labels");
  const data::OneHotLayout layout = data::OneHotLayout::binned_counts(train.encoder);

  // same model as the dense fit, accumulated sparsely: every row activates
  // exactly one slot per column
  NaiveBayesModel model;
  model.alpha = config.alpha;
  model.width = layout.width;
  model.log_likelihood.assign(2 * layout.width, 0.0);

  std::array<double, 2> class_rows{{0.0, 0.0}};
  std::vector<double> slot(2 * layout.width, 0.0);
  for (std::size_t r = 0; r < train.n_rows; ++r) {
    const auto y = static_cast<std::size_t>(train.labels[r]);
    class_rows[y] += 1.0;
    layout.axpy(train, r, 1.0, slot.data() + y * layout.width);
  }
  const double per_row = static_cast<double>(train.encoder.columns.size());
  for (int c = 0; c < 2; ++c) {
    const double denom =
        class_rows[c] * per_row + config.alpha * static_cast<double>(layout.width);
    for (std::size_t j = 0; j < layout.width; ++j) {
      model.log_likelihood[static_cast<std::size_t>(c) * layout.width + j] =
          std::log((slot[static_cast<std::size_t>(c) * layout.width + j] + config.alpha) / denom);
    }
    if (config.fit_prior) {
      model.log_prior[c] = class_rows[c] > 0.0
                               ? std::log(class_rows[c] / static_cast<double>(train.n_rows))
                               : -std::numeric_limits<double>::infinity();
    } else {
      model.log_prior[c] = std::log(0.5);
    }
  }
  return model;
}

std::array<double, 2> naive_bayes_posterior(const NaiveBayesModel& model,
                                            std::span<const double> counts) {
  if (counts.size() != model.width) {
    throw std::invalid_argument("naive_bayes: counts width does not match the model");
  }
  std::array<double, 2> log_post;
  for (int c = 0; c < 2; ++c) {
    double acc = model.log_prior[c];
    const double* ll = model.log_likelihood.data() + static_cast<std::size_t>(c) * model.width;
    for (std::size_t j = 0; j < model.width; ++j) acc += counts[j] * ll[j];
    log_post[c] = acc;
  }
  const double mx = std::max(log_post[0], log_post[1]);
  const double e0 = std::exp(log_post[0] - mx), e1 = std::exp(log_post[1] - mx);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::vector<double> naive_bayes_scores(const NaiveBayesModel& model,
                                       const data::EncodedDataset& ds) {
  const data::OneHotLayout layout = data::OneHotLayout::binned_counts(ds.encoder);
  if (layout.width != model.width) {
    throw std::invalid_argument("naive_bayes: feature width does not match the model");
  }
  std::vector<double> out(ds.n_rows);
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    std::array<double, 2> log_post;
    for (int c = 0; c < 2; ++c) {
      log_post[c] = model.log_prior[c] +
                    layout.dot(ds, r, model.log_likelihood.data() +
                                          static_cast<std::size_t>(c) * model.width);
    }
    const double mx = std::max(log_post[0], log_post[1]);
    const double e0 = std::exp(log_post[0] - mx), e1 = std::exp(log_post[1] - mx);
    out[r] = e1 / (e0 + e1);
  }
  return out;
}

}  // namespace ptp::baselines
