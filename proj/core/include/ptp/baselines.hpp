#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ptp/encode.hpp"

namespace ptp::baselines {

// L2-regularized logistic regression. The objective is the mean log-loss
// plus ||w||^2 / (2 c n); the intercept is not penalized. Fitting is plain
// gradient descent with a backtracking (Armijo) line search that restarts
// from a unit step every iteration, so the objective trace never increases.
struct LogisticConfig {
  double c = 1.0;  // inverse regularization strength
  std::size_t max_iter = 100;
  double tol = 1e-4;  // stop once the gradient max-norm drops below
};

struct LogisticModel {
  std::vector<double> weights;  // one per one-hot feature slot
  double intercept = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // objective after each iteration, [0] = at start
};

LogisticModel fit_logistic(const data::EncodedDataset& train, const LogisticConfig& config = {});

// P(y=1) per row
std::vector<double> logistic_scores(const LogisticModel& model, const data::EncodedDataset& ds);

// objective value at the model's parameters (exposed for the descent checks)
double logistic_objective(const LogisticModel& model, const data::EncodedDataset& ds, double c);

// Multinomial naive Bayes over non-negative feature counts. Continuous
// columns enter as one-hot bin indicators, categoricals as one-hot levels,
// so every row contributes one count per column.
struct NaiveBayesConfig {
  double alpha = 0.05;  // additive smoothing
  bool fit_prior = true;
};

struct NaiveBayesModel {
  double alpha = 0.0;
  std::size_t width = 0;
  std::array<double, 2> log_prior{{0.0, 0.0}};
  std::vector<double> log_likelihood;  // 2 x width, log p(slot | class)
};

NaiveBayesModel fit_naive_bayes(const data::EncodedDataset& train,
                                const NaiveBayesConfig& config = {});
// counts is n x width row-major; exposed so small worked examples can bypass
// the encoding layer
NaiveBayesModel fit_naive_bayes_counts(std::span<const double> counts, std::size_t width,
                                       std::span<const int> labels,
                                       const NaiveBayesConfig& config = {});

std::array<double, 2> naive_bayes_posterior(const NaiveBayesModel& model,
                                            std::span<const double> counts);
std::vector<double> naive_bayes_scores(const NaiveBayesModel& model,
                                       const data::EncodedDataset& ds);

}  // namespace ptp::baselines
