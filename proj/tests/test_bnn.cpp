#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "encoded_fixtures.hpp"
#include "ptp/bnn.hpp"

using namespace ptp::bnn;
namespace diff = ptp::diff;

namespace {

VariationalParameter make_param(std::vector<double> mu, std::vector<double> rho) {
  VariationalParameter p;
  p.mu = diff::leaf(diff::Tensor::vector(std::move(mu)), true);
  p.rho = diff::leaf(diff::Tensor::vector(std::move(rho)), true);
  return p;
}

// rho giving sigma = softplus(rho) exactly equal to the wanted value
double rho_for_sigma(double sigma) { return std::log(std::expm1(sigma)); }

}  // namespace

TEST_SUITE("bnn") {

TEST_CASE("softplus") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(softplus(-5.0) == doctest::Approx(std::log1p(std::exp(-5.0))).epsilon(1e-12));
  CHECK(softplus(40.0) == 40.0);  // large inputs pass through
  CHECK(softplus(-40.0) > 0.0);
  CHECK(softplus(rho_for_sigma(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampling is mu plus softplus(rho) times the noise") {
  const auto p = make_param({1.0, 2.0}, {0.0, 0.0});
  const auto zero = diff::Tensor::vector({0.0, 0.0});
  CHECK(sample_gaussian(p, zero)->value.data() == p.mu->value.data());

  const auto noise = diff::Tensor::vector({1.0, -1.0});
  const auto drawn = sample_gaussian(p, noise);
  CHECK(drawn->value[0] == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-12));
  CHECK(drawn->value[1] == doctest::Approx(2.0 - std::log(2.0)).epsilon(1e-12));

  const auto short_noise = diff::Tensor::vector(std::vector<double>{1.0});
  CHECK_THROWS_AS(sample_gaussian(p, short_noise), std::invalid_argument);
}

TEST_CASE("kl against the prior in closed form") {
  // posterior equal to the prior: zero divergence
  const auto at_prior = make_param({0.0}, {rho_for_sigma(1.0)});
  CHECK(kl_divergence(at_prior, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

  // shifting the mean by 1 costs mu^2 / 2 = 0.5 per element
  const auto shifted = make_param({1.0, 1.0}, {rho_for_sigma(1.0), rho_for_sigma(1.0)});
  CHECK(kl_divergence(shifted, 1.0) == doctest::Approx(1.0).epsilon(1e-10));

  // wider prior: sigma = prior_sigma and mu = 0 is again free
  const auto wide = make_param({0.0}, {rho_for_sigma(2.0)});
  CHECK(kl_divergence(wide, 2.0) == doctest::Approx(0.0).epsilon(1e-10));

  // generic element checked against the formula directly
  const auto generic = make_param({0.7}, {0.3});
  const double sig = softplus(0.3);
  const double expected =
      std::log(1.5) - std::log(sig) + (sig * sig + 0.49) / (2.0 * 1.5 * 1.5) - 0.5;
  CHECK(kl_divergence(generic, 1.5) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(kl_node(generic, 1.5)->value.item() == kl_divergence(generic, 1.5));
}

TEST_CASE("kl gradients agree with finite differences") {
  const auto p = make_param({0.4, -0.9, 1.3}, {-0.2, 0.5, -1.0});
  const std::vector<diff::NodePtr> params{p.mu, p.rho};
  const double err = diff::finite_diff_check([&] { return kl_node(p, 0.8); }, params);
  CHECK(err < 1e-6);
}

TEST_CASE("sampled-network gradients agree with finite differences") {
  const auto ds = fixtures::continuous_1d({-1.0, -0.5, 0.5, 1.0}, {0, 0, 1, 1});
  Config cfg;
  cfg.hidden = 4;
  Model model = build(ds.encoder, cfg);
  const diff::Tensor inputs = diff::Tensor::matrix(4, 1, {-1.0, -0.5, 0.5, 1.0});
  const auto params = model.parameters();
  const double err = diff::finite_diff_check(
      [&] {
        ptp::Rng noise(1234);
        return elbo_loss(model, inputs, {0, 0, 1, 1}, 0.3, noise);
      },
      params);
  CHECK(err < 1e-6);
}

TEST_CASE("the loss splits into replayed cross-entropy plus weighted kl") {
  const auto ds = fixtures::continuous_1d({-1.0, 0.5, 1.5}, {0, 1, 1});
  Config cfg;
  cfg.hidden = 3;
  Model model = build(ds.encoder, cfg);
  const diff::Tensor inputs = diff::Tensor::matrix(3, 1, {-1.0, 0.5, 1.5});

  ptp::Rng r1(99), r2(99), r3(99), r4(7);
  const double plain = elbo_loss(model, inputs, {0, 1, 1}, 0.0, r1)->value.item();
  const double weighted = elbo_loss(model, inputs, {0, 1, 1}, 0.37, r2)->value.item();
  CHECK(weighted - plain == doctest::Approx(0.37 * total_kl(model)).epsilon(1e-9));

  // same seed, same draw; different seed, different network
  CHECK(elbo_loss(model, inputs, {0, 1, 1}, 0.0, r3)->value.item() == plain);
  CHECK(elbo_loss(model, inputs, {0, 1, 1}, 0.0, r4)->value.item() != plain);

  const diff::Tensor wide = diff::Tensor::matrix(3, 2);
  ptp::Rng r5(1);
  CHECK_THROWS_AS(elbo_loss(model, wide, {0, 1, 1}, 0.0, r5), std::invalid_argument);
}

TEST_CASE("build validates and lays out two variational layers") {
  const auto ds = fixtures::mixed_cloud(10, 1);
  Config cfg;
  cfg.hidden = 8;
  const Model model = build(ds.encoder, cfg);
  CHECK(model.input_width == 5);  // 2 continuous + one-hot of 3 levels
  REQUIRE(model.layers.size() == 2);
  CHECK(model.layers[0].w.mu->value.rows() == 5);
  CHECK(model.layers[0].w.mu->value.cols() == 8);
  CHECK(model.layers[1].w.mu->value.rows() == 8);
  CHECK(model.layers[1].w.mu->value.cols() == 2);
  for (double v : model.layers[0].w.rho->value) CHECK(v == -5.0);
  CHECK(model.parameters().size() == 8);

  Config bad = cfg;
  bad.hidden = 0;
  CHECK_THROWS_AS(build(ds.encoder, bad), std::invalid_argument);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(build(ds.encoder, bad), std::invalid_argument);
  bad = cfg;
  bad.prior_sigma = 0.0;
  CHECK_THROWS_AS(build(ds.encoder, bad), std::invalid_argument);
}

TEST_CASE("posterior draws are keyed by seed and draw index only") {
  const auto ds = fixtures::mixed_cloud(20, 6);
  Config cfg;
  cfg.hidden = 8;
  const Model model = build(ds.encoder, cfg);

  const auto whole = posterior_predictive(model, ds, 16, 5);
  REQUIRE(whole.size() == 20);
  for (std::size_t r : {std::size_t{0}, std::size_t{7}, std::size_t{19}}) {
    const auto one = posterior_predictive(model, fixtures::slice_row(ds, r), 16, 5);
    REQUIRE(one.size() == 1);
    CHECK(one[0].probabilities == whole[r].probabilities);
    CHECK(one[0].median == whole[r].median);
    CHECK(one[0].stddev == whole[r].stddev);
  }

  const auto replay = posterior_predictive(model, ds, 16, 5);
  CHECK(replay[3].probabilities == whole[3].probabilities);
  const auto reseeded = posterior_predictive(model, ds, 16, 6);
  CHECK(reseeded[3].probabilities != whole[3].probabilities);

  CHECK_THROWS_AS(posterior_predictive(model, ds, 0, 5), std::invalid_argument);
}

TEST_CASE("median and spread summarize the draws") {
  const auto ds = fixtures::continuous_1d({0.3}, {1});
  Config cfg;
  cfg.hidden = 4;
  const Model model = build(ds.encoder, cfg);

  for (std::size_t s : {std::size_t{5}, std::size_t{6}}) {
    const auto post = posterior_predictive(model, ds, s, 11)[0];
    REQUIRE(post.sample_count == s);
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<double> v;
      for (std::size_t i = 0; i < s; ++i) {
        CHECK(post.p(i, 0) + post.p(i, 1) == doctest::Approx(1.0).epsilon(1e-12));
        v.push_back(post.p(i, cls));
      }
      std::sort(v.begin(), v.end());
      const double median = s % 2 == 1 ? v[s / 2] : 0.5 * (v[s / 2 - 1] + v[s / 2]);
      CHECK(post.median[cls] == doctest::Approx(median).epsilon(1e-15));
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(s);
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      CHECK(post.stddev[cls] ==
            doctest::Approx(std::sqrt(ss / static_cast<double>(s - 1))).epsilon(1e-12));
    }
  }

  const auto single = posterior_predictive(model, ds, 1, 11)[0];
  CHECK(single.median[1] == single.p(0, 1));
  CHECK(single.stddev[1] == 0.0);
}

TEST_CASE("a collapsed posterior reproduces the mean forward pass") {
  const auto ds = fixtures::mixed_cloud(15, 2);
  Config cfg;
  cfg.hidden = 8;
  Model model = build(ds.encoder, cfg);
  for (auto& layer : model.layers) {
    layer.w.rho->value.fill(-20.0);
    layer.b.rho->value.fill(-20.0);
  }
  const auto mf = mean_forward(model, ds);
  const auto post = posterior_predictive(model, ds, 12, 1);
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    for (std::size_t s = 0; s < 12; ++s) {
      CHECK(std::abs(post[r].p(s, 1) - mf[r][1]) < 1e-6);
    }
    CHECK(post[r].stddev[1] < 1e-6);
  }
}

TEST_CASE("decisions need the leading median strictly above the threshold") {
  Posterior p;
  p.median = {0.3, 0.7};
  p.stddev = {0.05, 0.08};

  Decision d = decide(p, 0.5);
  CHECK(d.outcome == Outcome::positive);
  CHECK(d.leading_class == 1);
  CHECK(d.confidence == 0.7);
  CHECK(d.spread == 0.08);

  CHECK(decide(p, 0.7).outcome == Outcome::undecided);  // not strictly above
  CHECK(decide(p, 0.699).outcome == Outcome::positive);
  CHECK(decide(p, 0.9).outcome == Outcome::undecided);

  Posterior n;
  n.median = {0.8, 0.2};
  n.stddev = {0.01, 0.01};
  CHECK(decide(n, 0.5).outcome == Outcome::negative);
  CHECK(decide(n, 0.5).leading_class == 0);

  Posterior tie;
  tie.median = {0.5, 0.5};
  CHECK(decide(tie, 0.4).leading_class == 0);  // exact tie goes to class 0
  CHECK(decide(tie, 0.4).outcome == Outcome::negative);
  CHECK(decide(tie, 0.5).outcome == Outcome::undecided);
}

TEST_CASE("log probability histogram spans min log p up to zero") {
  Posterior p;
  p.sample_count = 4;
  p.probabilities = {0, 1.0, 0, std::exp(-1.0), 0, std::exp(-2.0), 0, std::exp(-4.0)};
  for (std::size_t s = 0; s < 4; ++s) p.probabilities[s * 2] = 1.0 - p.probabilities[s * 2 + 1];

  const auto h = log_probability_histogram(p, 1, 4);
  REQUIRE(h.size() == 4);
  CHECK(h[0].lo == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(h[3].hi == 0.0);
  CHECK(h[0].count == 1);  // -4
  CHECK(h[1].count == 0);
  CHECK(h[2].count == 1);  // -2
  CHECK(h[3].count == 2);  // -1 and 0
  std::size_t total = 0;
  for (const auto& bin : h) total += bin.count;
  CHECK(total == 4);
}

TEST_CASE("degenerate and clamped histogram inputs") {
  Posterior sure;
  sure.sample_count = 3;
  sure.probabilities = {0, 1.0, 0, 1.0, 0, 1.0};
  const auto h = log_probability_histogram(sure, 1, 5);
  CHECK(h.back().count == 3);  // zero-width range lands everything on top
  for (std::size_t b = 0; b + 1 < h.size(); ++b) CHECK(h[b].count == 0);

  Posterior zero;
  zero.sample_count = 2;
  zero.probabilities = {1.0, 0.0, 0.5, 0.5};
  const auto hz = log_probability_histogram(zero, 1, 3);
  CHECK(hz.front().lo == doctest::Approx(std::log(1e-12)).epsilon(1e-9));

  CHECK_THROWS_AS(log_probability_histogram(sure, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(log_probability_histogram(sure, 2, 4), std::invalid_argument);
}

TEST_CASE("training tightens the fit on a separable cloud") {
  const auto ds = fixtures::mixed_cloud(200, 8);
  Config cfg;
  cfg.hidden = 16;
  cfg.epochs = 8;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.1;
  cfg.seed = 3;
  Model model = build(ds.encoder, cfg);
  const auto log = train(model, ds);
  REQUIRE(log.size() == 8);
  CHECK(log.back().mean_loss < log.front().mean_loss);

  const auto mf = mean_forward(model, ds);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    correct += (mf[r][1] > 0.5 ? 1 : 0) == ds.labels[r];
  }
  CHECK(static_cast<double>(correct) / 200.0 > 0.9);

  ptp::data::EncodedDataset empty;
  empty.encoder = ds.encoder;
  CHECK_THROWS_AS(train(model, empty), std::invalid_argument);
  auto unlabeled = ds;
  unlabeled.labels[0] = -1;
  CHECK_THROWS_AS(train(model, unlabeled), std::invalid_argument);
}

}  // TEST_SUITE
