#include "glass/error.hpp"
#include "glass/model.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace glass;
using glass::testing::random_dataset;

namespace {

ModelParams random_theta(int num_channels, int num_samples, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  ModelParams theta;
  theta.beta_raw.resize(num_samples);
  for (auto& b : theta.beta_raw) b = 0.5 * standard_normal(rng);
  theta.sigma = 0.7;
  theta.delta.resize(num_channels);
  theta.alpha_raw.resize(num_channels);
  for (int e = 0; e < num_channels; ++e) {
    theta.delta[e] = e % 3 == 2 ? 0.0 : 1.0;
    theta.alpha_raw[e] = standard_normal(rng);
  }
  return theta;
}

}  // namespace

TEST_CASE("softmax sums to one and ignores a common shift") {
  const Simplex6 eta{0.3, -1.2, 4.0, 2.5, 0.0, -7.0};
  const Simplex6 p = softmax(eta);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  Simplex6 shifted = eta;
  for (double& v : shifted) v += 123.456;
  const Simplex6 q = softmax(shifted);
  for (int j = 0; j < 6; ++j) CHECK(std::abs(p[j] - q[j]) <= 1e-12);
}

TEST_CASE("softmax is stable for huge predictors") {
  const Simplex6 p = softmax({1000.0, 999.0, -1000.0, 0.0, 0.0, 0.0});
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(std::isfinite(p[2]));
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
  CHECK(soft_threshold(0.2, 0.0) == 0.2);
  CHECK(soft_threshold_derivative(1.0, 1.0) == 0.0);
  CHECK(soft_threshold_derivative(1.5, 1.0) == 1.0);
  CHECK(soft_threshold_derivative(0.5, 1.0) == 0.0);

  SUBCASE("contraction") {
    Rng rng = make_rng(3);
    for (int k = 0; k < 1000; ++k) {
      const double x = 4.0 * standard_normal(rng);
      const double y = 4.0 * standard_normal(rng);
      const double tau = std::abs(standard_normal(rng));
      CHECK(std::abs(soft_threshold(x, tau) - soft_threshold(y, tau)) <= std::abs(x - y) * (1.0 + 1e-12) + 1e-15);
      CHECK(std::abs(soft_threshold(x, tau)) <= std::abs(x));
    }
  }
}

TEST_CASE("projection onto the sphere") {
  const Eigen::Vector3d a(3.0, 0.0, 4.0);
  const Eigen::VectorXd u = project_to_sphere(a);
  CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((project_to_sphere(7.5 * a) - u).norm() <= 1e-15);
  CHECK_THROWS_AS(project_to_sphere(Eigen::Vector3d::Zero()), Error);
  try {
    project_to_sphere(Eigen::Vector3d::Zero());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
  }
}

TEST_CASE("linear predictors match an explicit sum") {
  const Dataset data = random_dataset(3, 5, 2, 11);
  const ModelParams theta = random_theta(3, 5, 12);
  const Hyperparams hyper{0.2, 1.0, 0.5};
  const Eigen::VectorXd alpha = theta.alpha_raw.normalized();
  const Eigen::VectorXd beta = soft_threshold(theta.beta_raw, hyper.tau);
  const Simplex6 eta = linear_predictors(data.halves[0], theta, hyper);
  for (int j = 0; j < 6; ++j) {
    double expected = 0.0;
    for (int e = 0; e < 3; ++e) {
      for (int m = 0; m < 5; ++m) expected += theta.delta[e] * alpha[e] * data.halves[0].epochs[j](e, m) * beta[m];
    }
    CHECK(eta[j] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("zero effects give uniform probabilities") {
  const Dataset data = random_dataset(2, 4, 1, 5);
  ModelParams theta = random_theta(2, 4, 6);
  theta.beta_raw.setZero();
  const Simplex6 p = target_probabilities(data.halves[0], theta, Hyperparams{});
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  theta.beta_raw.setConstant(0.1);
  const Simplex6 q = target_probabilities(data.halves[0], theta, Hyperparams{0.5, 1.0, 0.5});
  for (double v : q) CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("rescaling the raw channel weights leaves the likelihood unchanged") {
  const Dataset data = random_dataset(4, 6, 8, 21);
  ModelParams theta = random_theta(4, 6, 22);
  const double base = log_likelihood(data, theta, Hyperparams{});
  theta.alpha_raw *= 17.0;
  CHECK(log_likelihood(data, theta, Hyperparams{}) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("sign flip of alpha and beta leaves the likelihood unchanged") {
  const Dataset data = random_dataset(3, 6, 8, 31);
  ModelParams theta = random_theta(3, 6, 32);
  const Hyperparams hyper{0.1, 1.0, 0.5};
  const double base = log_likelihood(data, theta, hyper);
  theta.alpha_raw = -theta.alpha_raw;
  theta.beta_raw = -theta.beta_raw;
  CHECK(log_likelihood(data, theta, hyper) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("half-Cauchy density integrates to one") {
  // sigma = A tan(pi u / 2) maps the half-Cauchy(A) law to the uniform law on (0, 1).
  for (double scale : {0.3, 1.0, 4.0}) {
    auto [u, w] = glass::testing::gauss_legendre01(200);
    double total = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      const double sigma = scale * std::tan(std::numbers::pi * u[k] / 2.0);
      const double jacobian = scale * std::numbers::pi / 2.0 / std::pow(std::cos(std::numbers::pi * u[k] / 2.0), 2);
      total += w[k] * std::exp(half_cauchy_log_density(sigma, scale)) * jacobian;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("log prior matches a direct evaluation") {
  ModelParams theta = random_theta(3, 4, 41);
  const Hyperparams hyper{0.0, 2.0, 0.3};
  double expected = 0.0;
  double prev = 0.0;
  for (int m = 0; m < 4; ++m) {
    const double z = (theta.beta_raw[m] - prev) / theta.sigma;
    expected += -0.5 * z * z - std::log(theta.sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
    prev = theta.beta_raw[m];
  }
  expected += std::log(2.0 / (std::numbers::pi * 2.0 * (1.0 + std::pow(theta.sigma / 2.0, 2))));
  for (int e = 0; e < 3; ++e) {
    expected += theta.delta[e] > 0.5 ? std::log(0.3) : std::log(0.7);
    expected += -0.5 * theta.alpha_raw[e] * theta.alpha_raw[e] - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  CHECK(log_prior(theta, hyper) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("likelihood requires labels") {
  const Dataset data = random_dataset(2, 3, 2, 51, 1.0, false);
  try {
    (void)log_likelihood(data, random_theta(2, 3, 52), Hyperparams{});
    FAIL("expected MissingLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingLabel);
  }
}

TEST_CASE("non-finite predictors are rejected") {
  Dataset data = random_dataset(2, 3, 1, 61);
  data.halves[0].epochs[2](0, 0) = std::numeric_limits<double>::infinity();
  ModelParams theta = random_theta(2, 3, 62);
  theta.delta.setOnes();
  CHECK_THROWS_AS(target_probabilities(data.halves[0], theta, Hyperparams{}), Error);
}

TEST_CASE("design matrix batches agree with per-draw evaluation") {
  const Dataset data = random_dataset(3, 7, 10, 71);
  const DesignMatrix design(data);
  const Hyperparams hyper{0.15, 1.0, 0.5};
  const int draws = 4;
  Eigen::MatrixXd beta(7, draws), weights(3, draws);
  std::vector<ModelParams> thetas;
  for (int l = 0; l < draws; ++l) {
    thetas.push_back(random_theta(3, 7, 100 + l));
    beta.col(l) = thetas.back().beta_tilde(hyper.tau);
    weights.col(l) = thetas.back().channel_weights();
  }
  const Eigen::VectorXd batched = design.log_likelihoods(beta, weights);
  const Eigen::MatrixXd eta = design.linear_predictors(beta, weights);
  for (int l = 0; l < draws; ++l) {
    CHECK(batched[l] == doctest::Approx(log_likelihood(data, thetas[l], hyper)).epsilon(1e-12));
    const Simplex6 direct = linear_predictors(data.halves[3], thetas[l], hyper);
    for (int j = 0; j < 6; ++j) CHECK(eta(3 * 6 + j, l) == doctest::Approx(direct[j]).epsilon(1e-12));
  }
}
