#pragma once

#include "glass/variational.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace glass {

struct FitConfig {
  int iterations = 2000;
  double step_size = 0.05;
  GradConfig grad;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Record the ELBO estimate every `trace_every` iterations; 0 disables the trace.
  int trace_every = 10;

  void validate() const;
};

struct TracePoint {
  int iteration = 0;
  double elbo = 0.0;
};

struct FitResult {
  VariationalParams xi;
  std::vector<TracePoint> trace;
  double tau_used = 0.0;
  std::uint64_t seed = 0;
};

/// Initial surrogate: beta and alpha means ~ N(0, 0.01^2) from `seed`, every
/// softplus scale equal to 0.1, delta logits 0, log-sigma location log(0.1).
VariationalParams initialize_variational(int num_channels, int num_samples, std::uint64_t seed);

/// Adam ascent on the Monte Carlo ELBO for exactly cfg.iterations steps.
/// Iteration t draws its Monte Carlo noise from derive_seed(cfg.grad.seed, t).
FitResult fit(const Dataset& data, const Hyperparams& hyper, const FitConfig& cfg);

/// Same as fit() but starting from a supplied surrogate.
FitResult fit_from(const Dataset& data, const Hyperparams& hyper, const FitConfig& cfg, VariationalParams start);

/// G independent draws of theta from q with exact Bernoulli inclusion indicators.
struct PosteriorDraws {
  Eigen::MatrixXd beta_raw;   // G x M
  Eigen::VectorXd sigma;      // G
  Eigen::MatrixXd delta;      // G x E, entries 0/1
  Eigen::MatrixXd alpha_raw;  // G x E
  Eigen::VectorXd log_q;      // G
  /// log pi(theta_g, z | X_train); filled by attach_log_joint.
  std::optional<Eigen::VectorXd> log_joint;

  [[nodiscard]] int size() const { return static_cast<int>(sigma.size()); }
  [[nodiscard]] int num_channels() const { return static_cast<int>(delta.cols()); }
  [[nodiscard]] int num_samples() const { return static_cast<int>(beta_raw.cols()); }
  [[nodiscard]] ModelParams draw(int g) const;
  /// Row g is S_tau(beta*_g).
  [[nodiscard]] Eigen::MatrixXd beta_tilde(double tau) const;
  /// Row g is alpha*_g / ||alpha*_g||.
  [[nodiscard]] Eigen::MatrixXd alpha() const;
};

PosteriorDraws posterior_draws(const VariationalParams& xi, int num_draws, std::uint64_t seed);

/// Computes log pi(theta_g, z | X) (exact Bernoulli prior) for every draw.
void attach_log_joint(PosteriorDraws& draws, const Dataset& data, const Hyperparams& hyper);

/// Baseline fit with tau = 0 whose posterior-median effects set the threshold.
struct TauCalibration {
  FitResult baseline;
  double median_abs_effect = 0.0;

  [[nodiscard]] double tau_for(double ratio) const { return ratio * median_abs_effect; }
};

inline constexpr int kCalibrationDraws = 2000;

TauCalibration calibrate_tau_baseline(const Dataset& data, const Hyperparams& hyper0, const FitConfig& cfg);

/// ratio * median_m |posterior median of beta_tilde_m| under a tau = 0 baseline fit.
double calibrate_tau(const Dataset& data, const Hyperparams& hyper0, const FitConfig& cfg, double ratio = 0.5);

/// ratio * median_m |median_m| for already computed per-coordinate medians.
double tau_from_medians(const Eigen::VectorXd& medians, double ratio);

/// Seed offsets separating the random streams of one training run.
std::uint64_t calibration_seed(std::uint64_t seed);
std::uint64_t draws_seed(std::uint64_t seed);

}  // namespace glass
