#pragma once

#include "glass/model.hpp"
#include "glass/numeric.hpp"

#include <cstdint>
#include <vector>

namespace glass {

/// Mean-field surrogate parameters. Scales live on the real line and are mapped
/// to positive standard deviations by softplus.
///
/// Flat layout (length 2M + 2 + 3E):
///   [beta_mean (M) | beta_rawscale (M) | sigma_mean | sigma_rawscale |
///    delta_logit (E) | alpha_mean (E) | alpha_rawscale (E)]
struct VariationalParams {
  Eigen::VectorXd beta_mean;
  Eigen::VectorXd beta_rawscale;
  double sigma_mean = 0.0;  // location of log(sigma)
  double sigma_rawscale = 0.0;
  Eigen::VectorXd delta_logit;
  Eigen::VectorXd alpha_mean;
  Eigen::VectorXd alpha_rawscale;

  [[nodiscard]] int num_samples() const { return static_cast<int>(beta_mean.size()); }
  [[nodiscard]] int num_channels() const { return static_cast<int>(alpha_mean.size()); }
  [[nodiscard]] Eigen::Index flat_size() const { return flat_size(num_channels(), num_samples()); }

  static Eigen::Index flat_size(int num_channels, int num_samples) {
    return 2 * static_cast<Eigen::Index>(num_samples) + 2 + 3 * static_cast<Eigen::Index>(num_channels);
  }

  [[nodiscard]] Eigen::VectorXd to_flat() const;
  static VariationalParams from_flat(const Eigen::VectorXd& flat, int num_channels, int num_samples);
  static VariationalParams zeros(int num_channels, int num_samples);
};

struct GradConfig {
  int mc_samples = 10;
  double relax_temperature = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Standard noise behind one reparameterized draw, in generation order.
struct SurrogateNoise {
  Eigen::VectorXd beta;   // N(0,1), M
  double sigma = 0.0;     // N(0,1)
  Eigen::VectorXd delta;  // standard logistic, E
  Eigen::VectorXd alpha;  // N(0,1), E

  static SurrogateNoise draw(Rng& rng, int num_channels, int num_samples);
};

struct SurrogateDraw {
  ModelParams theta;
  /// Logit of the relaxed inclusion value; exact draws store +/-inf.
  Eigen::VectorXd delta_logit_sample;
  double log_q = 0.0;
};

/// Transforms standard noise into a draw of q. With `relaxed`, delta is a
/// binary-concrete sample sigmoid((logit + L) / temperature) and log_q uses the
/// logistic density of its logit; otherwise delta = 1[logit + L > 0] and log_q
/// uses the Bernoulli mass.
SurrogateDraw transform_noise(const VariationalParams& xi, const SurrogateNoise& noise, bool relaxed,
                              double temperature);

SurrogateDraw sample_surrogate(const VariationalParams& xi, Rng& rng, bool relaxed, double temperature);

struct ElboGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;  // flat layout
};

/// Monte Carlo ELBO over a fixed labeled dataset. Draw l uses the substream
/// derive_seed(cfg.seed, l), so results do not depend on evaluation order.
///
/// The per-draw integrand is log pi(theta, z | X) - log q(theta) with the
/// inclusion indicators relaxed; the Bernoulli prior on delta is replaced by
/// the binary-concrete prior of matching temperature so the integrand stays a
/// ratio of densities on the same space.
class ElboObjective {
 public:
  ElboObjective(const Dataset& data, Hyperparams hyper);

  [[nodiscard]] const DesignMatrix& design() const { return design_; }
  [[nodiscard]] const Hyperparams& hyper() const { return hyper_; }

  [[nodiscard]] double value(const VariationalParams& xi, const GradConfig& cfg) const;
  /// Integrand value of every draw (their mean is value()).
  [[nodiscard]] Eigen::VectorXd draw_values(const VariationalParams& xi, const GradConfig& cfg) const;
  [[nodiscard]] ElboGradient value_and_gradient(const VariationalParams& xi, const GradConfig& cfg) const;

 private:
  Eigen::VectorXd evaluate(const VariationalParams& xi, const GradConfig& cfg, Eigen::VectorXd* gradient) const;

  DesignMatrix design_;
  Hyperparams hyper_;
};

double elbo_estimate(const VariationalParams& xi, const Dataset& data, const Hyperparams& hyper, const GradConfig& cfg);
Eigen::VectorXd elbo_gradient(const VariationalParams& xi, const Dataset& data, const Hyperparams& hyper,
                              const GradConfig& cfg);

struct GradientCheck {
  double max_relative_error = 0.0;
  /// Per flat coordinate; NaN for excluded coordinates.
  Eigen::VectorXd relative_errors;
  /// Coordinates whose finite-difference stencil moves some draw across a
  /// soft-threshold kink. They are reported, not scored.
  std::vector<Eigen::Index> excluded;
};

/// Central finite differences of the fixed-seed ELBO against the analytic
/// gradient; error per coordinate is |a - b| / max(1, |a|, |b|).
GradientCheck check_gradient(const VariationalParams& xi, const Dataset& data, const Hyperparams& hyper,
                             const GradConfig& cfg, double eps);

}  // namespace glass
