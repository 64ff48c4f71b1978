#pragma once

#include "glass/types.hpp"

#include <array>
#include <vector>

namespace glass {

using Simplex6 = std::array<double, kStimuliPerHalf>;

inline constexpr double kZeroVectorEpsilon = 1e-12;

double soft_threshold(double x, double tau);
/// Derivative of soft_threshold in x; 0 at the kink |x| == tau.
double soft_threshold_derivative(double x, double tau);

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau);

/// alpha_raw / ||alpha_raw||; throws ZeroVector below kZeroVectorEpsilon.
Eigen::VectorXd project_to_sphere(const Eigen::VectorXd& alpha_raw);

/// x_tilde_j = sum_e delta_e alpha_e x_je for the six epochs.
std::array<Eigen::VectorXd, kStimuliPerHalf> latent_channel_signal(const HalfSequence& half,
                                                                    const Eigen::VectorXd& delta,
                                                                    const Eigen::VectorXd& alpha);

/// Linear predictors eta_j = x_tilde_j^T beta_tilde.
Simplex6 linear_predictors(const HalfSequence& half, const ModelParams& theta, const Hyperparams& hyper);

Simplex6 softmax(const Simplex6& eta);

Simplex6 target_probabilities(const HalfSequence& half, const ModelParams& theta, const Hyperparams& hyper);

double log_prior(const ModelParams& theta, const Hyperparams& hyper);
double log_likelihood(const Dataset& data, const ModelParams& theta, const Hyperparams& hyper);
double log_joint(const Dataset& data, const ModelParams& theta, const Hyperparams& hyper);

/// Half-Cauchy(A) log density at sigma > 0.
double half_cauchy_log_density(double sigma, double scale);

/// Dataset flattened for batched evaluation: row (i * 6 + j) * E + e holds
/// x_ije as a length-M row, so that for a stack of coefficient columns the
/// per-stimulus channel scores come from a single matrix product.
class DesignMatrix {
 public:
  explicit DesignMatrix(const Dataset& data);

  [[nodiscard]] int num_halves() const { return num_halves_; }
  [[nodiscard]] int num_channels() const { return num_channels_; }
  [[nodiscard]] int num_samples() const { return num_samples_; }
  [[nodiscard]] const Eigen::MatrixXd& rows() const { return rows_; }
  /// 0-based targets; -1 when unlabeled.
  [[nodiscard]] const std::vector<int>& targets() const { return targets_; }

  /// Linear predictors for a batch of parameter columns: beta_tilde is M x L,
  /// weights is E x L; result is 6N x L with row i * 6 + j.
  [[nodiscard]] Eigen::MatrixXd linear_predictors(const Eigen::MatrixXd& beta_tilde,
                                                  const Eigen::MatrixXd& weights) const;

  /// Per-column log-likelihood of the labels.
  [[nodiscard]] Eigen::VectorXd log_likelihoods(const Eigen::MatrixXd& beta_tilde,
                                                const Eigen::MatrixXd& weights) const;

 private:
  int num_halves_ = 0;
  int num_channels_ = 0;
  int num_samples_ = 0;
  Eigen::MatrixXd rows_;
  std::vector<int> targets_;
};

}  // namespace glass
