#pragma once

#include "glass/predict.hpp"
#include "glass/vi.hpp"

#include <cstdint>
#include <string>

namespace glass {

/// Background EEG with AR(1) temporal and compound-symmetry spatial structure
/// (covariance noise_var * [(1 - c) I + c 11^T] (x) AR(1)(rho)), plus a target
/// or non-target ERP template added to every epoch.
struct GenerativeConfig {
  int num_channels = 3;
  int num_samples = 25;
  double sample_rate = 32.0;
  int characters = 19;
  int sequences = 5;
  Eigen::VectorXd erp_target;     // M; empty -> default_target_erp
  Eigen::VectorXd erp_nontarget;  // M; empty -> zeros
  Eigen::VectorXd channel_gain;   // E; empty -> ones
  double ar_coef = 0.5;
  double noise_var = 20.0;  // marginal variance
  double spatial_corr = 0.5;
  /// Characters to type; empty draws them uniformly from the keyboard.
  std::string text;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class NoiseLevel { Moderate, High };

/// Low-rate three-channel generative preset; noise_var 20 (moderate) or 40 (high).
GenerativeConfig generative_preset(NoiseLevel level);

/// Template-sized generative preset: 16 channels at 256 Hz, M = 205, 19 x 15.
GenerativeConfig standard_template_config();

/// Positive bump at 300 ms (sd 60 ms, amplitude 5) plus one at 100 ms (sd 25 ms, amplitude 2).
Eigen::VectorXd default_target_erp(int num_samples, double sample_rate);

struct GenerativeResult {
  Dataset data;
  std::string text;  // typed characters, one per character index
};

GenerativeResult simulate_generative(const GenerativeConfig& cfg, const Keyboard& kb = Keyboard());

/// Known model parameters together with the threshold that defines beta_tilde.
struct ModelTruth {
  ModelParams theta;
  Hyperparams hyper;
  [[nodiscard]] Eigen::VectorXd beta_tilde() const { return theta.beta_tilde(hyper.tau); }
};

/// Sparse ground truth: four signal channels (Pz, PO7, Oz, PO8 on the 16-channel
/// montage; otherwise the last quarter of the channels), smooth effect bumps near
/// 100, 260 and 460 ms, scaled by `effect_scale`.
ModelTruth reference_truth(int num_channels, int num_samples, double sample_rate, double effect_scale = 1.0);

/// Relabels a labeled template so its targets follow the model: per half-sequence
/// a stimulus k is drawn from the model probabilities and its epoch is exchanged
/// with the template target's epoch, then the non-target epochs are shuffled.
/// Labels (and so per-character consistency) are kept from the template.
Dataset simulate_from_model(const ModelTruth& truth, const Dataset& template_data, std::uint64_t seed);

struct CorruptionConfig {
  bool apply_drift = false;
  double drift_prob = 0.10;
  bool apply_noise = false;
  double noisy_ar_coef = 0.5;
  double noisy_var = 1.0;  // innovation variance

  void validate() const;
};

/// Attention drift swaps the target epoch with a random non-target epoch while
/// keeping the label; noisy EEG adds an AR(1) series to every channel of every epoch.
Dataset apply_corruptions(const Dataset& data, const CorruptionConfig& cfg, std::uint64_t seed);

struct RecoveryMetrics {
  double rmse = 0.0;  // ||b_true - b_est||^2 / ||b_true||^2
  double error_angle_deg = 0.0;
  double mean_delta_signal = 0.0;
  double mean_delta_noise = 0.0;
};

/// Compares posterior medians against the truth. The angle uses |<alpha, alpha_hat>|
/// because (alpha, beta_tilde) and (-alpha, -beta_tilde) are indistinguishable; for
/// the same reason the effect error is taken after flipping beta_hat whenever
/// <alpha, alpha_hat> < 0.
RecoveryMetrics recovery_metrics(const ModelTruth& truth, const PosteriorDraws& draws, const Hyperparams& fit_hyper);

/// Unbiased integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

}  // namespace glass
