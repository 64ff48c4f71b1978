#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace glass {

/// Stimulus presentation timing of the speller session.
struct TimingConfig {
  double flash_ms = 31.25;
  double isi_ms = 125.0;
  double pause_s = 3.5;
  double window_ms = 800.0;

  void validate() const;
};

enum class HalfType { Row = 1, Column = 2 };

/// Identifies a half-sequence by character, sequence and orientation (all 1-based).
struct HalfSequenceKey {
  int character = 1;
  int sequence = 1;
  HalfType half_type = HalfType::Row;

  friend bool operator==(const HalfSequenceKey&, const HalfSequenceKey&) = default;
};

/// E x M signals following one stimulus; row e is channel e, column m is time t_m.
using Epoch = Eigen::MatrixXd;

inline constexpr int kStimuliPerHalf = 6;

/// Six epochs in row/column order j = 1..6 plus the optional target j.
struct HalfSequence {
  HalfSequenceKey key;
  std::array<Epoch, kStimuliPerHalf> epochs;
  std::optional<int> target;  // 1..6

  [[nodiscard]] int num_channels() const { return static_cast<int>(epochs[0].rows()); }
  [[nodiscard]] int num_samples() const { return static_cast<int>(epochs[0].cols()); }
};

struct Dataset {
  int num_channels = 0;
  int num_samples = 0;
  double sample_rate = 256.0;
  std::vector<std::string> channel_names;
  TimingConfig timing;
  std::vector<HalfSequence> halves;

  [[nodiscard]] std::size_t size() const { return halves.size(); }
  [[nodiscard]] bool empty() const { return halves.empty(); }
  [[nodiscard]] bool labeled() const;
  [[nodiscard]] int num_characters() const;
  [[nodiscard]] int num_sequences() const;

  /// Throws DimensionMismatch / NonFinite / InvalidArgument on a malformed dataset.
  void validate() const;

  /// Keeps only half-sequences with sequence index <= max_sequence.
  [[nodiscard]] Dataset first_sequences(int max_sequence) const;
};

std::vector<std::string> default_channel_names(int num_channels);

struct Hyperparams {
  double tau = 0.0;
  double cauchy_scale = 1.0;
  double delta_prior = 0.5;

  void validate() const;
};

/// One realization of the model parameters. `delta` holds 0/1 for exact draws
/// and values in (0, 1) for relaxed draws used during training.
struct ModelParams {
  Eigen::VectorXd beta_raw;   // M
  double sigma = 1.0;
  Eigen::VectorXd delta;      // E
  Eigen::VectorXd alpha_raw;  // E

  [[nodiscard]] int num_samples() const { return static_cast<int>(beta_raw.size()); }
  [[nodiscard]] int num_channels() const { return static_cast<int>(alpha_raw.size()); }

  [[nodiscard]] Eigen::VectorXd beta_tilde(double tau) const;
  [[nodiscard]] Eigen::VectorXd alpha() const;
  /// delta_e * alpha_e.
  [[nodiscard]] Eigen::VectorXd channel_weights() const;
  /// Rank-one coefficient matrix diag(delta) * alpha * beta_tilde^T (E x M).
  [[nodiscard]] Eigen::MatrixXd coefficients(double tau) const;
};

}  // namespace glass
