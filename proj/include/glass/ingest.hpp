#pragma once

#include "glass/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace glass {

struct StimulusEvent {
  std::int64_t sample = 0;
  int character = 1;
  int sequence = 1;
  HalfType half_type = HalfType::Row;
  int stimulus = 1;  // row/column number j, 1..6
  std::optional<bool> is_target;
};

/// Continuous E x T recording with stimulus onsets.
struct ContinuousRecording {
  Eigen::MatrixXd samples;
  double sample_rate = 256.0;
  std::vector<std::string> channel_names;
  std::vector<StimulusEvent> events;
};

/// Whether the sample at exactly window_ms belongs to the epoch.
enum class EpochEndpoint { Inclusive, Exclusive };

/// floor(window_ms / 1000 * rate) + 1 samples (Inclusive) or without the +1 (Exclusive).
int epoch_length(double window_ms, double sample_rate, EpochEndpoint endpoint = EpochEndpoint::Inclusive);

Dataset extract_epochs(const ContinuousRecording& rec, double window_ms = 800.0,
                       EpochEndpoint endpoint = EpochEndpoint::Inclusive, const TimingConfig& timing = {});

struct FilterSpec {
  double low_hz = 0.5;
  double high_hz = 15.0;
  int order = 4;
  bool zero_phase = true;
};

/// Direct-form-II-transposed second-order section; a0 is normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth bandpass of the given prototype order (2 * order poles),
/// designed by the bilinear transform with pre-warped edges; unity gain at the
/// geometric centre of the band.
std::vector<Biquad> design_butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate);

/// Causal filtering through the cascade with steady-state initial conditions
/// matched to the first sample.
Eigen::VectorXd sos_filter(const std::vector<Biquad>& sections, const Eigen::VectorXd& x);

/// Forward-backward filtering with odd-reflection padding.
Eigen::VectorXd sos_filtfilt(const std::vector<Biquad>& sections, const Eigen::VectorXd& x);

/// Magnitude response at frequency f (Hz).
double frequency_response(const std::vector<Biquad>& sections, double f_hz, double sample_rate);

ContinuousRecording bandpass(const ContinuousRecording& rec, const FilterSpec& spec);

/// Keeps every k-th sample, k = source / target. A non-integral ratio is
/// rejected unless `allow_nearest`, which keeps the nearest source index.
ContinuousRecording downsample(const ContinuousRecording& rec, double target_hz = 32.0, bool allow_nearest = false);
Dataset downsample(const Dataset& data, double target_hz = 32.0, bool allow_nearest = false);

struct IdentifiabilityReport {
  int rank = 0;
  bool full_column_rank = false;
  long rows = 0;  // 5N
  long cols = 0;  // E * M
  std::string message;
};

/// Numerical rank (singular values above 1e-8 times the largest) of the stacked
/// contrasts vec(X_ij - X_i6), j = 1..5.
IdentifiabilityReport identifiability_check(const Dataset& data);

}  // namespace glass
