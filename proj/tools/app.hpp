#pragma once

#include "glass/eval.hpp"
#include "glass/ingest.hpp"
#include "glass/io.hpp"
#include "glass/simulate.hpp"
#include "glass/summary.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace glass::app {

/// Bad configuration or command line; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Generator { Generative, Model };

struct SimulateSection {
  Generator generator = Generator::Generative;
  GenerativeConfig train;
  int test_characters = 19;
  int test_sequences = 5;
  double erp_gain = 1.0;
  double effect_scale = 1.0;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string preset;
  SimulateSection simulate;
  CorruptionConfig corruption;
  Hyperparams hyper;
  /// Threshold given directly; otherwise calibrated from a tau = 0 baseline.
  std::optional<double> tau;
  std::vector<double> shrinkage_ratios{0.5};
  FitConfig fit;
  /// Keep only the first k sequences per character for training; 0 keeps all.
  int less_training = 0;
  int draws = 2000;
  Weighting weighting = Weighting::Importance;
  int max_sequences = 0;
  TimingConfig timing;
  int threads = 1;

  void validate() const;
};

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
RunConfig preset_config(std::string_view name);

/// Overlays a YAML document on `base`. Unknown keys and ill-typed values raise
/// ConfigError with "<source>:<line>: ..." messages.
RunConfig parse_config(const std::string& yaml_text, const std::string& source, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
/// Every field, defaults included, in the same schema parse_config accepts.
std::string emit_config(const RunConfig& cfg);

struct SimulationOutput {
  Dataset train;
  Dataset test;
  TruthRecord truth;
};

SimulationOutput run_simulation(const RunConfig& cfg);

struct TrainedModel {
  Checkpoint checkpoint;
  std::vector<TracePoint> trace;
};

struct TrainingOutput {
  std::vector<TrainedModel> models;  // one per shrinkage ratio
  std::optional<double> baseline_median;
  IdentifiabilityReport identifiability;
};

/// Optional tau calibration followed by one fit per shrinkage ratio. Each
/// checkpoint caches the log joints of its posterior draws.
TrainingOutput run_training(const Dataset& train, const RunConfig& cfg);

/// Rows of the prediction table: one per character, orientation and n.
struct PredictionRow {
  int character = 1;
  HalfType half_type = HalfType::Row;
  int n_seq = 1;
  Simplex6 probs{};
  double ess = 0.0;
};

struct PredictionOutput {
  std::vector<PredictionRow> rows;
  std::vector<CharacterDecoding> decodings;
  double ess = 0.0;
  bool degenerate = false;
};

PredictionOutput run_prediction(const Checkpoint& model, const Dataset& data, const RunConfig& cfg,
                                const Keyboard& kb = Keyboard());

void write_predictions_csv(const PredictionOutput& pred, std::ostream& out);
void write_decoded_csv(std::span<const CharacterDecoding> decodings, std::ostream& out);
void write_trace_csv(std::span<const TracePoint> trace, std::ostream& out);
void write_effects_csv(const Checkpoint& model, const EffectSummary& effects, std::ostream& out);
void write_channels_csv(const Checkpoint& model, const ChannelSummary& channels, std::ostream& out);
/// Long-format posterior median of the coefficient matrix for heat maps.
void write_coefficients_csv(const Checkpoint& model, const PosteriorDraws& draws, std::ostream& out);

struct SensitivityRow {
  double ratio = 0.0;
  double tau = 0.0;
  AccuracyCurve curve;
  UtilityPeak peak;
  std::optional<int> n80;
};

void write_sensitivity_csv(std::span<const SensitivityRow> rows, std::ostream& out);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace glass::app
