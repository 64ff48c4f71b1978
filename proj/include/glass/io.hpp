#pragma once

#include "glass/simulate.hpp"
#include "glass/vi.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace glass {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;

/// Binary dataset container:
///   "GLASSDAT" | uint32 version | uint64 header bytes | JSON header |
///   per half-sequence: int32 c, s, u, z (0 when unlabeled), then six E x M
///   blocks of little-endian float64 in stimulus order, each stored channel by
///   channel (row-major).
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// Plain-text table, one row per channel and stimulus:
///   c,s,u,j,e,target,v1..vM
/// `target` is 1 on the target stimulus row, 0 otherwise and empty when
/// unlabeled. Leading "# key=value" lines carry sample_rate and channel names.
void write_dataset_csv(const Dataset& data, std::ostream& out);
Dataset read_dataset_csv(std::istream& in);

/// Chooses the reader from the file contents (binary magic or text).
Dataset load_dataset(const std::filesystem::path& path);

struct Checkpoint {
  VariationalParams xi;
  Hyperparams hyper;
  FitConfig fit;
  std::uint64_t seed = 0;
  double shrinkage_ratio = 0.5;
  bool tau_calibrated = true;
  std::vector<std::string> channel_names;
  double sample_rate = 256.0;
  /// Posterior draws are regenerated from (xi, num_draws, draws_seed); the
  /// cached training log joints make prediction independent of training data.
  int num_draws = 0;
  std::uint64_t draws_seed = 0;
  std::optional<Eigen::VectorXd> log_joint;

  [[nodiscard]] int num_channels() const { return xi.num_channels(); }
  [[nodiscard]] int num_samples() const { return xi.num_samples(); }
  [[nodiscard]] PosteriorDraws draws() const;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Ground truth record written next to simulated data.
struct TruthRecord {
  std::string kind;  // "generative" or "model"
  std::uint64_t seed = 0;
  std::string text;
  std::optional<ModelTruth> model;
};

void write_truth(const TruthRecord& truth, const std::filesystem::path& path);
TruthRecord read_truth(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace glass
