#pragma once

#include "glass/predict.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace glass {

/// Decoded symbol of one character after fusing its first n = 1..S' sequences.
struct CharacterDecoding {
  int group = 0;  // sentence or replicate
  int character = 1;
  std::vector<char> decoded_by_n;
  char truth = '?';
};

struct AccuracyCurve {
  std::vector<double> mean;  // index n - 1
  std::vector<double> sd;    // across groups; 0 with a single group
  std::vector<int> counts;   // characters scored at each n
  int groups = 0;

  [[nodiscard]] int max_sequences() const { return static_cast<int>(mean.size()); }
};

/// Fraction decoded correctly per n, averaged over groups.
AccuracyCurve accuracy_by_sequences(std::span<const CharacterDecoding> decodings);

/// Decodes every character of `data` with the first n sequences, n = 1..max.
/// `dists` is aligned with data.halves. Truth symbols come from the labels
/// when present.
std::vector<CharacterDecoding> decode_by_sequences(const Dataset& data, std::span<const PredictiveDist> dists,
                                                   const Keyboard& kb, int group = 0);

/// Seconds needed to select one character with n sequences.
double seconds_per_character(int n_seq, const TimingConfig& timing);

/// Bits per second: max(0, 2P - 1) * log2(n_keys - 1) / T_char.
double bci_utility(double accuracy, int n_seq, const TimingConfig& timing, int n_keys = 36);

struct UtilityPeak {
  double utility = 0.0;
  int n_seq = 0;
};
UtilityPeak max_utility(const AccuracyCurve& curve, const TimingConfig& timing, int n_keys = 36);

/// Smallest n with mean accuracy >= 0.8.
std::optional<int> n_seq_80(const AccuracyCurve& curve);

/// Columns n_seq,mean_acc,sd,utility.
void write_metrics_csv(const AccuracyCurve& curve, const TimingConfig& timing, std::ostream& out);

/// Per-stimulus classifier score from an external pipeline.
struct StimulusScore {
  int character = 1;
  int sequence = 1;
  HalfType half_type = HalfType::Row;
  int stimulus = 1;
  double score = 0.0;
};

/// CSV with header c,s,u,j,score.
std::vector<StimulusScore> read_scores_csv(std::istream& in);

/// Averages scores over the first n sequences and takes the argmax per
/// orientation. `truth` maps character index to its symbol; missing entries
/// decode with truth '?'.
std::vector<CharacterDecoding> decode_scores(std::span<const StimulusScore> scores, const Keyboard& kb,
                                             const std::vector<char>& truth, int group = 0);

}  // namespace glass
