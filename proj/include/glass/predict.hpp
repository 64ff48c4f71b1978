#pragma once

#include "glass/vi.hpp"

#include <span>
#include <string>
#include <vector>

namespace glass {

struct PredictiveDist {
  Simplex6 probs{};
  double ess = 0.0;
  HalfType orientation = HalfType::Row;
  /// True when one draw carries more than 99.9% of the importance mass.
  bool degenerate = false;
};

enum class Weighting { Importance, Uniform };

/// Self-normalized importance weights w_g ~ exp(log_joint_g - log_q_g).
struct ImportanceWeights {
  Eigen::VectorXd weights;  // sums to 1
  double ess = 0.0;
  bool degenerate = false;
};

ImportanceWeights importance_weights(std::span<const double> log_joint, std::span<const double> log_q,
                                     Weighting weighting = Weighting::Importance);

PredictiveDist predictive_distribution(const PosteriorDraws& draws, std::span<const double> log_joint,
                                       const HalfSequence& half, const Hyperparams& hyper,
                                       Weighting weighting = Weighting::Importance);

/// Predictive distributions for every half-sequence of `data`, using the log
/// joints cached in `draws`.
std::vector<PredictiveDist> predict_dataset(const PosteriorDraws& draws, const Dataset& data, const Hyperparams& hyper,
                                            Weighting weighting = Weighting::Importance);

/// Normalized elementwise product; each input entry is floored at 1e-300.
Simplex6 fuse_halfsequences(std::span<const PredictiveDist> dists);

class Keyboard {
 public:
  Keyboard();
  explicit Keyboard(std::string symbols);

  [[nodiscard]] char at(int row, int col) const;  // 1-based
  [[nodiscard]] std::pair<int, int> locate(char symbol) const;
  [[nodiscard]] const std::string& symbols() const { return symbols_; }

 private:
  std::string symbols_;
};

struct DecodedCharacter {
  char symbol = '?';
  int row = 0;  // 1-based
  int col = 0;
};

/// Index of the largest entry (1-based); ties go to the smallest index.
int argmax(const Simplex6& probs);

DecodedCharacter decode_character(const Simplex6& row_dist, const Simplex6& col_dist, const Keyboard& kb);

}  // namespace glass
