#pragma once

#include "glass/vi.hpp"

#include <string>
#include <vector>

namespace glass {

inline constexpr int kMinSummaryDraws = 40;
inline constexpr double kImportantChannelProb = 0.9;

/// Per time point summaries of beta_tilde = S_tau(beta*).
struct EffectSummary {
  Eigen::VectorXd median;
  Eigen::VectorXd lower;  // 2.5%
  Eigen::VectorXd upper;  // 97.5%
  Eigen::VectorXd prob_nonzero;
};

struct ChannelSummary {
  Eigen::VectorXd selection_prob;
  /// Per-coordinate posterior median of alpha, L2-normalized.
  Eigen::VectorXd weight;
  std::vector<bool> important;
};

/// Quantiles use linear interpolation between order statistics. No sign
/// alignment is applied across draws: (alpha, beta_tilde) and (-alpha, -beta_tilde)
/// give identical likelihoods and both appear in raw summaries.
EffectSummary summarize_effects(const PosteriorDraws& draws, const Hyperparams& hyper);
ChannelSummary summarize_channels(const PosteriorDraws& draws);

/// Per-column median, 2.5% and 97.5% quantiles of a draws-by-coordinate matrix.
struct ColumnQuantiles {
  Eigen::VectorXd median, lower, upper;
};
ColumnQuantiles column_quantiles(const Eigen::MatrixXd& samples);

}  // namespace glass
