#include "glass/summary.hpp"

#include "glass/error.hpp"

#include <algorithm>
#include <string>

namespace glass {

namespace {
void require_draws(const PosteriorDraws& draws) {
  if (draws.size() < kMinSummaryDraws) {
    throw Error(ErrorCode::TooFewDraws,
                "need at least " + std::to_string(kMinSummaryDraws) + " draws, got " + std::to_string(draws.size()));
  }
}
}  // namespace

ColumnQuantiles column_quantiles(const Eigen::MatrixXd& samples) {
  ColumnQuantiles q;
  q.median.resize(samples.cols());
  q.lower.resize(samples.cols());
  q.upper.resize(samples.cols());
  std::vector<double> column(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    for (Eigen::Index r = 0; r < samples.rows(); ++r) column[static_cast<std::size_t>(r)] = samples(r, c);
    std::sort(column.begin(), column.end());
    q.median[c] = quantile_sorted(column, 0.5);
    q.lower[c] = quantile_sorted(column, 0.025);
    q.upper[c] = quantile_sorted(column, 0.975);
  }
  return q;
}

EffectSummary summarize_effects(const PosteriorDraws& draws, const Hyperparams& hyper) {
  require_draws(draws);
  const Eigen::MatrixXd effects = draws.beta_tilde(hyper.tau);
  ColumnQuantiles q = column_quantiles(effects);
  EffectSummary out;
  out.median = std::move(q.median);
  out.lower = std::move(q.lower);
  out.upper = std::move(q.upper);
  out.prob_nonzero = (effects.array() != 0.0).cast<double>().colwise().mean().transpose();
  return out;
}

ChannelSummary summarize_channels(const PosteriorDraws& draws) {
  require_draws(draws);
  ChannelSummary out;
  out.selection_prob = draws.delta.colwise().mean().transpose();
  const Eigen::VectorXd medians = column_quantiles(draws.alpha()).median;
  const double norm = medians.norm();
  out.weight = norm > 0.0 ? Eigen::VectorXd(medians / norm) : medians;
  out.important.resize(static_cast<std::size_t>(out.selection_prob.size()));
  for (Eigen::Index e = 0; e < out.selection_prob.size(); ++e) {
    out.important[static_cast<std::size_t>(e)] = out.selection_prob[e] > kImportantChannelProb;
  }
  return out;
}

}  // namespace glass
