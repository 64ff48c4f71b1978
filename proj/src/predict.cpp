#include "glass/predict.hpp"

#include "glass/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace glass {

namespace {
constexpr double kDegenerateMass = 0.999;
constexpr double kProbabilityFloor = 1e-300;
constexpr int kDrawChunk = 128;
}  // namespace

ImportanceWeights importance_weights(std::span<const double> log_joint, std::span<const double> log_q,
                                     Weighting weighting) {
  if (log_joint.size() != log_q.size()) {
    throw Error(ErrorCode::DimensionMismatch, "log_joint and log_q have different lengths");
  }
  if (log_q.empty()) throw Error(ErrorCode::InvalidArgument, "no posterior draws");
  const auto count = static_cast<Eigen::Index>(log_q.size());
  ImportanceWeights out;
  out.weights.resize(count);
  if (weighting == Weighting::Uniform) {
    out.weights.setConstant(1.0 / static_cast<double>(count));
  } else {
    Eigen::VectorXd log_w(count);
    for (Eigen::Index g = 0; g < count; ++g) log_w[g] = log_joint[g] - log_q[g];
    const double hi = log_w.maxCoeff();
    if (!std::isfinite(hi)) throw Error(ErrorCode::NonFinite, "importance log-weights are not finite");
    out.weights = (log_w.array() - hi).exp();
    out.weights /= out.weights.sum();
  }
  out.ess = 1.0 / out.weights.squaredNorm();
  out.degenerate = out.weights.maxCoeff() > kDegenerateMass;
  return out;
}

PredictiveDist predictive_distribution(const PosteriorDraws& draws, std::span<const double> log_joint,
                                       const HalfSequence& half, const Hyperparams& hyper, Weighting weighting) {
  if (draws.size() == 0) throw Error(ErrorCode::InvalidArgument, "no posterior draws");
  if (half.num_channels() != draws.num_channels() || half.num_samples() != draws.num_samples()) {
    throw Error(ErrorCode::DimensionMismatch, "half-sequence does not match the draw dimensions");
  }
  const std::span<const double> log_q(draws.log_q.data(), static_cast<std::size_t>(draws.log_q.size()));
  const ImportanceWeights w = importance_weights(log_joint, log_q, weighting);
  PredictiveDist out;
  out.orientation = half.key.half_type;
  out.ess = w.ess;
  out.degenerate = w.degenerate;
  for (int g = 0; g < draws.size(); ++g) {
    if (w.weights[g] == 0.0) continue;
    const Simplex6 p = target_probabilities(half, draws.draw(g), hyper);
    for (int j = 0; j < kStimuliPerHalf; ++j) out.probs[j] += w.weights[g] * p[j];
  }
  const double total = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
  for (double& p : out.probs) p /= total;
  return out;
}

std::vector<PredictiveDist> predict_dataset(const PosteriorDraws& draws, const Dataset& data, const Hyperparams& hyper,
                                            Weighting weighting) {
  if (data.num_channels != draws.num_channels() || data.num_samples != draws.num_samples()) {
    throw Error(ErrorCode::DimensionMismatch,
                "model is " + std::to_string(draws.num_channels()) + "x" + std::to_string(draws.num_samples()) +
                    " (E x M), data is " + std::to_string(data.num_channels) + "x" + std::to_string(data.num_samples));
  }
  if (weighting == Weighting::Importance && !draws.log_joint) {
    throw Error(ErrorCode::InvalidArgument, "importance weighting needs cached training log joints");
  }
  const int total = draws.size();
  std::vector<double> zeros;
  std::span<const double> log_joint;
  if (draws.log_joint) {
    log_joint = std::span<const double>(draws.log_joint->data(), static_cast<std::size_t>(total));
  } else {
    zeros.assign(static_cast<std::size_t>(total), 0.0);
    log_joint = zeros;
  }
  const ImportanceWeights w = importance_weights(
      log_joint, std::span<const double>(draws.log_q.data(), static_cast<std::size_t>(total)), weighting);

  std::vector<PredictiveDist> out(data.halves.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].orientation = data.halves[i].key.half_type;
    out[i].ess = w.ess;
    out[i].degenerate = w.degenerate;
  }
  if (data.halves.empty()) return out;

  std::vector<int> active;
  for (int g = 0; g < total; ++g) {
    if (w.weights[g] > 0.0) active.push_back(g);
  }
  const DesignMatrix design(data);
  for (std::size_t start = 0; start < active.size(); start += kDrawChunk) {
    const auto count = static_cast<int>(std::min<std::size_t>(kDrawChunk, active.size() - start));
    Eigen::MatrixXd beta(draws.num_samples(), count);
    Eigen::MatrixXd weights(draws.num_channels(), count);
    for (int k = 0; k < count; ++k) {
      const ModelParams theta = draws.draw(active[start + k]);
      beta.col(k) = theta.beta_tilde(hyper.tau);
      weights.col(k) = theta.channel_weights();
    }
    const Eigen::MatrixXd eta = design.linear_predictors(beta, weights);
    for (int k = 0; k < count; ++k) {
      const double wg = w.weights[active[start + k]];
      for (std::size_t i = 0; i < out.size(); ++i) {
        Simplex6 block{};
        for (int j = 0; j < kStimuliPerHalf; ++j) block[j] = eta(static_cast<Eigen::Index>(i) * kStimuliPerHalf + j, k);
        const Simplex6 p = softmax(block);
        for (int j = 0; j < kStimuliPerHalf; ++j) out[i].probs[j] += wg * p[j];
      }
    }
  }
  for (auto& dist : out) {
    const double total_mass = std::accumulate(dist.probs.begin(), dist.probs.end(), 0.0);
    for (double& p : dist.probs) p /= total_mass;
  }
  return out;
}

Simplex6 fuse_halfsequences(std::span<const PredictiveDist> dists) {
  if (dists.empty()) throw Error(ErrorCode::EmptyList, "nothing to fuse");
  const HalfType orientation = dists.front().orientation;
  // Work in log space so that long lists of small probabilities do not underflow.
  Simplex6 log_prod{};
  for (const auto& d : dists) {
    if (d.orientation != orientation) throw Error(ErrorCode::MixedOrientation, "cannot fuse rows with columns");
    for (int j = 0; j < kStimuliPerHalf; ++j) log_prod[j] += std::log(std::max(d.probs[j], kProbabilityFloor));
  }
  return softmax(log_prod);
}

Keyboard::Keyboard() : Keyboard("ABCDEFGHIJKLMNOPQRSTUVWXYZ123456789_") {}

Keyboard::Keyboard(std::string symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() != 36 || std::set<char>(symbols_.begin(), symbols_.end()).size() != 36) {
    throw Error(ErrorCode::InvalidArgument, "keyboard needs 36 distinct symbols");
  }
}

char Keyboard::at(int row, int col) const {
  if (row < 1 || row > 6 || col < 1 || col > 6) throw Error(ErrorCode::InvalidArgument, "keyboard cell out of range");
  return symbols_[static_cast<std::size_t>((row - 1) * 6 + (col - 1))];
}

std::pair<int, int> Keyboard::locate(char symbol) const {
  const auto pos = symbols_.find(symbol);
  if (pos == std::string::npos) throw Error(ErrorCode::InvalidArgument, std::string("symbol not on keyboard: ") + symbol);
  return {static_cast<int>(pos / 6) + 1, static_cast<int>(pos % 6) + 1};
}

int argmax(const Simplex6& probs) {
  int best = 0;
  for (int j = 1; j < kStimuliPerHalf; ++j) {
    if (probs[j] > probs[best]) best = j;
  }
  return best + 1;
}

DecodedCharacter decode_character(const Simplex6& row_dist, const Simplex6& col_dist, const Keyboard& kb) {
  DecodedCharacter out;
  out.row = argmax(row_dist);
  out.col = argmax(col_dist);
  out.symbol = kb.at(out.row, out.col);
  return out;
}

}  // namespace glass
