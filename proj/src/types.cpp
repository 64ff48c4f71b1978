#include "glass/types.hpp"

#include "glass/error.hpp"
#include "glass/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace glass {

void TimingConfig::validate() const {
  if (!(flash_ms > 0.0 && isi_ms > 0.0 && pause_s > 0.0 && window_ms > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "timing values must be strictly positive");
  }
}

bool Dataset::labeled() const {
  return std::all_of(halves.begin(), halves.end(), [](const HalfSequence& h) { return h.target.has_value(); });
}

int Dataset::num_characters() const {
  int c = 0;
  for (const auto& h : halves) c = std::max(c, h.key.character);
  return c;
}

int Dataset::num_sequences() const {
  int s = 0;
  for (const auto& h : halves) s = std::max(s, h.key.sequence);
  return s;
}

void Dataset::validate() const {
  if (num_channels < 1 || num_samples < 1) {
    throw Error(ErrorCode::DimensionMismatch, "dataset needs E >= 1 and M >= 1");
  }
  if (!(sample_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample_rate must be positive");
  if (!channel_names.empty() && static_cast<int>(channel_names.size()) != num_channels) {
    throw Error(ErrorCode::DimensionMismatch, "channel name count differs from E");
  }
  for (const auto& h : halves) {
    for (const auto& epoch : h.epochs) {
      if (epoch.rows() != num_channels || epoch.cols() != num_samples) {
        throw Error(ErrorCode::DimensionMismatch,
                    "epoch is " + std::to_string(epoch.rows()) + "x" + std::to_string(epoch.cols()) +
                        ", dataset is " + std::to_string(num_channels) + "x" + std::to_string(num_samples));
      }
      if (!epoch.allFinite()) throw Error(ErrorCode::NonFinite, "epoch contains non-finite samples");
    }
    if (h.target && (*h.target < 1 || *h.target > kStimuliPerHalf)) {
      throw Error(ErrorCode::InvalidArgument, "target must lie in 1..6");
    }
  }
}

Dataset Dataset::first_sequences(int max_sequence) const {
  Dataset out = *this;
  out.halves.clear();
  for (const auto& h : halves) {
    if (h.key.sequence <= max_sequence) out.halves.push_back(h);
  }
  return out;
}

std::vector<std::string> default_channel_names(int num_channels) {
  static const std::vector<std::string> kSixteen = {"F3", "Fz", "F4", "T7", "C3", "Cz", "C4", "T8",
                                                    "CP3", "CP4", "P3", "Pz", "P4", "PO7", "Oz", "PO8"};
  if (num_channels == static_cast<int>(kSixteen.size())) return kSixteen;
  std::vector<std::string> names;
  for (int e = 0; e < num_channels; ++e) names.push_back("ch" + std::to_string(e + 1));
  return names;
}

void Hyperparams::validate() const {
  if (!(tau >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be >= 0");
  if (!(cauchy_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "cauchy_scale must be > 0");
  if (!(delta_prior > 0.0 && delta_prior < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "delta_prior must lie in (0, 1)");
  }
}

Eigen::VectorXd ModelParams::beta_tilde(double tau) const { return soft_threshold(beta_raw, tau); }

Eigen::VectorXd ModelParams::alpha() const { return project_to_sphere(alpha_raw); }

Eigen::VectorXd ModelParams::channel_weights() const { return delta.cwiseProduct(alpha()); }

Eigen::MatrixXd ModelParams::coefficients(double tau) const {
  return channel_weights() * beta_tilde(tau).transpose();
}

}  // namespace glass
