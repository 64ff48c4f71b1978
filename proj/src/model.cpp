#include "glass/model.hpp"

#include "glass/error.hpp"
#include "glass/numeric.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace glass {

namespace {

void check_dims(const HalfSequence& half, const ModelParams& theta) {
  if (half.num_channels() != theta.num_channels() || half.num_samples() != theta.num_samples() ||
      theta.delta.size() != theta.alpha_raw.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "half-sequence is " + std::to_string(half.num_channels()) + "x" + std::to_string(half.num_samples()) +
                    ", parameters are " + std::to_string(theta.num_channels()) + "x" +
                    std::to_string(theta.num_samples()));
  }
}

}  // namespace

double soft_threshold(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

double soft_threshold_derivative(double x, double tau) { return std::abs(x) > tau ? 1.0 : 0.0; }

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau) {
  return x.unaryExpr([tau](double v) { return soft_threshold(v, tau); });
}

Eigen::VectorXd project_to_sphere(const Eigen::VectorXd& alpha_raw) {
  const double norm = alpha_raw.norm();
  if (!(norm >= kZeroVectorEpsilon)) {
    throw Error(ErrorCode::ZeroVector, "cannot project a vector with norm below 1e-12");
  }
  return alpha_raw / norm;
}

std::array<Eigen::VectorXd, kStimuliPerHalf> latent_channel_signal(const HalfSequence& half,
                                                                    const Eigen::VectorXd& delta,
                                                                    const Eigen::VectorXd& alpha) {
  if (delta.size() != half.num_channels() || alpha.size() != half.num_channels()) {
    throw Error(ErrorCode::DimensionMismatch, "channel weights do not match E=" + std::to_string(half.num_channels()));
  }
  const Eigen::VectorXd w = delta.cwiseProduct(alpha);
  std::array<Eigen::VectorXd, kStimuliPerHalf> out;
  for (int j = 0; j < kStimuliPerHalf; ++j) {
    if (half.epochs[j].rows() != w.size()) {
      throw Error(ErrorCode::DimensionMismatch, "epoch channel count differs within half-sequence");
    }
    out[j] = half.epochs[j].transpose() * w;
  }
  return out;
}

Simplex6 linear_predictors(const HalfSequence& half, const ModelParams& theta, const Hyperparams& hyper) {
  check_dims(half, theta);
  const auto latent = latent_channel_signal(half, theta.delta, theta.alpha());
  const Eigen::VectorXd beta = theta.beta_tilde(hyper.tau);
  Simplex6 eta{};
  for (int j = 0; j < kStimuliPerHalf; ++j) eta[j] = latent[j].dot(beta);
  return eta;
}

Simplex6 softmax(const Simplex6& eta) {
  const double lse = log_sum_exp(eta);
  Simplex6 p{};
  for (int j = 0; j < kStimuliPerHalf; ++j) p[j] = std::exp(eta[j] - lse);
  return p;
}

Simplex6 target_probabilities(const HalfSequence& half, const ModelParams& theta, const Hyperparams& hyper) {
  const Simplex6 eta = linear_predictors(half, theta, hyper);
  for (double v : eta) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "linear predictor is not finite");
  }
  return softmax(eta);
}

double half_cauchy_log_density(double sigma, double scale) {
  const double r = sigma / scale;
  return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(r * r);
}

double log_prior(const ModelParams& theta, const Hyperparams& hyper) {
  if (!(theta.sigma > 0.0)) throw Error(ErrorCode::InvalidSigma, "sigma must be positive");
  double lp = 0.0;
  double previous = 0.0;
  for (int m = 0; m < theta.beta_raw.size(); ++m) {
    lp += normal_log_density(theta.beta_raw[m], previous, theta.sigma);
    previous = theta.beta_raw[m];
  }
  lp += half_cauchy_log_density(theta.sigma, hyper.cauchy_scale);
  const double log_p = std::log(hyper.delta_prior);
  const double log_not_p = std::log1p(-hyper.delta_prior);
  for (int e = 0; e < theta.delta.size(); ++e) {
    lp += theta.delta[e] * log_p + (1.0 - theta.delta[e]) * log_not_p;
  }
  for (int e = 0; e < theta.alpha_raw.size(); ++e) lp += normal_log_density(theta.alpha_raw[e], 0.0, 1.0);
  return lp;
}

double log_likelihood(const Dataset& data, const ModelParams& theta, const Hyperparams& hyper) {
  double ll = 0.0;
  for (const auto& half : data.halves) {
    if (!half.target) throw Error(ErrorCode::MissingLabel, "half-sequence without a target label");
    const Simplex6 eta = linear_predictors(half, theta, hyper);
    for (double v : eta) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "linear predictor is not finite");
    }
    ll += eta[*half.target - 1] - log_sum_exp(eta);
  }
  return ll;
}

double log_joint(const Dataset& data, const ModelParams& theta, const Hyperparams& hyper) {
  return log_likelihood(data, theta, hyper) + log_prior(theta, hyper);
}

DesignMatrix::DesignMatrix(const Dataset& data)
    : num_halves_(static_cast<int>(data.halves.size())),
      num_channels_(data.num_channels),
      num_samples_(data.num_samples),
      rows_(static_cast<Eigen::Index>(data.halves.size()) * kStimuliPerHalf * data.num_channels, data.num_samples) {
  targets_.reserve(data.halves.size());
  Eigen::Index r = 0;
  for (const auto& half : data.halves) {
    for (int j = 0; j < kStimuliPerHalf; ++j) {
      const Epoch& epoch = half.epochs[j];
      if (epoch.rows() != num_channels_ || epoch.cols() != num_samples_) {
        throw Error(ErrorCode::DimensionMismatch, "epoch shape differs from dataset header");
      }
      rows_.middleRows(r, num_channels_) = epoch;
      r += num_channels_;
    }
    targets_.push_back(half.target ? *half.target - 1 : -1);
  }
}

Eigen::MatrixXd DesignMatrix::linear_predictors(const Eigen::MatrixXd& beta_tilde, const Eigen::MatrixXd& weights) const {
  if (beta_tilde.rows() != num_samples_ || weights.rows() != num_channels_ || beta_tilde.cols() != weights.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter batch does not match design dimensions");
  }
  const Eigen::Index stimuli = static_cast<Eigen::Index>(num_halves_) * kStimuliPerHalf;
  Eigen::MatrixXd eta(stimuli, beta_tilde.cols());
  if (stimuli == 0) return eta;
  const Eigen::MatrixXd scores = rows_ * beta_tilde;
  for (Eigen::Index l = 0; l < beta_tilde.cols(); ++l) {
    Eigen::Map<const Eigen::MatrixXd> per_channel(scores.col(l).data(), num_channels_, stimuli);
    eta.col(l).noalias() = per_channel.transpose() * weights.col(l);
  }
  return eta;
}

Eigen::VectorXd DesignMatrix::log_likelihoods(const Eigen::MatrixXd& beta_tilde, const Eigen::MatrixXd& weights) const {
  const Eigen::MatrixXd eta = linear_predictors(beta_tilde, weights);
  Eigen::VectorXd ll = Eigen::VectorXd::Zero(beta_tilde.cols());
  for (Eigen::Index l = 0; l < eta.cols(); ++l) {
    for (int i = 0; i < num_halves_; ++i) {
      if (targets_[i] < 0) throw Error(ErrorCode::MissingLabel, "half-sequence without a target label");
      const auto block = eta.col(l).segment(i * kStimuliPerHalf, kStimuliPerHalf);
      ll[l] += block[targets_[i]] - log_sum_exp(block);
    }
  }
  return ll;
}

}  // namespace glass
