#include "glass/vi.hpp"

#include "glass/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace glass {

void FitConfig::validate() const {
  if (iterations < 0) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 0");
  if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "step_size must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "Adam moments must lie in [0, 1) and eps > 0");
  }
  if (trace_every < 0) throw Error(ErrorCode::InvalidArgument, "trace_every must be >= 0");
  grad.validate();
}

std::uint64_t calibration_seed(std::uint64_t seed) { return derive_seed(seed, 0x7a75ULL); }
std::uint64_t draws_seed(std::uint64_t seed) { return derive_seed(seed, 0xd4a5ULL); }

namespace {
std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, 0x1417ULL); }
std::uint64_t iteration_seed(std::uint64_t seed, int t) {
  return derive_seed(seed, 0x17e4ULL, static_cast<std::uint64_t>(t));
}
}  // namespace

VariationalParams initialize_variational(int num_channels, int num_samples, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  VariationalParams xi = VariationalParams::zeros(num_channels, num_samples);
  const double raw = softplus_inverse(0.1);
  for (int m = 0; m < num_samples; ++m) xi.beta_mean[m] = 0.01 * standard_normal(rng);
  for (int e = 0; e < num_channels; ++e) xi.alpha_mean[e] = 0.01 * standard_normal(rng);
  xi.beta_rawscale.setConstant(raw);
  xi.alpha_rawscale.setConstant(raw);
  xi.delta_logit.setZero();
  xi.sigma_mean = std::log(0.1);
  xi.sigma_rawscale = raw;
  return xi;
}

FitResult fit(const Dataset& data, const Hyperparams& hyper, const FitConfig& cfg) {
  return fit_from(data, hyper, cfg,
                  initialize_variational(data.num_channels, data.num_samples, init_seed(cfg.grad.seed)));
}

FitResult fit_from(const Dataset& data, const Hyperparams& hyper, const FitConfig& cfg, VariationalParams start) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "cannot fit an empty dataset");
  const ElboObjective objective(data, hyper);

  FitResult result;
  result.tau_used = hyper.tau;
  result.seed = cfg.grad.seed;
  Eigen::VectorXd params = start.to_flat();
  Eigen::VectorXd first_moment = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd second_moment = Eigen::VectorXd::Zero(params.size());
  const int num_channels = data.num_channels;
  const int num_samples = data.num_samples;

  for (int t = 0; t < cfg.iterations; ++t) {
    GradConfig grad_cfg = cfg.grad;
    grad_cfg.seed = iteration_seed(cfg.grad.seed, t);
    ElboGradient step;
    try {
      step = objective.value_and_gradient(VariationalParams::from_flat(params, num_channels, num_samples), grad_cfg);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::NonFinite) {
        throw Error(ErrorCode::NonFinite, "non-finite gradient at iteration " + std::to_string(t) + " (" +
                                              err.what() + ")");
      }
      throw;
    }
    if (cfg.trace_every > 0 && t % cfg.trace_every == 0) result.trace.push_back({t, step.value});

    // Adam on -ELBO, written as ascent on the ELBO.
    const double step_count = static_cast<double>(t + 1);
    first_moment = cfg.adam_beta1 * first_moment + (1.0 - cfg.adam_beta1) * step.gradient;
    second_moment =
        cfg.adam_beta2 * second_moment + (1.0 - cfg.adam_beta2) * step.gradient.cwiseProduct(step.gradient);
    const double correction1 = 1.0 - std::pow(cfg.adam_beta1, step_count);
    const double correction2 = 1.0 - std::pow(cfg.adam_beta2, step_count);
    params.array() += cfg.step_size * (first_moment.array() / correction1) /
                      ((second_moment.array() / correction2).sqrt() + cfg.adam_eps);
  }
  result.xi = VariationalParams::from_flat(params, num_channels, num_samples);
  return result;
}

ModelParams PosteriorDraws::draw(int g) const {
  ModelParams theta;
  theta.beta_raw = beta_raw.row(g).transpose();
  theta.sigma = sigma[g];
  theta.delta = delta.row(g).transpose();
  theta.alpha_raw = alpha_raw.row(g).transpose();
  return theta;
}

Eigen::MatrixXd PosteriorDraws::beta_tilde(double tau) const {
  return beta_raw.unaryExpr([tau](double v) { return soft_threshold(v, tau); });
}

Eigen::MatrixXd PosteriorDraws::alpha() const {
  Eigen::MatrixXd out(alpha_raw.rows(), alpha_raw.cols());
  for (Eigen::Index g = 0; g < alpha_raw.rows(); ++g) out.row(g) = project_to_sphere(alpha_raw.row(g).transpose());
  return out;
}

PosteriorDraws posterior_draws(const VariationalParams& xi, int num_draws, std::uint64_t seed) {
  if (num_draws < 1) throw Error(ErrorCode::InvalidArgument, "number of draws must be >= 1");
  const int num_channels = xi.num_channels();
  const int num_samples = xi.num_samples();
  PosteriorDraws draws;
  draws.beta_raw.resize(num_draws, num_samples);
  draws.sigma.resize(num_draws);
  draws.delta.resize(num_draws, num_channels);
  draws.alpha_raw.resize(num_draws, num_channels);
  draws.log_q.resize(num_draws);
  for (int g = 0; g < num_draws; ++g) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(g)));
    const SurrogateDraw s = sample_surrogate(xi, rng, false, 1.0);
    draws.beta_raw.row(g) = s.theta.beta_raw.transpose();
    draws.sigma[g] = s.theta.sigma;
    draws.delta.row(g) = s.theta.delta.transpose();
    draws.alpha_raw.row(g) = s.theta.alpha_raw.transpose();
    draws.log_q[g] = s.log_q;
  }
  return draws;
}

void attach_log_joint(PosteriorDraws& draws, const Dataset& data, const Hyperparams& hyper) {
  if (data.num_channels != draws.num_channels() || data.num_samples != draws.num_samples()) {
    throw Error(ErrorCode::DimensionMismatch, "draws do not match the dataset dimensions");
  }
  const DesignMatrix design(data);
  const int total = draws.size();
  Eigen::VectorXd log_joint(total);
  constexpr int kChunk = 128;
  for (int start = 0; start < total; start += kChunk) {
    const int count = std::min(kChunk, total - start);
    Eigen::MatrixXd beta(draws.num_samples(), count);
    Eigen::MatrixXd weights(draws.num_channels(), count);
    for (int k = 0; k < count; ++k) {
      const ModelParams theta = draws.draw(start + k);
      beta.col(k) = theta.beta_tilde(hyper.tau);
      weights.col(k) = theta.channel_weights();
    }
    const Eigen::VectorXd ll = design.log_likelihoods(beta, weights);
    for (int k = 0; k < count; ++k) log_joint[start + k] = ll[k] + log_prior(draws.draw(start + k), hyper);
  }
  draws.log_joint = std::move(log_joint);
}

double tau_from_medians(const Eigen::VectorXd& medians, double ratio) {
  if (!(ratio >= 0.0)) throw Error(ErrorCode::InvalidArgument, "shrinkage ratio must be >= 0");
  if (medians.size() == 0) return 0.0;
  std::vector<double> magnitudes(medians.size());
  for (Eigen::Index m = 0; m < medians.size(); ++m) magnitudes[m] = std::abs(medians[m]);
  return ratio * median(std::move(magnitudes));
}

TauCalibration calibrate_tau_baseline(const Dataset& data, const Hyperparams& hyper0, const FitConfig& cfg) {
  Hyperparams baseline_hyper = hyper0;
  baseline_hyper.tau = 0.0;
  FitConfig baseline_cfg = cfg;
  baseline_cfg.grad.seed = calibration_seed(cfg.grad.seed);
  TauCalibration out;
  out.baseline = fit(data, baseline_hyper, baseline_cfg);
  const PosteriorDraws draws = posterior_draws(out.baseline.xi, kCalibrationDraws, draws_seed(baseline_cfg.grad.seed));
  const Eigen::MatrixXd effects = draws.beta_tilde(0.0);
  Eigen::VectorXd medians(effects.cols());
  for (Eigen::Index m = 0; m < effects.cols(); ++m) {
    medians[m] = median(std::vector<double>(effects.col(m).data(), effects.col(m).data() + effects.rows()));
  }
  out.median_abs_effect = tau_from_medians(medians, 1.0);
  return out;
}

double calibrate_tau(const Dataset& data, const Hyperparams& hyper0, const FitConfig& cfg, double ratio) {
  return calibrate_tau_baseline(data, hyper0, cfg).tau_for(ratio);
}

}  // namespace glass
