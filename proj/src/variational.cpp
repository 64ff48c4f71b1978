#include "glass/variational.hpp"

#include "glass/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace glass {

Eigen::VectorXd VariationalParams::to_flat() const {
  Eigen::VectorXd flat(flat_size());
  flat << beta_mean, beta_rawscale, sigma_mean, sigma_rawscale, delta_logit, alpha_mean, alpha_rawscale;
  return flat;
}

VariationalParams VariationalParams::from_flat(const Eigen::VectorXd& flat, int num_channels, int num_samples) {
  if (flat.size() != flat_size(num_channels, num_samples)) {
    throw Error(ErrorCode::DimensionMismatch, "flat vector has length " + std::to_string(flat.size()) +
                                                  ", expected " +
                                                  std::to_string(flat_size(num_channels, num_samples)));
  }
  VariationalParams xi;
  Eigen::Index at = 0;
  auto take = [&](Eigen::Index n) {
    Eigen::VectorXd v = flat.segment(at, n);
    at += n;
    return v;
  };
  xi.beta_mean = take(num_samples);
  xi.beta_rawscale = take(num_samples);
  xi.sigma_mean = flat[at++];
  xi.sigma_rawscale = flat[at++];
  xi.delta_logit = take(num_channels);
  xi.alpha_mean = take(num_channels);
  xi.alpha_rawscale = take(num_channels);
  return xi;
}

VariationalParams VariationalParams::zeros(int num_channels, int num_samples) {
  return from_flat(Eigen::VectorXd::Zero(flat_size(num_channels, num_samples)), num_channels, num_samples);
}

void GradConfig::validate() const {
  if (mc_samples < 1) throw Error(ErrorCode::InvalidArgument, "mc_samples must be >= 1");
  if (!(relax_temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "relax_temperature must be > 0");
}

SurrogateNoise SurrogateNoise::draw(Rng& rng, int num_channels, int num_samples) {
  SurrogateNoise n;
  n.beta.resize(num_samples);
  for (int m = 0; m < num_samples; ++m) n.beta[m] = standard_normal(rng);
  n.sigma = standard_normal(rng);
  n.delta.resize(num_channels);
  for (int e = 0; e < num_channels; ++e) n.delta[e] = standard_logistic(rng);
  n.alpha.resize(num_channels);
  for (int e = 0; e < num_channels; ++e) n.alpha[e] = standard_normal(rng);
  return n;
}

namespace {

// Log density of a logistic variable with location `loc` and scale 1/temperature,
// evaluated at x: the density of logit(delta) under a binary-concrete law.
double concrete_logit_log_density(double x, double loc, double temperature) {
  const double centered = temperature * x - loc;
  return std::log(temperature) - centered - 2.0 * softplus(-centered);
}

// d/dx of concrete_logit_log_density.
double concrete_logit_score(double x, double loc, double temperature) {
  const double centered = temperature * x - loc;
  return temperature * (1.0 - 2.0 * sigmoid(centered));
}

void check_shapes(const VariationalParams& xi) {
  if (xi.beta_rawscale.size() != xi.beta_mean.size() || xi.delta_logit.size() != xi.alpha_mean.size() ||
      xi.alpha_rawscale.size() != xi.alpha_mean.size()) {
    throw Error(ErrorCode::DimensionMismatch, "variational parameter blocks have inconsistent lengths");
  }
}

}  // namespace

SurrogateDraw transform_noise(const VariationalParams& xi, const SurrogateNoise& noise, bool relaxed,
                              double temperature) {
  check_shapes(xi);
  const int num_samples = xi.num_samples();
  const int num_channels = xi.num_channels();
  SurrogateDraw out;
  ModelParams& theta = out.theta;
  double log_q = 0.0;

  theta.beta_raw.resize(num_samples);
  for (int m = 0; m < num_samples; ++m) {
    const double scale = softplus(xi.beta_rawscale[m]);
    theta.beta_raw[m] = xi.beta_mean[m] + scale * noise.beta[m];
    log_q += -0.5 * noise.beta[m] * noise.beta[m] - std::log(scale) - 0.5 * kLogTwoPi;
  }

  const double sigma_scale = softplus(xi.sigma_rawscale);
  const double log_sigma = xi.sigma_mean + sigma_scale * noise.sigma;
  theta.sigma = std::exp(log_sigma);
  log_q += -0.5 * noise.sigma * noise.sigma - std::log(sigma_scale) - 0.5 * kLogTwoPi - log_sigma;

  theta.delta.resize(num_channels);
  out.delta_logit_sample.resize(num_channels);
  for (int e = 0; e < num_channels; ++e) {
    const double logit = xi.delta_logit[e];
    if (relaxed) {
      const double x = (logit + noise.delta[e]) / temperature;
      out.delta_logit_sample[e] = x;
      theta.delta[e] = sigmoid(x);
      log_q += concrete_logit_log_density(x, logit, temperature);
    } else {
      const bool on = logit + noise.delta[e] > 0.0;
      theta.delta[e] = on ? 1.0 : 0.0;
      out.delta_logit_sample[e] = on ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      log_q += on ? log_sigmoid(logit) : log_sigmoid(-logit);
    }
  }

  theta.alpha_raw.resize(num_channels);
  for (int e = 0; e < num_channels; ++e) {
    const double scale = softplus(xi.alpha_rawscale[e]);
    theta.alpha_raw[e] = xi.alpha_mean[e] + scale * noise.alpha[e];
    log_q += -0.5 * noise.alpha[e] * noise.alpha[e] - std::log(scale) - 0.5 * kLogTwoPi;
  }
  out.log_q = log_q;
  return out;
}

SurrogateDraw sample_surrogate(const VariationalParams& xi, Rng& rng, bool relaxed, double temperature) {
  if (relaxed && !(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  const SurrogateNoise noise = SurrogateNoise::draw(rng, xi.num_channels(), xi.num_samples());
  return transform_noise(xi, noise, relaxed, temperature);
}

ElboObjective::ElboObjective(const Dataset& data, Hyperparams hyper) : design_(data), hyper_(hyper) {
  hyper_.validate();
  for (int target : design_.targets()) {
    if (target < 0) throw Error(ErrorCode::MissingLabel, "ELBO needs a fully labeled dataset");
  }
}

double ElboObjective::value(const VariationalParams& xi, const GradConfig& cfg) const {
  return evaluate(xi, cfg, nullptr).mean();
}

Eigen::VectorXd ElboObjective::draw_values(const VariationalParams& xi, const GradConfig& cfg) const {
  return evaluate(xi, cfg, nullptr);
}

ElboGradient ElboObjective::value_and_gradient(const VariationalParams& xi, const GradConfig& cfg) const {
  ElboGradient out;
  out.gradient = Eigen::VectorXd::Zero(xi.flat_size());
  out.value = evaluate(xi, cfg, &out.gradient).mean();
  return out;
}

Eigen::VectorXd ElboObjective::evaluate(const VariationalParams& xi, const GradConfig& cfg,
                                        Eigen::VectorXd* gradient) const {
  cfg.validate();
  check_shapes(xi);
  const int num_samples = xi.num_samples();
  const int num_channels = xi.num_channels();
  if (num_samples != design_.num_samples() || num_channels != design_.num_channels()) {
    throw Error(ErrorCode::DimensionMismatch,
                "surrogate is " + std::to_string(num_channels) + "x" + std::to_string(num_samples) + ", data is " +
                    std::to_string(design_.num_channels()) + "x" + std::to_string(design_.num_samples()));
  }
  const int draws = cfg.mc_samples;
  const double temperature = cfg.relax_temperature;
  const double tau = hyper_.tau;
  const double prior_logit = std::log(hyper_.delta_prior) - std::log1p(-hyper_.delta_prior);

  std::vector<SurrogateNoise> noises;
  std::vector<SurrogateDraw> samples;
  noises.reserve(draws);
  samples.reserve(draws);
  Eigen::MatrixXd beta_tilde(num_samples, draws);
  Eigen::MatrixXd weights(num_channels, draws);
  std::vector<Eigen::VectorXd> alphas(draws);
  Eigen::VectorXd values(draws);

  for (int l = 0; l < draws; ++l) {
    Rng rng = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(l)));
    noises.push_back(SurrogateNoise::draw(rng, num_channels, num_samples));
    samples.push_back(transform_noise(xi, noises.back(), true, temperature));
    const SurrogateDraw& s = samples.back();
    const ModelParams& theta = s.theta;
    if (!(theta.alpha_raw.norm() >= kZeroVectorEpsilon)) {
      throw Error(ErrorCode::ZeroVector, "draw " + std::to_string(l) + " has a zero channel-weight vector");
    }
    alphas[l] = theta.alpha_raw / theta.alpha_raw.norm();
    beta_tilde.col(l) = soft_threshold(theta.beta_raw, tau);
    weights.col(l) = theta.delta.cwiseProduct(alphas[l]);

    double prior = 0.0;
    double previous = 0.0;
    for (int m = 0; m < num_samples; ++m) {
      prior += normal_log_density(theta.beta_raw[m], previous, theta.sigma);
      previous = theta.beta_raw[m];
    }
    prior += half_cauchy_log_density(theta.sigma, hyper_.cauchy_scale);
    for (int e = 0; e < num_channels; ++e) {
      prior += concrete_logit_log_density(s.delta_logit_sample[e], prior_logit, temperature);
      prior += normal_log_density(theta.alpha_raw[e], 0.0, 1.0);
    }
    values[l] = prior - s.log_q;
  }

  const int halves = design_.num_halves();
  const Eigen::Index stimuli = static_cast<Eigen::Index>(halves) * kStimuliPerHalf;
  Eigen::MatrixXd scores;
  Eigen::MatrixXd score_weights;  // d loglik / d scores, same shape as scores
  Eigen::MatrixXd grad_weights = Eigen::MatrixXd::Zero(num_channels, draws);
  if (halves > 0) {
    scores.noalias() = design_.rows() * beta_tilde;
    if (gradient) score_weights.resize(scores.rows(), scores.cols());
    Eigen::VectorXd eta(stimuli);
    Eigen::VectorXd residual(stimuli);
    for (int l = 0; l < draws; ++l) {
      Eigen::Map<const Eigen::MatrixXd> per_channel(scores.col(l).data(), num_channels, stimuli);
      eta.noalias() = per_channel.transpose() * weights.col(l);
      double loglik = 0.0;
      for (int i = 0; i < halves; ++i) {
        const auto block = eta.segment(static_cast<Eigen::Index>(i) * kStimuliPerHalf, kStimuliPerHalf);
        const double lse = log_sum_exp(block);
        const int z = design_.targets()[i];
        loglik += block[z] - lse;
        if (gradient) {
          for (int j = 0; j < kStimuliPerHalf; ++j) {
            residual[i * kStimuliPerHalf + j] = (j == z ? 1.0 : 0.0) - std::exp(block[j] - lse);
          }
        }
      }
      values[l] += loglik;
      if (gradient) {
        grad_weights.col(l).noalias() = per_channel * residual;
        Eigen::Map<Eigen::MatrixXd> out(score_weights.col(l).data(), num_channels, stimuli);
        out.noalias() = weights.col(l) * residual.transpose();
      }
    }
  }
  for (int l = 0; l < draws; ++l) {
    if (!std::isfinite(values[l])) {
      throw Error(ErrorCode::NonFinite, "ELBO integrand is not finite at draw " + std::to_string(l));
    }
  }
  if (!gradient) return values;

  Eigen::MatrixXd grad_beta_tilde = Eigen::MatrixXd::Zero(num_samples, draws);
  if (halves > 0) grad_beta_tilde.noalias() = design_.rows().transpose() * score_weights;

  VariationalParams g = VariationalParams::zeros(num_channels, num_samples);
  for (int l = 0; l < draws; ++l) {
    const SurrogateNoise& noise = noises[l];
    const ModelParams& theta = samples[l].theta;
    const double sigma = theta.sigma;
    const double inv_var = 1.0 / (sigma * sigma);

    // beta*: likelihood through the soft-threshold, random-walk prior.
    Eigen::VectorXd grad_beta(num_samples);
    double sum_sq_diff = 0.0;
    for (int m = 0; m < num_samples; ++m) {
      const double prev = m > 0 ? theta.beta_raw[m - 1] : 0.0;
      const double diff = theta.beta_raw[m] - prev;
      sum_sq_diff += diff * diff;
      double d = grad_beta_tilde(m, l) * soft_threshold_derivative(theta.beta_raw[m], tau) - diff * inv_var;
      if (m + 1 < num_samples) d += (theta.beta_raw[m + 1] - theta.beta_raw[m]) * inv_var;
      grad_beta[m] = d;
    }
    for (int m = 0; m < num_samples; ++m) {
      const double slope = sigmoid(xi.beta_rawscale[m]);
      const double scale = softplus(xi.beta_rawscale[m]);
      g.beta_mean[m] += grad_beta[m];
      g.beta_rawscale[m] += grad_beta[m] * noise.beta[m] * slope + slope / scale;
    }

    // log sigma: random-walk prior, half-Cauchy, and the log-normal Jacobian in -log q.
    const double grad_log_sigma = sum_sq_diff * inv_var - num_samples -
                                  2.0 * sigma * sigma / (hyper_.cauchy_scale * hyper_.cauchy_scale + sigma * sigma) +
                                  1.0;
    {
      const double slope = sigmoid(xi.sigma_rawscale);
      const double scale = softplus(xi.sigma_rawscale);
      g.sigma_mean += grad_log_sigma;
      g.sigma_rawscale += grad_log_sigma * noise.sigma * slope + slope / scale;
    }

    // delta (relaxed) and alpha* through w_e = delta_e * alpha_e.
    const Eigen::VectorXd& alpha = alphas[l];
    Eigen::VectorXd grad_alpha_unit(num_channels);
    for (int e = 0; e < num_channels; ++e) {
      const double d = theta.delta[e];
      const double x = samples[l].delta_logit_sample[e];
      const double grad_x = grad_weights(e, l) * alpha[e] * d * (1.0 - d) +
                            concrete_logit_score(x, prior_logit, temperature);
      g.delta_logit[e] += grad_x / temperature;
      grad_alpha_unit[e] = grad_weights(e, l) * d;
    }
    const double norm = theta.alpha_raw.norm();
    const Eigen::VectorXd grad_alpha_raw =
        (grad_alpha_unit - alpha * alpha.dot(grad_alpha_unit)) / norm - theta.alpha_raw;
    for (int e = 0; e < num_channels; ++e) {
      const double slope = sigmoid(xi.alpha_rawscale[e]);
      const double scale = softplus(xi.alpha_rawscale[e]);
      g.alpha_mean[e] += grad_alpha_raw[e];
      g.alpha_rawscale[e] += grad_alpha_raw[e] * noise.alpha[e] * slope + slope / scale;
    }
  }
  *gradient = g.to_flat() / static_cast<double>(draws);
  if (!gradient->allFinite()) throw Error(ErrorCode::NonFinite, "ELBO gradient is not finite");
  return values;
}

double elbo_estimate(const VariationalParams& xi, const Dataset& data, const Hyperparams& hyper, const GradConfig& cfg) {
  return ElboObjective(data, hyper).value(xi, cfg);
}

Eigen::VectorXd elbo_gradient(const VariationalParams& xi, const Dataset& data, const Hyperparams& hyper,
                              const GradConfig& cfg) {
  return ElboObjective(data, hyper).value_and_gradient(xi, cfg).gradient;
}

namespace {

std::vector<bool> active_pattern(const VariationalParams& xi, const GradConfig& cfg, double tau) {
  std::vector<bool> pattern;
  for (int l = 0; l < cfg.mc_samples; ++l) {
    Rng rng = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(l)));
    const SurrogateNoise noise = SurrogateNoise::draw(rng, xi.num_channels(), xi.num_samples());
    for (int m = 0; m < xi.num_samples(); ++m) {
      const double beta = xi.beta_mean[m] + softplus(xi.beta_rawscale[m]) * noise.beta[m];
      pattern.push_back(std::abs(beta) > tau);
    }
  }
  return pattern;
}

}  // namespace

GradientCheck check_gradient(const VariationalParams& xi, const Dataset& data, const Hyperparams& hyper,
                             const GradConfig& cfg, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) throw Error(ErrorCode::InvalidArgument, "eps must lie in [1e-6, 1e-3]");
  const ElboObjective objective(data, hyper);
  const int num_channels = xi.num_channels();
  const int num_samples = xi.num_samples();
  const Eigen::VectorXd analytic = objective.value_and_gradient(xi, cfg).gradient;
  const Eigen::VectorXd base = xi.to_flat();
  const bool has_kinks = hyper.tau > 0.0;
  const std::vector<bool> pattern = has_kinks ? active_pattern(xi, cfg, hyper.tau) : std::vector<bool>{};

  GradientCheck result;
  result.relative_errors = Eigen::VectorXd::Constant(base.size(), std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    Eigen::VectorXd plus = base;
    Eigen::VectorXd minus = base;
    plus[k] += eps;
    minus[k] -= eps;
    const auto xi_plus = VariationalParams::from_flat(plus, num_channels, num_samples);
    const auto xi_minus = VariationalParams::from_flat(minus, num_channels, num_samples);
    if (has_kinks && (active_pattern(xi_plus, cfg, hyper.tau) != pattern ||
                      active_pattern(xi_minus, cfg, hyper.tau) != pattern)) {
      result.excluded.push_back(k);
      continue;
    }
    const double numeric = (objective.value(xi_plus, cfg) - objective.value(xi_minus, cfg)) / (2.0 * eps);
    const double a = analytic[k];
    const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    result.relative_errors[k] = err;
    result.max_relative_error = std::max(result.max_relative_error, err);
  }
  return result;
}

}  // namespace glass
