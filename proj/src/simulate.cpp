#include "glass/simulate.hpp"

#include "glass/error.hpp"
#include "glass/summary.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace glass {

namespace {

// Stream labels for derive_seed.
constexpr std::uint64_t kTextStream = 0x7e47;
constexpr std::uint64_t kCharacterStream = 0xc4a2;

double bump(double t, double center, double sd) {
  const double z = (t - center) / sd;
  return std::exp(-0.5 * z * z);
}

// Stationary AR(1) series with unit marginal variance.
void fill_unit_ar1(Rng& rng, double rho, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) {
  const double innovation = std::sqrt(1.0 - rho * rho);
  double prev = standard_normal(rng);
  out[0] = prev;
  for (Eigen::Index m = 1; m < out.size(); ++m) {
    prev = rho * prev + innovation * standard_normal(rng);
    out[m] = prev;
  }
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t k = items.size(); k > 1; --k) {
    const auto pick = static_cast<std::size_t>(uniform_index(rng, k));
    std::swap(items[k - 1], items[pick]);
  }
}

int draw_categorical(const Simplex6& probs, Rng& rng) {
  const double u = uniform_open(rng);
  double acc = 0.0;
  for (int j = 0; j < kStimuliPerHalf; ++j) {
    acc += probs[j];
    if (u < acc) return j;
  }
  return kStimuliPerHalf - 1;
}

}  // namespace

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "uniform_index needs n > 0");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

void GenerativeConfig::validate() const {
  if (num_channels < 1 || num_samples < 1 || characters < 0 || sequences < 0) {
    throw Error(ErrorCode::InvalidArgument, "generative dimensions must be positive");
  }
  if (!(sample_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample_rate must be positive");
  if (!(noise_var > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_var must be > 0");
  if (!(std::abs(ar_coef) < 1.0)) throw Error(ErrorCode::InvalidArgument, "ar_coef must lie in (-1, 1)");
  if (!(spatial_corr >= 0.0 && spatial_corr < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "spatial_corr must lie in [0, 1)");
  }
  auto check_template = [&](const Eigen::VectorXd& v, const char* name) {
    if (v.size() != 0 && (v.size() != num_samples || !v.allFinite())) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be a finite length-M vector");
    }
  };
  check_template(erp_target, "erp_target");
  check_template(erp_nontarget, "erp_nontarget");
  if (channel_gain.size() != 0 && channel_gain.size() != num_channels) {
    throw Error(ErrorCode::InvalidArgument, "channel_gain must have length E");
  }
  if (!text.empty() && static_cast<int>(text.size()) != characters) {
    throw Error(ErrorCode::InvalidArgument, "text length must equal the number of characters");
  }
}

GenerativeConfig generative_preset(NoiseLevel level) {
  GenerativeConfig cfg;
  cfg.num_channels = 3;
  cfg.sample_rate = 32.0;
  cfg.num_samples = 25;
  cfg.characters = 19;
  cfg.sequences = 5;
  cfg.ar_coef = 0.5;
  cfg.spatial_corr = 0.5;
  cfg.noise_var = level == NoiseLevel::Moderate ? 20.0 : 40.0;
  return cfg;
}

GenerativeConfig standard_template_config() {
  GenerativeConfig cfg;
  cfg.num_channels = 16;
  cfg.sample_rate = 256.0;
  cfg.num_samples = 205;
  cfg.characters = 19;
  cfg.sequences = 15;
  cfg.ar_coef = 0.9;
  cfg.spatial_corr = 0.5;
  cfg.noise_var = 20.0;
  return cfg;
}

Eigen::VectorXd default_target_erp(int num_samples, double sample_rate) {
  Eigen::VectorXd erp(num_samples);
  for (int m = 0; m < num_samples; ++m) {
    const double t_ms = 1000.0 * m / sample_rate;
    erp[m] = 5.0 * bump(t_ms, 300.0, 60.0) + 2.0 * bump(t_ms, 100.0, 25.0);
  }
  return erp;
}

GenerativeResult simulate_generative(const GenerativeConfig& cfg, const Keyboard& kb) {
  cfg.validate();
  const int num_channels = cfg.num_channels;
  const int num_samples = cfg.num_samples;
  const Eigen::VectorXd target_erp =
      cfg.erp_target.size() ? cfg.erp_target : default_target_erp(num_samples, cfg.sample_rate);
  const Eigen::VectorXd nontarget_erp =
      cfg.erp_nontarget.size() ? cfg.erp_nontarget : Eigen::VectorXd::Zero(num_samples);
  const Eigen::VectorXd gain = cfg.channel_gain.size() ? cfg.channel_gain : Eigen::VectorXd::Ones(num_channels);

  GenerativeResult out;
  out.text = cfg.text;
  if (out.text.empty()) {
    Rng rng = make_rng(derive_seed(cfg.seed, kTextStream));
    for (int c = 0; c < cfg.characters; ++c) out.text.push_back(kb.symbols()[uniform_index(rng, 36)]);
  }

  Dataset& data = out.data;
  data.num_channels = num_channels;
  data.num_samples = num_samples;
  data.sample_rate = cfg.sample_rate;
  data.channel_names = default_channel_names(num_channels);

  const double noise_sd = std::sqrt(cfg.noise_var);
  const double own = std::sqrt(1.0 - cfg.spatial_corr);
  const double shared = std::sqrt(cfg.spatial_corr);
  Eigen::MatrixXd series(num_channels + 1, num_samples);

  for (int c = 1; c <= cfg.characters; ++c) {
    Rng rng = make_rng(derive_seed(cfg.seed, kCharacterStream, static_cast<std::uint64_t>(c)));
    const auto [target_row, target_col] = kb.locate(out.text[static_cast<std::size_t>(c - 1)]);
    for (int s = 1; s <= cfg.sequences; ++s) {
      HalfSequence rows{{c, s, HalfType::Row}, {}, target_row};
      HalfSequence cols{{c, s, HalfType::Column}, {}, target_col};
      std::vector<int> order(2 * kStimuliPerHalf);
      for (int k = 0; k < 2 * kStimuliPerHalf; ++k) order[static_cast<std::size_t>(k)] = k;
      shuffle(order, rng);
      for (int stimulus : order) {
        const bool is_row = stimulus < kStimuliPerHalf;
        const int j = stimulus % kStimuliPerHalf;
        const bool is_target = j + 1 == (is_row ? target_row : target_col);
        for (int e = 0; e <= num_channels; ++e) fill_unit_ar1(rng, cfg.ar_coef, series.row(e));
        Epoch epoch(num_channels, num_samples);
        const Eigen::VectorXd& erp = is_target ? target_erp : nontarget_erp;
        for (int e = 0; e < num_channels; ++e) {
          epoch.row(e) = noise_sd * (own * series.row(e + 1) + shared * series.row(0)) + gain[e] * erp.transpose();
        }
        (is_row ? rows : cols).epochs[static_cast<std::size_t>(j)] = std::move(epoch);
      }
      data.halves.push_back(std::move(rows));
      data.halves.push_back(std::move(cols));
    }
  }
  return out;
}

ModelTruth reference_truth(int num_channels, int num_samples, double sample_rate, double effect_scale) {
  ModelTruth truth;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(num_channels);
  if (num_channels == 16) {
    alpha[11] = 0.40;  // Pz
    alpha[13] = 0.55;  // PO7
    alpha[14] = 0.45;  // Oz
    alpha[15] = 0.58;  // PO8
  } else {
    const int signal = std::max(1, num_channels / 4);
    for (int k = 0; k < signal; ++k) alpha[num_channels - 1 - k] = 1.0 - 0.1 * k;
  }
  alpha.normalize();
  truth.theta.alpha_raw = alpha;
  truth.theta.delta = (alpha.array() != 0.0).cast<double>();
  truth.theta.beta_raw.resize(num_samples);
  for (int m = 0; m < num_samples; ++m) {
    const double t_ms = 1000.0 * m / sample_rate;
    truth.theta.beta_raw[m] =
        effect_scale * (0.5 * bump(t_ms, 100.0, 20.0) + 1.0 * bump(t_ms, 260.0, 45.0) + 0.35 * bump(t_ms, 460.0, 35.0));
  }
  truth.theta.sigma = 0.1 * effect_scale;
  truth.hyper.tau = 0.05 * effect_scale;
  return truth;
}

Dataset simulate_from_model(const ModelTruth& truth, const Dataset& template_data, std::uint64_t seed) {
  if (!template_data.labeled()) throw Error(ErrorCode::UnlabeledTemplate, "template must be fully labeled");
  Dataset out = template_data;
  for (std::size_t i = 0; i < out.halves.size(); ++i) {
    HalfSequence& half = out.halves[i];
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Simplex6 probs = target_probabilities(half, truth.theta, truth.hyper);
    const int drawn = draw_categorical(probs, rng);
    const int label = *half.target - 1;
    if (drawn != label) std::swap(half.epochs[static_cast<std::size_t>(drawn)], half.epochs[static_cast<std::size_t>(label)]);
    std::vector<int> others;
    for (int j = 0; j < kStimuliPerHalf; ++j) {
      if (j != label) others.push_back(j);
    }
    std::vector<int> permuted = others;
    shuffle(permuted, rng);
    std::array<Epoch, kStimuliPerHalf> epochs = half.epochs;
    for (std::size_t k = 0; k < others.size(); ++k) {
      epochs[static_cast<std::size_t>(others[k])] = half.epochs[static_cast<std::size_t>(permuted[k])];
    }
    half.epochs = std::move(epochs);
  }
  return out;
}

void CorruptionConfig::validate() const {
  if (!(drift_prob >= 0.0 && drift_prob <= 1.0)) throw Error(ErrorCode::InvalidArgument, "drift_prob must lie in [0, 1]");
  if (!(std::abs(noisy_ar_coef) < 1.0)) throw Error(ErrorCode::InvalidArgument, "noisy_ar_coef must lie in (-1, 1)");
  if (!(noisy_var >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noisy_var must be >= 0");
}

Dataset apply_corruptions(const Dataset& data, const CorruptionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.apply_drift && !data.labeled()) throw Error(ErrorCode::MissingLabel, "attention drift needs labels");
  Dataset out = data;
  const double innovation_sd = std::sqrt(cfg.noisy_var);
  const double rho = cfg.noisy_ar_coef;
  const double start_sd = innovation_sd / std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < out.halves.size(); ++i) {
    HalfSequence& half = out.halves[i];
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    if (cfg.apply_drift && uniform_open(rng) < cfg.drift_prob) {
      const int label = *half.target - 1;
      int other = static_cast<int>(uniform_index(rng, kStimuliPerHalf - 1));
      if (other >= label) ++other;
      std::swap(half.epochs[static_cast<std::size_t>(label)], half.epochs[static_cast<std::size_t>(other)]);
    }
    if (cfg.apply_noise) {
      for (auto& epoch : half.epochs) {
        for (Eigen::Index e = 0; e < epoch.rows(); ++e) {
          double prev = start_sd * standard_normal(rng);
          epoch(e, 0) += prev;
          for (Eigen::Index m = 1; m < epoch.cols(); ++m) {
            prev = rho * prev + innovation_sd * standard_normal(rng);
            epoch(e, m) += prev;
          }
        }
      }
    }
  }
  return out;
}

RecoveryMetrics recovery_metrics(const ModelTruth& truth, const PosteriorDraws& draws, const Hyperparams& fit_hyper) {
  if (draws.num_samples() != truth.theta.num_samples() || draws.num_channels() != truth.theta.num_channels()) {
    throw Error(ErrorCode::DimensionMismatch, "truth and draws have different dimensions");
  }
  const Eigen::VectorXd beta_true = truth.beta_tilde();
  const double energy = beta_true.squaredNorm();
  if (energy == 0.0) throw Error(ErrorCode::ZeroTrueEffect, "true effects are identically zero");
  const EffectSummary effects = summarize_effects(draws, fit_hyper);
  const ChannelSummary channels = summarize_channels(draws);

  RecoveryMetrics out;
  const Eigen::VectorXd alpha_true = truth.theta.alpha();
  const double inner = alpha_true.dot(channels.weight);
  // The estimate is compared in the sign orientation its channel weights share with the truth.
  const double orientation = inner < 0.0 ? -1.0 : 1.0;
  out.rmse = (beta_true - orientation * effects.median).squaredNorm() / energy;
  const double cosine = std::min(1.0, std::abs(inner));
  out.error_angle_deg = std::acos(cosine) * 180.0 / std::numbers::pi;
  double signal = 0.0;
  double noise = 0.0;
  int signal_count = 0;
  int noise_count = 0;
  for (Eigen::Index e = 0; e < truth.theta.delta.size(); ++e) {
    if (truth.theta.delta[e] > 0.5) {
      signal += channels.selection_prob[e];
      ++signal_count;
    } else {
      noise += channels.selection_prob[e];
      ++noise_count;
    }
  }
  out.mean_delta_signal = signal_count ? signal / signal_count : std::numeric_limits<double>::quiet_NaN();
  out.mean_delta_noise = noise_count ? noise / noise_count : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace glass
