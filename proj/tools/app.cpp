#include "app.hpp"

#include "glass/error.hpp"
#include "glass/summary.hpp"

#include <charconv>
#include <map>
#include <ostream>

namespace glass::app {

namespace {

// Stream labels for the seeds of one simulation run.
constexpr std::uint64_t kTrainStream = 0x5101;
constexpr std::uint64_t kTestStream = 0x5102;
constexpr std::uint64_t kTrainRelabel = 0x5103;
constexpr std::uint64_t kTestRelabel = 0x5104;
constexpr std::uint64_t kTrainCorrupt = 0x5105;
constexpr std::uint64_t kTestCorrupt = 0x5106;

const char* orientation_name(HalfType u) { return u == HalfType::Row ? "1" : "2"; }

std::string shape(int channels, int samples) { return std::to_string(channels) + "x" + std::to_string(samples); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

SimulationOutput run_simulation(const RunConfig& cfg) {
  cfg.validate();
  const SimulateSection& sim = cfg.simulate;
  GenerativeConfig train_cfg = sim.train;
  train_cfg.channel_gain = Eigen::VectorXd::Constant(train_cfg.num_channels, sim.erp_gain);
  train_cfg.seed = derive_seed(cfg.seed, kTrainStream);
  GenerativeConfig test_cfg = train_cfg;
  test_cfg.characters = sim.test_characters;
  test_cfg.sequences = sim.test_sequences;
  test_cfg.text.clear();
  test_cfg.seed = derive_seed(cfg.seed, kTestStream);

  SimulationOutput out;
  GenerativeResult train = simulate_generative(train_cfg);
  GenerativeResult test = simulate_generative(test_cfg);
  out.train = std::move(train.data);
  out.test = std::move(test.data);
  out.truth.seed = cfg.seed;
  out.truth.text = train.text;
  if (sim.generator == Generator::Model) {
    const ModelTruth truth =
        reference_truth(train_cfg.num_channels, train_cfg.num_samples, train_cfg.sample_rate, sim.effect_scale);
    out.train = simulate_from_model(truth, out.train, derive_seed(cfg.seed, kTrainRelabel));
    out.test = simulate_from_model(truth, out.test, derive_seed(cfg.seed, kTestRelabel));
    out.truth.kind = "model";
    out.truth.model = truth;
  } else {
    out.truth.kind = "generative";
  }
  // Drift mislabels training epochs only; extra noise reaches both sets.
  CorruptionConfig train_corruption = cfg.corruption;
  CorruptionConfig test_corruption = cfg.corruption;
  test_corruption.apply_drift = false;
  if (train_corruption.apply_drift || train_corruption.apply_noise) {
    out.train = apply_corruptions(out.train, train_corruption, derive_seed(cfg.seed, kTrainCorrupt));
  }
  if (test_corruption.apply_noise) {
    out.test = apply_corruptions(out.test, test_corruption, derive_seed(cfg.seed, kTestCorrupt));
  }
  out.train.timing = cfg.timing;
  out.test.timing = cfg.timing;
  return out;
}

TrainingOutput run_training(const Dataset& train, const RunConfig& cfg) {
  cfg.validate();
  const Dataset data = cfg.less_training > 0 ? train.first_sequences(cfg.less_training) : train;
  data.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "training data has no half-sequences");
  if (!data.labeled()) throw Error(ErrorCode::MissingLabel, "training data must be labeled");

  TrainingOutput out;
  out.identifiability = identifiability_check(data);

  FitConfig fit_cfg = cfg.fit;
  fit_cfg.grad.seed = cfg.seed;
  std::vector<std::pair<double, double>> plan;  // (ratio, tau)
  if (cfg.tau) {
    plan.emplace_back(cfg.shrinkage_ratios.front(), *cfg.tau);
  } else {
    Hyperparams baseline = cfg.hyper;
    baseline.tau = 0.0;
    const TauCalibration cal = calibrate_tau_baseline(data, baseline, fit_cfg);
    out.baseline_median = cal.median_abs_effect;
    for (double ratio : cfg.shrinkage_ratios) plan.emplace_back(ratio, cal.tau_for(ratio));
  }

  for (const auto& [ratio, tau] : plan) {
    Hyperparams hyper = cfg.hyper;
    hyper.tau = tau;
    FitResult result = fit(data, hyper, fit_cfg);
    TrainedModel model;
    Checkpoint& ckpt = model.checkpoint;
    ckpt.xi = result.xi;
    ckpt.hyper = hyper;
    ckpt.fit = fit_cfg;
    ckpt.seed = cfg.seed;
    ckpt.shrinkage_ratio = ratio;
    ckpt.tau_calibrated = !cfg.tau.has_value();
    ckpt.channel_names = data.channel_names;
    ckpt.sample_rate = data.sample_rate;
    ckpt.num_draws = cfg.draws;
    ckpt.draws_seed = draws_seed(cfg.seed);
    PosteriorDraws draws = posterior_draws(ckpt.xi, ckpt.num_draws, ckpt.draws_seed);
    attach_log_joint(draws, data, hyper);
    ckpt.log_joint = *draws.log_joint;
    model.trace = std::move(result.trace);
    out.models.push_back(std::move(model));
  }
  return out;
}

PredictionOutput run_prediction(const Checkpoint& model, const Dataset& input, const RunConfig& cfg,
                                const Keyboard& kb) {
  if (input.num_channels != model.num_channels() || input.num_samples != model.num_samples()) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + shape(model.num_channels(), model.num_samples()) +
                                                  " epochs, data has " + shape(input.num_channels, input.num_samples));
  }
  const Dataset data = cfg.max_sequences > 0 ? input.first_sequences(cfg.max_sequences) : input;
  data.validate();
  const PosteriorDraws draws = model.draws();
  const std::vector<PredictiveDist> dists = predict_dataset(draws, data, model.hyper, cfg.weighting);

  PredictionOutput out;
  out.decodings = decode_by_sequences(data, dists, kb);
  if (!dists.empty()) {
    out.ess = dists.front().ess;
    out.degenerate = dists.front().degenerate;
  }
  // Per character and orientation, fused distributions over the first n sequences.
  std::map<std::pair<int, int>, std::map<int, PredictiveDist>> slots;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto& key = data.halves[i].key;
    slots[{key.character, static_cast<int>(key.half_type)}][key.sequence] = dists[i];
  }
  for (const auto& [key, by_sequence] : slots) {
    std::vector<PredictiveDist> used;
    for (const auto& [sequence, dist] : by_sequence) {
      used.push_back(dist);
      PredictionRow row;
      row.character = key.first;
      row.half_type = static_cast<HalfType>(key.second);
      row.n_seq = static_cast<int>(used.size());
      row.probs = fuse_halfsequences(used);
      row.ess = dist.ess;
      out.rows.push_back(row);
    }
  }
  return out;
}

void write_predictions_csv(const PredictionOutput& pred, std::ostream& out) {
  out << "c,u,n_seq_used,argmax_j,prob_1,prob_2,prob_3,prob_4,prob_5,prob_6,ess\n";
  for (const auto& row : pred.rows) {
    out << row.character << ',' << orientation_name(row.half_type) << ',' << row.n_seq << ',' << argmax(row.probs);
    for (double p : row.probs) out << ',' << format_double(p);
    out << ',' << format_double(row.ess) << '\n';
  }
}

void write_decoded_csv(std::span<const CharacterDecoding> decodings, std::ostream& out) {
  out << "group,c,n_seq_used,decoded,truth,correct\n";
  for (const auto& d : decodings) {
    for (std::size_t n = 0; n < d.decoded_by_n.size(); ++n) {
      out << d.group << ',' << d.character << ',' << n + 1 << ',' << d.decoded_by_n[n] << ',' << d.truth << ','
          << (d.decoded_by_n[n] == d.truth ? 1 : 0) << '\n';
    }
  }
}

void write_trace_csv(std::span<const TracePoint> trace, std::ostream& out) {
  out << "iteration,elbo\n";
  for (const auto& t : trace) out << t.iteration << ',' << format_double(t.elbo) << '\n';
}

void write_effects_csv(const Checkpoint& model, const EffectSummary& effects, std::ostream& out) {
  out << "m,time_ms,median,lower,upper,prob_nonzero\n";
  for (Eigen::Index m = 0; m < effects.median.size(); ++m) {
    out << m + 1 << ',' << format_double(1000.0 * static_cast<double>(m) / model.sample_rate) << ','
        << format_double(effects.median[m]) << ',' << format_double(effects.lower[m]) << ','
        << format_double(effects.upper[m]) << ',' << format_double(effects.prob_nonzero[m]) << '\n';
  }
}

void write_channels_csv(const Checkpoint& model, const ChannelSummary& channels, std::ostream& out) {
  out << "e,channel,selection_prob,weight,important\n";
  for (Eigen::Index e = 0; e < channels.selection_prob.size(); ++e) {
    const auto idx = static_cast<std::size_t>(e);
    const std::string name = idx < model.channel_names.size() ? model.channel_names[idx] : "";
    out << e + 1 << ',' << name << ',' << format_double(channels.selection_prob[e]) << ','
        << format_double(channels.weight[e]) << ',' << (channels.important[idx] ? 1 : 0) << '\n';
  }
}

void write_coefficients_csv(const Checkpoint& model, const PosteriorDraws& draws, std::ostream& out) {
  const Eigen::MatrixXd beta = draws.beta_tilde(model.hyper.tau);
  const Eigen::MatrixXd alpha = draws.alpha();
  const int count = draws.size();
  out << "channel,m,time_ms,median\n";
  Eigen::MatrixXd samples(count, draws.num_samples());
  for (int e = 0; e < draws.num_channels(); ++e) {
    for (int g = 0; g < count; ++g) samples.row(g) = draws.delta(g, e) * alpha(g, e) * beta.row(g);
    const ColumnQuantiles q = column_quantiles(samples);
    const auto idx = static_cast<std::size_t>(e);
    const std::string name = idx < model.channel_names.size() ? model.channel_names[idx] : std::to_string(e + 1);
    for (int m = 0; m < draws.num_samples(); ++m) {
      out << name << ',' << m + 1 << ',' << format_double(1000.0 * m / model.sample_rate) << ','
          << format_double(q.median[m]) << '\n';
    }
  }
}

void write_sensitivity_csv(std::span<const SensitivityRow> rows, std::ostream& out) {
  int n_max = 0;
  for (const auto& r : rows) n_max = std::max(n_max, r.curve.max_sequences());
  out << "ratio,tau";
  for (int n = 1; n <= n_max; ++n) out << ",acc_n" << n;
  out << ",max_utility,max_utility_n_seq,n_seq_80\n";
  for (const auto& r : rows) {
    out << format_double(r.ratio) << ',' << format_double(r.tau);
    for (int n = 1; n <= n_max; ++n) {
      out << ',';
      if (n <= r.curve.max_sequences()) out << format_double(r.curve.mean[static_cast<std::size_t>(n - 1)]);
    }
    out << ',' << format_double(r.peak.utility) << ',' << r.peak.n_seq << ',';
    if (r.n80) out << *r.n80;
    out << '\n';
  }
}

}  // namespace glass::app
