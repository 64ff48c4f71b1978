#include "cli.hpp"

#include "app.hpp"
#include "glass/error.hpp"
#include "glass/summary.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace glass::app {

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<double> step_size;
  std::optional<int> mc_samples;
  std::optional<double> tau;
  std::vector<double> ratios;
  int less_training = 0;
  std::optional<int> draws;
  std::string weighting;
  std::optional<int> max_sequences;
  std::optional<int> threads;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--preset", o.preset, "Named preset applied before the config file");
  cmd->add_option("--config", o.config, "YAML run configuration");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--threads", o.threads, "Upper bound on worker threads")->check(CLI::PositiveNumber);
}

void add_fit_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--iterations", o.iterations, "Adam iterations")->check(CLI::NonNegativeNumber);
  cmd->add_option("--step-size", o.step_size, "Adam step size");
  cmd->add_option("--mc-samples", o.mc_samples, "Monte Carlo draws per gradient");
  cmd->add_option("--tau", o.tau, "Soft threshold; skips calibration");
  cmd->add_option("--shrinkage-ratio", o.ratios, "Calibration ratio(s), comma separated")->delimiter(',');
  cmd->add_flag("--less-training{3}", o.less_training, "Train on the first k sequences per character (k = 3)");
  cmd->add_option("--draws", o.draws, "Posterior draws stored with the model");
}

void add_predict_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--weighting", o.weighting, "importance or uniform")
      ->check(CLI::IsMember({"importance", "uniform"}));
  cmd->add_option("--max-sequences", o.max_sequences, "Use at most this many sequences per character");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  if (!o.preset.empty()) cfg = preset_config(o.preset);
  if (!o.config.empty()) cfg = load_config(o.config, cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.iterations) cfg.fit.iterations = *o.iterations;
  if (o.step_size) cfg.fit.step_size = *o.step_size;
  if (o.mc_samples) cfg.fit.grad.mc_samples = *o.mc_samples;
  if (o.tau) cfg.tau = *o.tau;
  if (!o.ratios.empty()) cfg.shrinkage_ratios = o.ratios;
  if (o.less_training > 0) cfg.less_training = o.less_training;
  if (o.draws) cfg.draws = *o.draws;
  if (o.weighting == "importance") cfg.weighting = Weighting::Importance;
  if (o.weighting == "uniform") cfg.weighting = Weighting::Uniform;
  if (o.max_sequences) cfg.max_sequences = *o.max_sequences;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream text;
  body(text);
  write_text_file(path, text.str());
}

void prepare_output(const fs::path& dir, const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_text_file(dir / "resolved_config.yaml", emit_config(cfg));
  write_text_file(dir / "VERSION", std::string("glass ") + GLASS_VERSION_STRING + "\n");
}

fs::path model_file(const fs::path& path) { return fs::is_directory(path) ? path / "model.json" : path; }

std::string ratio_label(double r) { return "ratio_" + format_double(r); }

void write_dataset_as(const Dataset& data, const fs::path& path, bool csv) {
  if (csv) {
    write_file(path, [&](std::ostream& os) { write_dataset_csv(data, os); });
  } else {
    write_dataset(data, path);
  }
}

void write_model(const TrainedModel& model, const fs::path& dir, const RunConfig& cfg) {
  prepare_output(dir, cfg);
  write_checkpoint(model.checkpoint, dir / "model.json");
  write_file(dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(model.trace, os); });
}

void report_identifiability(const IdentifiabilityReport& report, std::ostream& err) {
  if (!report.full_column_rank) err << "warning: " << report.message << '\n';
}

AccuracyCurve write_metrics(std::span<const CharacterDecoding> decodings, const TimingConfig& timing,
                            const fs::path& dir, std::ostream& out) {
  const AccuracyCurve curve = accuracy_by_sequences(decodings);
  write_file(dir / "metrics.csv", [&](std::ostream& os) { write_metrics_csv(curve, timing, os); });
  write_file(dir / "decoded.csv", [&](std::ostream& os) { write_decoded_csv(decodings, os); });
  for (int n = 1; n <= curve.max_sequences(); ++n) {
    out << "n_seq " << n << ": accuracy " << format_double(curve.mean[static_cast<std::size_t>(n - 1)]) << '\n';
  }
  const auto n80 = n_seq_80(curve);
  out << "n_seq_80: " << (n80 ? std::to_string(*n80) : std::string("none")) << '\n';
  return curve;
}

// Symbol of each character index from the row and column labels.
std::vector<char> truth_symbols(const Dataset& data, const Keyboard& kb) {
  std::vector<std::pair<int, int>> targets;
  for (const auto& half : data.halves) {
    if (!half.target) continue;
    const auto c = static_cast<std::size_t>(half.key.character);
    if (targets.size() < c) targets.resize(c, {0, 0});
    auto& slot = targets[c - 1];
    (half.key.half_type == HalfType::Row ? slot.first : slot.second) = *half.target;
  }
  std::vector<char> truth;
  for (const auto& [row, col] : targets) truth.push_back(row && col ? kb.at(row, col) : '?');
  return truth;
}

int cmd_simulate(const Overrides& o, const fs::path& out_dir, bool csv, std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const SimulationOutput sim = run_simulation(cfg);
  prepare_output(out_dir, cfg);
  const char* ext = csv ? ".csv" : ".glass";
  write_dataset_as(sim.train, out_dir / (std::string("train") + ext), csv);
  write_dataset_as(sim.test, out_dir / (std::string("test") + ext), csv);
  write_truth(sim.truth, out_dir / "truth.json");
  out << "wrote " << sim.train.size() << " training and " << sim.test.size() << " test half-sequences to "
      << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_fit(const Overrides& o, const fs::path& data_path, const fs::path& out_dir, std::ostream& out,
            std::ostream& err) {
  const RunConfig cfg = resolve(o);
  const Dataset data = load_dataset(data_path);
  const TrainingOutput trained = run_training(data, cfg);
  report_identifiability(trained.identifiability, err);
  prepare_output(out_dir, cfg);
  if (trained.models.size() == 1) {
    write_model(trained.models.front(), out_dir, cfg);
  } else {
    for (const auto& model : trained.models) {
      write_model(model, out_dir / ratio_label(model.checkpoint.shrinkage_ratio), cfg);
    }
  }
  write_file(out_dir / "calibration.csv", [&](std::ostream& os) {
    os << "ratio,tau,baseline_median_abs_effect\n";
    for (const auto& model : trained.models) {
      os << format_double(model.checkpoint.shrinkage_ratio) << ',' << format_double(model.checkpoint.hyper.tau) << ',';
      if (trained.baseline_median) os << format_double(*trained.baseline_median);
      os << '\n';
    }
  });
  for (const auto& model : trained.models) {
    out << "ratio " << format_double(model.checkpoint.shrinkage_ratio) << ": tau "
        << format_double(model.checkpoint.hyper.tau);
    if (!model.trace.empty()) out << ", final elbo " << format_double(model.trace.back().elbo);
    out << '\n';
  }
  return kExitOk;
}

int cmd_predict(const Overrides& o, const fs::path& model_path, const fs::path& data_path, const fs::path& out_dir,
                std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const Checkpoint model = read_checkpoint(model_file(model_path));
  const Dataset data = load_dataset(data_path);
  const PredictionOutput pred = run_prediction(model, data, cfg);
  prepare_output(out_dir, cfg);
  write_file(out_dir / "predictions.csv", [&](std::ostream& os) { write_predictions_csv(pred, os); });
  write_file(out_dir / "decoded.csv", [&](std::ostream& os) { write_decoded_csv(pred.decodings, os); });
  out << "predicted " << pred.decodings.size() << " characters, importance ESS " << format_double(pred.ess)
      << (pred.degenerate ? " (degenerate weights)" : "") << '\n';
  return kExitOk;
}

int cmd_summarize(const Overrides& o, const fs::path& model_path, const fs::path& out_dir, std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const Checkpoint model = read_checkpoint(model_file(model_path));
  const PosteriorDraws draws = model.draws();
  const EffectSummary effects = summarize_effects(draws, model.hyper);
  const ChannelSummary channels = summarize_channels(draws);
  prepare_output(out_dir, cfg);
  write_file(out_dir / "effects.csv", [&](std::ostream& os) { write_effects_csv(model, effects, os); });
  write_file(out_dir / "channels.csv", [&](std::ostream& os) { write_channels_csv(model, channels, os); });
  write_file(out_dir / "coefficients.csv", [&](std::ostream& os) { write_coefficients_csv(model, draws, os); });
  int important = 0;
  for (bool b : channels.important) important += b ? 1 : 0;
  out << important << " of " << channels.important.size() << " channels have selection probability >= "
      << format_double(kImportantChannelProb) << '\n';
  return kExitOk;
}

int cmd_evaluate(const Overrides& o, const std::string& model_path, const std::string& scores_path,
                 const fs::path& data_path, const fs::path& out_dir, std::ostream& out) {
  const RunConfig cfg = resolve(o);
  if (model_path.empty() == scores_path.empty()) throw ConfigError("evaluate needs exactly one of --model or --scores");
  const Dataset data = load_dataset(data_path);
  std::vector<CharacterDecoding> decodings;
  if (!model_path.empty()) {
    decodings = run_prediction(read_checkpoint(model_file(model_path)), data, cfg).decodings;
  } else {
    std::ifstream in(scores_path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + scores_path);
    std::vector<StimulusScore> scores = read_scores_csv(in);
    if (cfg.max_sequences > 0) {
      std::erase_if(scores, [&](const StimulusScore& s) { return s.sequence > cfg.max_sequences; });
    }
    const Keyboard kb;
    decodings = decode_scores(scores, kb, truth_symbols(data, kb));
  }
  prepare_output(out_dir, cfg);
  write_metrics(decodings, data.timing, out_dir, out);
  return kExitOk;
}

int cmd_sensitivity(const Overrides& o, const fs::path& train_path, const fs::path& test_path,
                    const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  Overrides grid = o;
  if (grid.ratios.empty()) grid.ratios = {0.0, 0.5, 1.0, 2.0};
  const RunConfig cfg = resolve(grid);
  if (cfg.tau) throw ConfigError("sensitivity calibrates tau; do not pass --tau");
  const Dataset train = load_dataset(train_path);
  const Dataset test = load_dataset(test_path);
  const TrainingOutput trained = run_training(train, cfg);
  report_identifiability(trained.identifiability, err);
  prepare_output(out_dir, cfg);
  std::vector<SensitivityRow> rows;
  for (const auto& model : trained.models) {
    const fs::path dir = out_dir / ratio_label(model.checkpoint.shrinkage_ratio);
    write_model(model, dir, cfg);
    const PredictionOutput pred = run_prediction(model.checkpoint, test, cfg);
    SensitivityRow row;
    row.ratio = model.checkpoint.shrinkage_ratio;
    row.tau = model.checkpoint.hyper.tau;
    std::ostringstream ignored;
    row.curve = write_metrics(pred.decodings, test.timing, dir, ignored);
    row.peak = max_utility(row.curve, test.timing);
    row.n80 = n_seq_80(row.curve);
    rows.push_back(std::move(row));
  }
  write_file(out_dir / "sensitivity.csv", [&](std::ostream& os) { write_sensitivity_csv(rows, os); });
  write_sensitivity_csv(rows, out);
  return kExitOk;
}

int exit_code(const Error& err) {
  switch (err.code()) {
    case ErrorCode::NonFinite:
      return kExitNonFinite;
    case ErrorCode::DimensionMismatch:
      return kExitDimension;
    case ErrorCode::InvalidArgument:
      return kExitConfig;
    default:
      return kExitFailure;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian constrained multinomial logistic regression for P300 spellers", "glass"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("glass ") + GLASS_VERSION_STRING);

  Overrides o;
  std::string out_dir, data, test, model, scores;
  bool csv = false;

  auto* simulate = app.add_subcommand("simulate", "Simulate training and test datasets");
  add_config_options(simulate, o);
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_flag("--csv", csv, "Write datasets as CSV instead of the binary container");

  auto* fit = app.add_subcommand("fit", "Calibrate tau and fit the variational posterior");
  add_config_options(fit, o);
  add_fit_options(fit, o);
  fit->add_option("--data", data, "Training dataset")->required();
  fit->add_option("--out", out_dir, "Output directory")->required();

  auto* predict = app.add_subcommand("predict", "Predictive distributions and decoded characters");
  add_config_options(predict, o);
  add_predict_options(predict, o);
  predict->add_option("--model", model, "Model file or fit output directory")->required();
  predict->add_option("--data", data, "Dataset to decode")->required();
  predict->add_option("--out", out_dir, "Output directory")->required();

  auto* summarize = app.add_subcommand("summarize", "Posterior summaries of effects and channels");
  add_config_options(summarize, o);
  summarize->add_option("--model", model, "Model file or fit output directory")->required();
  summarize->add_option("--out", out_dir, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Accuracy and utility by number of sequences");
  add_config_options(evaluate, o);
  add_predict_options(evaluate, o);
  evaluate->add_option("--model", model, "Model file or fit output directory");
  evaluate->add_option("--scores", scores, "External score CSV (c,s,u,j,score)");
  evaluate->add_option("--data", data, "Labeled dataset")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();

  auto* sensitivity = app.add_subcommand("sensitivity", "Shrinkage-ratio grid with a comparison table");
  add_config_options(sensitivity, o);
  add_fit_options(sensitivity, o);
  add_predict_options(sensitivity, o);
  sensitivity->add_option("--data", data, "Training dataset")->required();
  sensitivity->add_option("--test", test, "Test dataset")->required();
  sensitivity->add_option("--out", out_dir, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(o, out_dir, csv, out);
    if (*fit) return cmd_fit(o, data, out_dir, out, err);
    if (*predict) return cmd_predict(o, model, data, out_dir, out);
    if (*summarize) return cmd_summarize(o, model, out_dir, out);
    if (*evaluate) return cmd_evaluate(o, model, scores, data, out_dir, out);
    if (*sensitivity) return cmd_sensitivity(o, data, test, out_dir, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace glass::app
