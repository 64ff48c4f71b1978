#include "acceptance.hpp"

#include "app.hpp"
#include "cli.hpp"
#include "glass/error.hpp"
#include "glass/ingest.hpp"
#include "glass/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace glass::acceptance {

namespace fs = std::filesystem;
using app::RunConfig;

std::string fmt(double v, int digits) {
  std::ostringstream out;
  out << std::setprecision(digits) << v;
  return out.str();
}

namespace {

constexpr int kRecoveryReplicates = 10;
constexpr int kCorruptionReplicates = 5;
constexpr int kPredictionReplicates = 50;

double median_of(std::vector<double> v) { return median(std::move(v)); }

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::current_path() / "acceptance_work" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::vector<std::string>& args, std::string* captured = nullptr) {
  std::ostringstream out, err;
  const int code = app::run_cli(args, out, err);
  if (captured) *captured = out.str() + err.str();
  return code;
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// ---------------------------------------------------------------------------

VariationalParams random_surrogate(int num_channels, int num_samples, Rng& rng) {
  VariationalParams xi = VariationalParams::zeros(num_channels, num_samples);
  for (auto& v : xi.beta_mean) v = 0.6 * standard_normal(rng);
  for (auto& v : xi.beta_rawscale) v = -1.5 + 0.3 * standard_normal(rng);
  xi.sigma_mean = -0.5 + 0.2 * standard_normal(rng);
  xi.sigma_rawscale = -1.0;
  for (auto& v : xi.delta_logit) v = standard_normal(rng);
  for (auto& v : xi.alpha_mean) v = standard_normal(rng);
  for (auto& v : xi.alpha_rawscale) v = -1.0 + 0.3 * standard_normal(rng);
  return xi;
}

Dataset random_dataset(int num_channels, int num_samples, int num_halves, Rng& rng) {
  Dataset data;
  data.num_channels = num_channels;
  data.num_samples = num_samples;
  data.sample_rate = 32.0;
  data.channel_names = default_channel_names(num_channels);
  for (int i = 0; i < num_halves; ++i) {
    HalfSequence half;
    half.key = {i / 2 + 1, 1, i % 2 == 0 ? HalfType::Row : HalfType::Column};
    for (auto& epoch : half.epochs) {
      epoch.resize(num_channels, num_samples);
      for (Eigen::Index k = 0; k < epoch.size(); ++k) epoch.data()[k] = standard_normal(rng);
    }
    half.target = 1 + static_cast<int>(uniform_index(rng, 6));
    data.halves.push_back(std::move(half));
  }
  return data;
}

struct Replicate {
  RecoveryMetrics metrics;
  double tau = 0.0;
};

Replicate recovery_replicate(const std::string& preset, std::uint64_t seed) {
  RunConfig cfg = app::preset_config(preset);
  cfg.seed = seed;
  const app::SimulationOutput sim = app::run_simulation(cfg);
  const app::TrainingOutput trained = app::run_training(sim.train, cfg);
  const Checkpoint& model = trained.models.front().checkpoint;
  return {recovery_metrics(*sim.truth.model, model.draws(), model.hyper), model.hyper.tau};
}

struct RecoverySummary {
  double median_rmse = 0.0;
  double median_angle = 0.0;
  double mean_signal = 0.0;
  double mean_noise = 0.0;
};

RecoverySummary run_recovery(const std::string& preset, int replicates) {
  std::vector<double> rmse, angle, signal, noise;
  for (int r = 1; r <= replicates; ++r) {
    const Replicate rep = recovery_replicate(preset, static_cast<std::uint64_t>(r));
    rmse.push_back(rep.metrics.rmse);
    angle.push_back(rep.metrics.error_angle_deg);
    signal.push_back(rep.metrics.mean_delta_signal);
    noise.push_back(rep.metrics.mean_delta_noise);
  }
  return {median_of(rmse), median_of(angle), mean_of(signal), mean_of(noise)};
}

AccuracyCurve prediction_curve(const std::string& preset, int replicates) {
  std::vector<CharacterDecoding> all;
  for (int r = 1; r <= replicates; ++r) {
    RunConfig cfg = app::preset_config(preset);
    cfg.seed = static_cast<std::uint64_t>(r);
    const app::SimulationOutput sim = app::run_simulation(cfg);
    const app::TrainingOutput trained = app::run_training(sim.train, cfg);
    app::PredictionOutput pred = app::run_prediction(trained.models.front().checkpoint, sim.test, cfg);
    for (auto& d : pred.decodings) {
      d.group = r;
      all.push_back(d);
    }
  }
  return accuracy_by_sequences(all);
}

}  // namespace

Outcome gradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t excluded = 0;
  for (int k = 0; k < 20; ++k) {
    Rng rng = make_rng(derive_seed(2024, static_cast<std::uint64_t>(k)));
    const int e = 1 + k % 4;
    const int m = 1 + (3 * k) % 8;
    const int n = 1 + (5 * k + 2) % 12;
    const double tau = k % 2 == 0 ? 0.0 : 0.3;
    const Dataset data = random_dataset(e, m, n, rng);
    const VariationalParams xi = random_surrogate(e, m, rng);
    GradConfig cfg;
    cfg.mc_samples = 5;
    cfg.seed = static_cast<std::uint64_t>(100 + k);
    const GradientCheck check = check_gradient(xi, data, Hyperparams{tau, 1.0, 0.5}, cfg, 1e-5);
    worst = std::max(worst, check.max_relative_error);
    excluded += check.excluded.size();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-4 && secs < 30.0, "max relative error " + fmt(worst, 3) + " over 20 instances (" +
                                             std::to_string(excluded) + " kink coordinates excluded), " +
                                             fmt(secs, 3) + " s"};
}

Outcome parameter_recovery() {
  const RecoverySummary s = run_recovery("sim1-standard", kRecoveryReplicates);
  const bool pass = s.median_rmse <= 0.20 && s.median_angle <= 12.0 && s.mean_signal >= 0.80 && s.mean_noise <= 0.60;
  return {pass, "median RMSE " + fmt(s.median_rmse) + " (<= 0.20), median angle " + fmt(s.median_angle) +
                    " deg (<= 12), mean delta_signal " + fmt(s.mean_signal) + " (>= 0.80), mean delta_noise " +
                    fmt(s.mean_noise) + " (<= 0.60) over " + std::to_string(kRecoveryReplicates) + " replicates"};
}

Outcome corruption_robustness() {
  bool pass = true;
  std::string detail;
  for (const std::string preset : {"attention-drift", "noisy-eeg"}) {
    const RecoverySummary s = run_recovery(preset, kCorruptionReplicates);
    pass = pass && s.median_rmse <= 0.35 && s.mean_signal >= 0.75;
    detail += (detail.empty() ? "" : "; ") + preset + ": median RMSE " + fmt(s.median_rmse) +
              " (<= 0.35), mean delta_signal " + fmt(s.mean_signal) + " (>= 0.75)";
  }
  return {pass, detail + " over " + std::to_string(kCorruptionReplicates) + " replicates each"};
}

Outcome prediction_behavior() {
  const AccuracyCurve moderate = prediction_curve("sim2-moderate", kPredictionReplicates);
  const AccuracyCurve high = prediction_curve("sim2-high", kPredictionReplicates);
  if (moderate.max_sequences() < 5 || high.max_sequences() < 5) return {false, "fewer than 5 sequences decoded"};
  const double m3 = moderate.mean[2], m4 = moderate.mean[3], m5 = moderate.mean[4];
  const double h5 = high.mean[4];
  const bool pass = m3 <= m4 && m4 <= m5 && m5 >= 0.85 && h5 < m5;
  return {pass, "moderate accuracy n=3,4,5: " + fmt(m3) + ", " + fmt(m4) + ", " + fmt(m5) +
                    " (nondecreasing, >= 0.85 at 5); high noise n=5: " + fmt(h5) + " (< moderate) over " +
                    std::to_string(kPredictionReplicates) + " replicates"};
}

Outcome analytic_invariants() {
  std::vector<std::string> failures;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  Rng rng = make_rng(77);

  double softmax_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    Simplex6 eta{};
    for (double& v : eta) v = 5.0 * standard_normal(rng);
    const Simplex6 p = softmax(eta);
    const double shift = 50.0 * standard_normal(rng);
    Simplex6 shifted = eta;
    for (double& v : shifted) v += shift;
    const Simplex6 q = softmax(shifted);
    softmax_err = std::max(softmax_err, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
    for (int j = 0; j < kStimuliPerHalf; ++j) softmax_err = std::max(softmax_err, std::abs(p[j] - q[j]));
  }
  require(softmax_err <= 1e-9, "softmax error " + fmt(softmax_err, 3));

  double projection_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd a(5);
    for (auto& v : a) v = standard_normal(rng);
    const double scale = std::exp(3.0 * standard_normal(rng));
    const Eigen::VectorXd u = project_to_sphere(a);
    projection_err = std::max({projection_err, (u - project_to_sphere(scale * a)).cwiseAbs().maxCoeff(),
                               std::abs(u.norm() - 1.0)});
  }
  require(projection_err <= 1e-9, "projection error " + fmt(projection_err, 3));
  const Eigen::VectorXd triangle = project_to_sphere(Eigen::Vector3d(3.0, 4.0, 0.0));
  require(std::abs(triangle[0] - 0.6) <= 1e-15 && std::abs(triangle[1] - 0.8) <= 1e-15, "3-4-5 projection");

  bool contraction = true;
  for (int k = 0; k < 2000; ++k) {
    const double x = 4.0 * standard_normal(rng), y = 4.0 * standard_normal(rng);
    const double tau = std::abs(standard_normal(rng));
    contraction = contraction &&
                  std::abs(soft_threshold(x, tau) - soft_threshold(y, tau)) <= std::abs(x - y) * (1.0 + 1e-12) &&
                  std::abs(soft_threshold(x, tau)) <= std::abs(x) && soft_threshold(x, 0.0) == x;
  }
  require(contraction, "soft-threshold contraction");

  double fusion_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::array<PredictiveDist, 3> d;
    for (auto& dist : d) {
      double total = 0.0;
      for (double& v : dist.probs) total += (v = uniform_open(rng));
      for (double& v : dist.probs) v /= total;
    }
    PredictiveDist uniform;
    uniform.probs.fill(1.0 / 6.0);
    const Simplex6 with_uniform = fuse_halfsequences(std::vector<PredictiveDist>{d[0], uniform});
    const Simplex6 single = fuse_halfsequences(std::vector<PredictiveDist>{d[0]});
    PredictiveDist ab;
    ab.probs = fuse_halfsequences(std::vector<PredictiveDist>{d[0], d[1]});
    const Simplex6 left = fuse_halfsequences(std::vector<PredictiveDist>{ab, d[2]});
    const Simplex6 all = fuse_halfsequences(std::vector<PredictiveDist>{d[0], d[1], d[2]});
    for (int j = 0; j < kStimuliPerHalf; ++j) {
      fusion_err = std::max({fusion_err, std::abs(with_uniform[j] - d[0].probs[j]), std::abs(single[j] - d[0].probs[j]),
                             std::abs(left[j] - all[j])});
    }
  }
  require(fusion_err <= 1e-9, "fusion error " + fmt(fusion_err, 3));

  bool clamp = true;
  const TimingConfig timing;
  for (int k = 0; k <= 50; ++k) {
    const double p = 0.01 * k;
    for (int n = 1; n <= 15; ++n) clamp = clamp && bci_utility(p, n, timing) == 0.0;
  }
  clamp = clamp && bci_utility(0.9, 5, timing) > 0.0;
  require(clamp, "utility clamp");

  {
    Rng data_rng = make_rng(5);
    const Dataset thin = random_dataset(2, 8, 3, data_rng);  // 5N = 15 < EM = 16
    const IdentifiabilityReport flagged = identifiability_check(thin);
    require(!flagged.full_column_rank && flagged.rows == 15 && flagged.cols == 16 &&
                flagged.message.find("5N") != std::string::npos,
            "5N < EM not flagged");
    const Dataset wide = random_dataset(2, 3, 4, data_rng);  // 5N = 20 >= EM = 6
    const IdentifiabilityReport ok = identifiability_check(wide);
    require(ok.full_column_rank && ok.rank == 6, "5N >= EM random design not full rank");
  }

  require(epoch_length(800.0, 256.0) == 205, "M at 256 Hz is " + std::to_string(epoch_length(800.0, 256.0)));

  std::string detail = "softmax " + fmt(softmax_err, 2) + ", projection " + fmt(projection_err, 2) + ", fusion " +
                       fmt(fusion_err, 2) + ", contraction, utility clamp, 5N < EM flag, M = 205 at 256 Hz";
  if (!failures.empty()) {
    detail = "failed:";
    for (const auto& f : failures) detail += " [" + f + "]";
  }
  return {failures.empty(), detail};
}

Outcome sensitivity_harness() {
  const fs::path dir = work_dir("sensitivity");
  const std::string sim = (dir / "sim").string();
  std::string log;
  if (cli({"simulate", "--preset", "sim2-moderate", "--seed", "21", "--out", sim}, &log) != 0) {
    return {false, "simulate failed: " + log};
  }
  const std::string out = (dir / "grid").string();
  const int code = cli({"sensitivity", "--preset", "sim2-moderate", "--seed", "21", "--data", sim + "/train.glass",
                        "--test", sim + "/test.glass", "--shrinkage-ratio", "0,0.5,1,2", "--out", out},
                       &log);
  if (code != 0) return {false, "sensitivity exited " + std::to_string(code) + ": " + log};
  std::ifstream in(dir / "grid" / "sensitivity.csv");
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<double, double>> rows;
  std::vector<std::string> accuracy;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.emplace_back(std::stod(cells[0]), std::stod(cells[1]));
    accuracy.push_back(cells.size() > 6 ? cells[6] : "?");
  }
  bool monotone = rows.size() == 4 && rows.front().second == 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    monotone = monotone && rows[k].first > rows[k - 1].first && rows[k].second > rows[k - 1].second;
  }
  std::string table;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    table += (k ? "; " : "") + fmt(rows[k].first) + " -> tau " + fmt(rows[k].second, 3) + ", acc@5 " +
             fmt(std::stod(accuracy[k]), 3);
  }
  return {monotone, "ratio grid " + table + (monotone ? " (tau increasing)" : " (tau not monotone)")};
}

Outcome determinism() {
  const fs::path dir = work_dir("determinism");
  auto pipeline = [&](const std::string& tag) -> std::string {
    const std::string root = (dir / tag).string();
    const std::vector<std::vector<std::string>> steps = {
        {"simulate", "--preset", "sim2-moderate", "--seed", "9", "--out", root + "/sim"},
        {"simulate", "--preset", "sim2-moderate", "--seed", "9", "--csv", "--out", root + "/sim_csv"},
        {"fit", "--preset", "sim2-moderate", "--seed", "9", "--iterations", "300", "--draws", "500", "--data",
         root + "/sim/train.glass", "--out", root + "/fit"},
        {"fit", "--preset", "sim2-moderate", "--seed", "9", "--iterations", "200", "--draws", "300",
         "--shrinkage-ratio", "0,1", "--less-training", "--data", root + "/sim_csv/train.csv", "--out",
         root + "/grid"},
        {"predict", "--model", root + "/fit", "--data", root + "/sim/test.glass", "--out", root + "/predict"},
        {"summarize", "--model", root + "/fit/model.json", "--out", root + "/summary"},
        {"evaluate", "--model", root + "/fit", "--data", root + "/sim/test.glass", "--out", root + "/evaluate"},
    };
    for (const auto& step : steps) {
      std::string log;
      const int code = cli(step, &log);
      if (code != 0) return step.front() + " exited " + std::to_string(code) + ": " + log;
    }
    return "";
  };
  for (const std::string tag : {"a", "b"}) {
    const std::string problem = pipeline(tag);
    if (!problem.empty()) return {false, problem};
  }
  int files = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir / "a");
    ++files;
    if (!fs::exists(dir / "b" / rel) || read_all(entry.path()) != read_all(dir / "b" / rel)) {
      differing.push_back(rel.string());
    }
  }

  // Library level: the standard-size simulator and one gradient evaluation.
  RunConfig cfg = app::preset_config("noisy-eeg");
  cfg.seed = 4;
  std::ostringstream first, second;
  write_dataset_csv(app::run_simulation(cfg).train, first);
  write_dataset_csv(app::run_simulation(cfg).train, second);
  const bool simulator_same = first.str() == second.str();

  const std::string detail = std::to_string(files) + " pipeline files compared (simulate, fit, grid fit, predict, "
                             "summarize, evaluate), " + std::to_string(differing.size()) +
                             " differ; standard-size simulator " + (simulator_same ? "identical" : "differs");
  return {files > 0 && differing.empty() && simulator_same, detail};
}

std::vector<Criterion> all_criteria() {
  return {
      {"gradient", gradient_correctness},       {"recovery", parameter_recovery},
      {"corruption", corruption_robustness},    {"prediction", prediction_behavior},
      {"invariants", analytic_invariants},      {"sensitivity", sensitivity_harness},
      {"determinism", determinism},
  };
}

}  // namespace glass::acceptance
