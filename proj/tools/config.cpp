#include "app.hpp"

#include "glass/error.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace glass::app {

namespace {

// Template noise level and effect size of the model-based recovery presets.
constexpr double kRecoveryNoiseVar = 1.0;
constexpr double kRecoverySpatialCorr = 0.0;
constexpr double kRecoveryEffectScale = 0.22;

std::string where(const std::string& source, const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) return source;
  return source + ":" + std::to_string(mark.line + 1);
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& source, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(where(source, node) + ": '" + key + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(source, node) + ": cannot read '" + key + "' from '" + node.Scalar() + "'");
  }
}

using Setter = std::function<void(const YAML::Node&)>;

void apply_section(const YAML::Node& node, const std::string& source, const std::string& section,
                   const std::map<std::string, Setter>& setters) {
  if (!node.IsMap()) throw ConfigError(where(source, node) + ": '" + section + "' must be a mapping");
  for (const auto& item : node) {
    const std::string key = item.first.as<std::string>();
    const auto it = setters.find(key);
    if (it == setters.end()) {
      const std::string scope = section.empty() ? "" : " in '" + section + "'";
      throw ConfigError(where(source, item.first) + ": unknown key '" + key + "'" + scope);
    }
    it->second(item.second);
  }
}

Generator parse_generator(const std::string& text, const std::string& at) {
  if (text == "generative") return Generator::Generative;
  if (text == "model") return Generator::Model;
  throw ConfigError(at + ": generator must be 'generative' or 'model', got '" + text + "'");
}

Weighting parse_weighting(const std::string& text, const std::string& at) {
  if (text == "importance") return Weighting::Importance;
  if (text == "uniform") return Weighting::Uniform;
  throw ConfigError(at + ": weighting must be 'importance' or 'uniform', got '" + text + "'");
}

RunConfig sim2(NoiseLevel level, const char* name) {
  RunConfig cfg;
  cfg.preset = name;
  cfg.simulate.generator = Generator::Generative;
  cfg.simulate.train = generative_preset(level);
  cfg.simulate.test_characters = 19;
  cfg.simulate.test_sequences = 5;
  return cfg;
}

RunConfig sim1(const char* name) {
  RunConfig cfg;
  cfg.preset = name;
  cfg.simulate.generator = Generator::Model;
  cfg.simulate.train = standard_template_config();
  cfg.simulate.train.noise_var = kRecoveryNoiseVar;
  cfg.simulate.train.spatial_corr = kRecoverySpatialCorr;
  cfg.simulate.erp_gain = 0.0;
  cfg.simulate.effect_scale = kRecoveryEffectScale;
  cfg.simulate.test_characters = 19;
  cfg.simulate.test_sequences = 15;
  return cfg;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid configuration: " + msg); };
  try {
    simulate.train.validate();
    corruption.validate();
    hyper.validate();
    fit.validate();
    timing.validate();
  } catch (const Error& err) {
    fail(err.what());
  }
  if (simulate.test_characters < 0 || simulate.test_sequences < 0) fail("test sizes must be >= 0");
  if (tau && !(*tau >= 0.0)) fail("tau must be >= 0");
  if (shrinkage_ratios.empty()) fail("shrinkage_ratio needs at least one value");
  for (double r : shrinkage_ratios) {
    if (!(r >= 0.0)) fail("shrinkage ratios must be >= 0");
  }
  if (less_training < 0) fail("less_training must be >= 0");
  if (draws < 1) fail("draws must be >= 1");
  if (max_sequences < 0) fail("max_sequences must be >= 0");
  if (threads < 1) fail("threads must be >= 1");
}

std::vector<std::string> preset_names() {
  return {"sim2-moderate", "sim2-high", "sim1-standard", "less-training", "attention-drift", "noisy-eeg"};
}

RunConfig preset_config(std::string_view name) {
  if (name == "sim2-moderate") return sim2(NoiseLevel::Moderate, "sim2-moderate");
  if (name == "sim2-high") return sim2(NoiseLevel::High, "sim2-high");
  if (name == "sim1-standard") return sim1("sim1-standard");
  if (name == "less-training") {
    RunConfig cfg = sim1("less-training");
    cfg.less_training = 3;
    return cfg;
  }
  if (name == "attention-drift") {
    RunConfig cfg = sim1("attention-drift");
    cfg.corruption.apply_drift = true;
    cfg.corruption.drift_prob = 0.10;
    return cfg;
  }
  if (name == "noisy-eeg") {
    RunConfig cfg = sim1("noisy-eeg");
    cfg.corruption.apply_noise = true;
    cfg.corruption.noisy_ar_coef = 0.5;
    cfg.corruption.noisy_var = 1.0;
    return cfg;
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

RunConfig parse_config(const std::string& yaml_text, const std::string& source, RunConfig base) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& err) {
    throw ConfigError(source + ":" + std::to_string(err.mark.line + 1) + ": " + err.msg);
  }
  if (root.IsNull()) return base;

  // A preset named in the file replaces the base before the other keys apply.
  if (root.IsMap() && root["preset"]) {
    const YAML::Node node = root["preset"];
    const auto name = scalar<std::string>(node, source, "preset");
    try {
      base = preset_config(name);
    } catch (const ConfigError& err) {
      throw ConfigError(where(source, node) + ": " + err.what());
    }
  }

  RunConfig& c = base;
  auto num = [&](double& field, const char* key) {
    return Setter([&field, &source, key](const YAML::Node& n) { field = scalar<double>(n, source, key); });
  };
  auto count = [&](int& field, const char* key) {
    return Setter([&field, &source, key](const YAML::Node& n) { field = scalar<int>(n, source, key); });
  };
  auto flag = [&](bool& field, const char* key) {
    return Setter([&field, &source, key](const YAML::Node& n) { field = scalar<bool>(n, source, key); });
  };
  GenerativeConfig& g = c.simulate.train;

  const std::map<std::string, Setter> simulate = {
      {"generator",
       [&](const YAML::Node& n) {
         c.simulate.generator = parse_generator(scalar<std::string>(n, source, "generator"), where(source, n));
       }},
      {"num_channels", count(g.num_channels, "num_channels")},
      {"num_samples", count(g.num_samples, "num_samples")},
      {"sample_rate", num(g.sample_rate, "sample_rate")},
      {"characters", count(g.characters, "characters")},
      {"sequences", count(g.sequences, "sequences")},
      {"test_characters", count(c.simulate.test_characters, "test_characters")},
      {"test_sequences", count(c.simulate.test_sequences, "test_sequences")},
      {"ar_coef", num(g.ar_coef, "ar_coef")},
      {"noise_var", num(g.noise_var, "noise_var")},
      {"spatial_corr", num(g.spatial_corr, "spatial_corr")},
      {"erp_gain", num(c.simulate.erp_gain, "erp_gain")},
      {"effect_scale", num(c.simulate.effect_scale, "effect_scale")},
      {"text", [&](const YAML::Node& n) { g.text = scalar<std::string>(n, source, "text"); }},
  };
  const std::map<std::string, Setter> corruption = {
      {"drift", flag(c.corruption.apply_drift, "drift")},
      {"drift_prob", num(c.corruption.drift_prob, "drift_prob")},
      {"noise", flag(c.corruption.apply_noise, "noise")},
      {"noise_ar_coef", num(c.corruption.noisy_ar_coef, "noise_ar_coef")},
      {"noise_var", num(c.corruption.noisy_var, "noise_var")},
  };
  const std::map<std::string, Setter> model = {
      {"tau",
       [&](const YAML::Node& n) {
         if (n.IsScalar() && n.Scalar() == "auto") {
           c.tau.reset();
         } else {
           c.tau = scalar<double>(n, source, "tau");
         }
       }},
      {"shrinkage_ratio",
       [&](const YAML::Node& n) {
         c.shrinkage_ratios.clear();
         if (n.IsSequence()) {
           for (const auto& v : n) c.shrinkage_ratios.push_back(scalar<double>(v, source, "shrinkage_ratio"));
         } else {
           c.shrinkage_ratios.push_back(scalar<double>(n, source, "shrinkage_ratio"));
         }
       }},
      {"cauchy_scale", num(c.hyper.cauchy_scale, "cauchy_scale")},
      {"delta_prior", num(c.hyper.delta_prior, "delta_prior")},
  };
  const std::map<std::string, Setter> fit = {
      {"iterations", count(c.fit.iterations, "iterations")},
      {"step_size", num(c.fit.step_size, "step_size")},
      {"mc_samples", count(c.fit.grad.mc_samples, "mc_samples")},
      {"relax_temperature", num(c.fit.grad.relax_temperature, "relax_temperature")},
      {"trace_every", count(c.fit.trace_every, "trace_every")},
      {"adam_beta1", num(c.fit.adam_beta1, "adam_beta1")},
      {"adam_beta2", num(c.fit.adam_beta2, "adam_beta2")},
      {"adam_eps", num(c.fit.adam_eps, "adam_eps")},
      {"less_training", count(c.less_training, "less_training")},
  };
  const std::map<std::string, Setter> predict = {
      {"draws", count(c.draws, "draws")},
      {"weighting",
       [&](const YAML::Node& n) {
         c.weighting = parse_weighting(scalar<std::string>(n, source, "weighting"), where(source, n));
       }},
      {"max_sequences", count(c.max_sequences, "max_sequences")},
  };
  const std::map<std::string, Setter> timing = {
      {"flash_ms", num(c.timing.flash_ms, "flash_ms")},
      {"isi_ms", num(c.timing.isi_ms, "isi_ms")},
      {"pause_s", num(c.timing.pause_s, "pause_s")},
      {"window_ms", num(c.timing.window_ms, "window_ms")},
  };
  const std::map<std::string, Setter> runtime = {
      {"threads", count(c.threads, "threads")},
  };
  auto section = [&](const char* name, const std::map<std::string, Setter>& setters) {
    return Setter([&, name](const YAML::Node& n) { apply_section(n, source, name, setters); });
  };
  const std::map<std::string, Setter> top = {
      {"seed", [&](const YAML::Node& n) { c.seed = scalar<std::uint64_t>(n, source, "seed"); }},
      {"preset", [](const YAML::Node&) {}},
      {"simulate", section("simulate", simulate)},
      {"corruption", section("corruption", corruption)},
      {"model", section("model", model)},
      {"fit", section("fit", fit)},
      {"predict", section("predict", predict)},
      {"timing", section("timing", timing)},
      {"runtime", section("runtime", runtime)},
  };
  apply_section(root, source, "", top);
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string(), std::move(base));
}

std::string emit_config(const RunConfig& c) {
  const GenerativeConfig& g = c.simulate.train;
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "preset" << YAML::Value << c.preset;

  out << YAML::Key << "simulate" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "generator" << YAML::Value
      << (c.simulate.generator == Generator::Generative ? "generative" : "model");
  out << YAML::Key << "num_channels" << YAML::Value << g.num_channels;
  out << YAML::Key << "num_samples" << YAML::Value << g.num_samples;
  out << YAML::Key << "sample_rate" << YAML::Value << format_double(g.sample_rate);
  out << YAML::Key << "characters" << YAML::Value << g.characters;
  out << YAML::Key << "sequences" << YAML::Value << g.sequences;
  out << YAML::Key << "test_characters" << YAML::Value << c.simulate.test_characters;
  out << YAML::Key << "test_sequences" << YAML::Value << c.simulate.test_sequences;
  out << YAML::Key << "ar_coef" << YAML::Value << format_double(g.ar_coef);
  out << YAML::Key << "noise_var" << YAML::Value << format_double(g.noise_var);
  out << YAML::Key << "spatial_corr" << YAML::Value << format_double(g.spatial_corr);
  out << YAML::Key << "erp_gain" << YAML::Value << format_double(c.simulate.erp_gain);
  out << YAML::Key << "effect_scale" << YAML::Value << format_double(c.simulate.effect_scale);
  out << YAML::Key << "text" << YAML::Value << YAML::DoubleQuoted << g.text;
  out << YAML::EndMap;

  out << YAML::Key << "corruption" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "drift" << YAML::Value << c.corruption.apply_drift;
  out << YAML::Key << "drift_prob" << YAML::Value << format_double(c.corruption.drift_prob);
  out << YAML::Key << "noise" << YAML::Value << c.corruption.apply_noise;
  out << YAML::Key << "noise_ar_coef" << YAML::Value << format_double(c.corruption.noisy_ar_coef);
  out << YAML::Key << "noise_var" << YAML::Value << format_double(c.corruption.noisy_var);
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tau" << YAML::Value;
  if (c.tau) {
    out << format_double(*c.tau);
  } else {
    out << "auto";
  }
  out << YAML::Key << "shrinkage_ratio" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double r : c.shrinkage_ratios) out << format_double(r);
  out << YAML::EndSeq;
  out << YAML::Key << "cauchy_scale" << YAML::Value << format_double(c.hyper.cauchy_scale);
  out << YAML::Key << "delta_prior" << YAML::Value << format_double(c.hyper.delta_prior);
  out << YAML::EndMap;

  out << YAML::Key << "fit" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "iterations" << YAML::Value << c.fit.iterations;
  out << YAML::Key << "step_size" << YAML::Value << format_double(c.fit.step_size);
  out << YAML::Key << "mc_samples" << YAML::Value << c.fit.grad.mc_samples;
  out << YAML::Key << "relax_temperature" << YAML::Value << format_double(c.fit.grad.relax_temperature);
  out << YAML::Key << "trace_every" << YAML::Value << c.fit.trace_every;
  out << YAML::Key << "adam_beta1" << YAML::Value << format_double(c.fit.adam_beta1);
  out << YAML::Key << "adam_beta2" << YAML::Value << format_double(c.fit.adam_beta2);
  out << YAML::Key << "adam_eps" << YAML::Value << format_double(c.fit.adam_eps);
  out << YAML::Key << "less_training" << YAML::Value << c.less_training;
  out << YAML::EndMap;

  out << YAML::Key << "predict" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "draws" << YAML::Value << c.draws;
  out << YAML::Key << "weighting" << YAML::Value
      << (c.weighting == Weighting::Importance ? "importance" : "uniform");
  out << YAML::Key << "max_sequences" << YAML::Value << c.max_sequences;
  out << YAML::EndMap;

  out << YAML::Key << "timing" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "flash_ms" << YAML::Value << format_double(c.timing.flash_ms);
  out << YAML::Key << "isi_ms" << YAML::Value << format_double(c.timing.isi_ms);
  out << YAML::Key << "pause_s" << YAML::Value << format_double(c.timing.pause_s);
  out << YAML::Key << "window_ms" << YAML::Value << format_double(c.timing.window_ms);
  out << YAML::EndMap;

  out << YAML::Key << "runtime" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "threads" << YAML::Value << c.threads;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace glass::app
