#include "glass/io.hpp"

#include "glass/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

namespace glass {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'G', 'L', 'A', 'S', 'S', 'D', 'A', 'T'};

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

template <typename T>
void put(std::ostream& out, T value) {
  value = to_little(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::Format, path.string() + ": truncated dataset file");
  return to_little(value);
}

json timing_json(const TimingConfig& t) {
  return {{"flash_ms", t.flash_ms}, {"isi_ms", t.isi_ms}, {"pause_s", t.pause_s}, {"window_ms", t.window_ms}};
}

TimingConfig timing_from(const json& j) {
  TimingConfig t;
  t.flash_ms = j.at("flash_ms").get<double>();
  t.isi_ms = j.at("isi_ms").get<double>();
  t.pause_s = j.at("pause_s").get<double>();
  t.window_ms = j.at("window_ms").get<double>();
  return t;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& s, int line) {
  try {
    const std::string t = trim(s);
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used != t.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Format, "line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  }
}

double parse_double(const std::string& s, int line) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Format, "line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  }
}

HalfType half_type_from(int u) {
  if (u != 1 && u != 2) throw Error(ErrorCode::Format, "half type must be 1 (row) or 2 (column)");
  return static_cast<HalfType>(u);
}

}  // namespace

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  const json header = {{"num_channels", data.num_channels},
                       {"num_samples", data.num_samples},
                       {"sample_rate", data.sample_rate},
                       {"channel_names", data.channel_names},
                       {"timing", timing_json(data.timing)},
                       {"count", data.halves.size()}};
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kDatasetFormatVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& half : data.halves) {
    put<std::int32_t>(out, half.key.character);
    put<std::int32_t>(out, half.key.sequence);
    put<std::int32_t>(out, static_cast<std::int32_t>(half.key.half_type));
    put<std::int32_t>(out, half.target.value_or(0));
    for (const auto& epoch : half.epochs) {
      for (Eigen::Index e = 0; e < epoch.rows(); ++e) {
        for (Eigen::Index m = 0; m < epoch.cols(); ++m) put<double>(out, epoch(e, m));
      }
    }
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::Format, path.string() + ": not a binary dataset file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kDatasetFormatVersion) {
    throw Error(ErrorCode::Format, path.string() + ": unsupported dataset version " + std::to_string(version));
  }
  const auto header_bytes = get<std::uint64_t>(in, path);
  std::string text(header_bytes, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_bytes));
  if (!in) throw Error(ErrorCode::Format, path.string() + ": truncated header");

  Dataset data;
  std::size_t count = 0;
  try {
    const json header = json::parse(text);
    data.num_channels = header.at("num_channels").get<int>();
    data.num_samples = header.at("num_samples").get<int>();
    data.sample_rate = header.at("sample_rate").get<double>();
    data.channel_names = header.at("channel_names").get<std::vector<std::string>>();
    data.timing = timing_from(header.at("timing"));
    count = header.at("count").get<std::size_t>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::Format, path.string() + ": bad header: " + ex.what());
  }
  data.halves.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    HalfSequence half;
    half.key.character = get<std::int32_t>(in, path);
    half.key.sequence = get<std::int32_t>(in, path);
    half.key.half_type = half_type_from(get<std::int32_t>(in, path));
    const auto z = get<std::int32_t>(in, path);
    if (z != 0) half.target = z;
    for (auto& epoch : half.epochs) {
      epoch.resize(data.num_channels, data.num_samples);
      for (Eigen::Index e = 0; e < epoch.rows(); ++e) {
        for (Eigen::Index m = 0; m < epoch.cols(); ++m) epoch(e, m) = get<double>(in, path);
      }
    }
    data.halves.push_back(std::move(half));
  }
  data.validate();
  return data;
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  data.validate();
  out << "# sample_rate=" << std::setprecision(17) << data.sample_rate << '\n';
  out << "# channels=";
  for (std::size_t e = 0; e < data.channel_names.size(); ++e) out << (e ? ";" : "") << data.channel_names[e];
  out << '\n';
  out << "# flash_ms=" << data.timing.flash_ms << '\n'
      << "# isi_ms=" << data.timing.isi_ms << '\n'
      << "# pause_s=" << data.timing.pause_s << '\n'
      << "# window_ms=" << data.timing.window_ms << '\n';
  out << "c,s,u,j,e,target";
  for (int m = 1; m <= data.num_samples; ++m) out << ",v" << m;
  out << '\n';
  for (const auto& half : data.halves) {
    for (int j = 1; j <= kStimuliPerHalf; ++j) {
      const Epoch& epoch = half.epochs[static_cast<std::size_t>(j - 1)];
      for (int e = 0; e < data.num_channels; ++e) {
        out << half.key.character << ',' << half.key.sequence << ',' << static_cast<int>(half.key.half_type) << ','
            << j << ',' << e + 1 << ',';
        if (half.target) out << (*half.target == j ? 1 : 0);
        for (int m = 0; m < data.num_samples; ++m) out << ',' << epoch(e, m);
        out << '\n';
      }
    }
  }
}

Dataset read_dataset_csv(std::istream& in) {
  Dataset data;
  data.num_channels = 0;
  data.num_samples = -1;
  std::optional<std::vector<std::string>> names;
  using Key = std::tuple<int, int, int>;
  std::map<Key, std::size_t> slot;
  std::vector<std::map<int, std::map<int, Eigen::VectorXd>>> cells;  // half -> j -> e -> values
  std::vector<std::array<int, kStimuliPerHalf>> flags;               // -1 unlabeled, 0/1
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto eq = t.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(t.substr(1, eq - 1));
      const std::string value = trim(t.substr(eq + 1));
      if (key == "sample_rate") data.sample_rate = parse_double(value, lineno);
      else if (key == "channels") names = split(value, ';');
      else if (key == "flash_ms") data.timing.flash_ms = parse_double(value, lineno);
      else if (key == "isi_ms") data.timing.isi_ms = parse_double(value, lineno);
      else if (key == "pause_s") data.timing.pause_s = parse_double(value, lineno);
      else if (key == "window_ms") data.timing.window_ms = parse_double(value, lineno);
      continue;
    }
    const auto fields = split(t, ',');
    if (!saw_header) {
      saw_header = true;
      if (fields.size() < 7 || trim(fields[0]) != "c") {
        throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": expected header c,s,u,j,e,target,v1..vM");
      }
      data.num_samples = static_cast<int>(fields.size()) - 6;
      continue;
    }
    if (static_cast<int>(fields.size()) != data.num_samples + 6) {
      throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": expected " +
                                         std::to_string(data.num_samples + 6) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    const int c = parse_int(fields[0], lineno);
    const int s = parse_int(fields[1], lineno);
    const int u = parse_int(fields[2], lineno);
    const int j = parse_int(fields[3], lineno);
    const int e = parse_int(fields[4], lineno);
    const std::string target = trim(fields[5]);
    if (j < 1 || j > kStimuliPerHalf) throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": j out of range");
    if (e < 1) throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": channel index must be >= 1");
    half_type_from(u);
    const Key key{c, s, u};
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, cells.size()).first;
      cells.emplace_back();
      flags.push_back({-1, -1, -1, -1, -1, -1});
      HalfSequence half;
      half.key = {c, s, static_cast<HalfType>(u)};
      data.halves.push_back(std::move(half));
    }
    Eigen::VectorXd values(data.num_samples);
    for (int m = 0; m < data.num_samples; ++m) values[m] = parse_double(fields[static_cast<std::size_t>(m + 6)], lineno);
    auto& row = cells[it->second][j];
    if (row.count(e)) throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": duplicate row");
    row[e] = std::move(values);
    data.num_channels = std::max(data.num_channels, e);
    if (!target.empty()) flags[it->second][static_cast<std::size_t>(j - 1)] = parse_int(target, lineno);
  }
  if (!saw_header) throw Error(ErrorCode::Format, "missing header row");
  for (std::size_t i = 0; i < data.halves.size(); ++i) {
    auto& half = data.halves[i];
    for (int j = 1; j <= kStimuliPerHalf; ++j) {
      const auto found = cells[i].find(j);
      if (found == cells[i].end() || static_cast<int>(found->second.size()) != data.num_channels) {
        throw Error(ErrorCode::IncompleteHalfSequence, "character " + std::to_string(half.key.character) +
                                                           " sequence " + std::to_string(half.key.sequence) +
                                                           " lacks rows for stimulus " + std::to_string(j));
      }
      Epoch epoch(data.num_channels, data.num_samples);
      for (const auto& [e, values] : found->second) epoch.row(e - 1) = values.transpose();
      half.epochs[static_cast<std::size_t>(j - 1)] = std::move(epoch);
      if (flags[i][static_cast<std::size_t>(j - 1)] == 1) {
        if (half.target) throw Error(ErrorCode::Format, "half-sequence has more than one target");
        half.target = j;
      }
    }
  }
  data.channel_names = names ? *names : default_channel_names(data.num_channels);
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() == sizeof(magic) && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0) {
    in.close();
    return read_dataset(path);
  }
  in.clear();
  in.seekg(0);
  return read_dataset_csv(in);
}

PosteriorDraws Checkpoint::draws() const {
  PosteriorDraws d = posterior_draws(xi, num_draws, draws_seed);
  if (log_joint) d.log_joint = *log_joint;
  return d;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["tool_version"] = GLASS_VERSION_STRING;
  j["num_channels"] = ckpt.num_channels();
  j["num_samples"] = ckpt.num_samples();
  j["sample_rate"] = ckpt.sample_rate;
  j["channel_names"] = ckpt.channel_names;
  j["seed"] = ckpt.seed;
  j["hyper"] = {{"tau", ckpt.hyper.tau},
                {"cauchy_scale", ckpt.hyper.cauchy_scale},
                {"delta_prior", ckpt.hyper.delta_prior},
                {"shrinkage_ratio", ckpt.shrinkage_ratio},
                {"tau_calibrated", ckpt.tau_calibrated}};
  j["fit"] = {{"iterations", ckpt.fit.iterations},
              {"step_size", ckpt.fit.step_size},
              {"mc_samples", ckpt.fit.grad.mc_samples},
              {"relax_temperature", ckpt.fit.grad.relax_temperature},
              {"grad_seed", ckpt.fit.grad.seed},
              {"adam_beta1", ckpt.fit.adam_beta1},
              {"adam_beta2", ckpt.fit.adam_beta2},
              {"adam_eps", ckpt.fit.adam_eps},
              {"trace_every", ckpt.fit.trace_every}};
  j["variational"] = {{"beta_mean", vec_json(ckpt.xi.beta_mean)},
                      {"beta_rawscale", vec_json(ckpt.xi.beta_rawscale)},
                      {"sigma_mean", ckpt.xi.sigma_mean},
                      {"sigma_rawscale", ckpt.xi.sigma_rawscale},
                      {"delta_logit", vec_json(ckpt.xi.delta_logit)},
                      {"alpha_mean", vec_json(ckpt.xi.alpha_mean)},
                      {"alpha_rawscale", vec_json(ckpt.xi.alpha_rawscale)}};
  j["draws"] = {{"count", ckpt.num_draws}, {"seed", ckpt.draws_seed}};
  j["draws"]["log_joint"] = ckpt.log_joint ? vec_json(*ckpt.log_joint) : json(nullptr);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  Checkpoint ckpt;
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw Error(ErrorCode::Format, "unsupported checkpoint version " + std::to_string(version));
    }
    const int num_channels = j.at("num_channels").get<int>();
    const int num_samples = j.at("num_samples").get<int>();
    ckpt.sample_rate = j.at("sample_rate").get<double>();
    ckpt.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    const json& h = j.at("hyper");
    ckpt.hyper.tau = h.at("tau").get<double>();
    ckpt.hyper.cauchy_scale = h.at("cauchy_scale").get<double>();
    ckpt.hyper.delta_prior = h.at("delta_prior").get<double>();
    ckpt.shrinkage_ratio = h.at("shrinkage_ratio").get<double>();
    ckpt.tau_calibrated = h.at("tau_calibrated").get<bool>();
    const json& f = j.at("fit");
    ckpt.fit.iterations = f.at("iterations").get<int>();
    ckpt.fit.step_size = f.at("step_size").get<double>();
    ckpt.fit.grad.mc_samples = f.at("mc_samples").get<int>();
    ckpt.fit.grad.relax_temperature = f.at("relax_temperature").get<double>();
    ckpt.fit.grad.seed = f.at("grad_seed").get<std::uint64_t>();
    ckpt.fit.adam_beta1 = f.at("adam_beta1").get<double>();
    ckpt.fit.adam_beta2 = f.at("adam_beta2").get<double>();
    ckpt.fit.adam_eps = f.at("adam_eps").get<double>();
    ckpt.fit.trace_every = f.at("trace_every").get<int>();
    const json& v = j.at("variational");
    ckpt.xi.beta_mean = vec_from(v.at("beta_mean"));
    ckpt.xi.beta_rawscale = vec_from(v.at("beta_rawscale"));
    ckpt.xi.sigma_mean = v.at("sigma_mean").get<double>();
    ckpt.xi.sigma_rawscale = v.at("sigma_rawscale").get<double>();
    ckpt.xi.delta_logit = vec_from(v.at("delta_logit"));
    ckpt.xi.alpha_mean = vec_from(v.at("alpha_mean"));
    ckpt.xi.alpha_rawscale = vec_from(v.at("alpha_rawscale"));
    const json& d = j.at("draws");
    ckpt.num_draws = d.at("count").get<int>();
    ckpt.draws_seed = d.at("seed").get<std::uint64_t>();
    if (!d.at("log_joint").is_null()) ckpt.log_joint = vec_from(d.at("log_joint"));
    if (ckpt.xi.beta_mean.size() != num_samples || ckpt.xi.beta_rawscale.size() != num_samples ||
        ckpt.xi.delta_logit.size() != num_channels || ckpt.xi.alpha_mean.size() != num_channels ||
        ckpt.xi.alpha_rawscale.size() != num_channels ||
        static_cast<int>(ckpt.channel_names.size()) != num_channels) {
      throw Error(ErrorCode::Format, "checkpoint arrays disagree with its declared dimensions");
    }
    if (ckpt.log_joint && ckpt.log_joint->size() != ckpt.num_draws) {
      throw Error(ErrorCode::Format, "checkpoint log_joint length differs from the draw count");
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::Format, std::string("malformed checkpoint: ") + ex.what());
  }
  return ckpt;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_text_file(path)); }

void write_truth(const TruthRecord& truth, const std::filesystem::path& path) {
  json j;
  j["kind"] = truth.kind;
  j["seed"] = truth.seed;
  j["text"] = truth.text;
  if (truth.model) {
    const auto& m = *truth.model;
    j["model"] = {{"beta_raw", vec_json(m.theta.beta_raw)},
                  {"sigma", m.theta.sigma},
                  {"delta", vec_json(m.theta.delta)},
                  {"alpha_raw", vec_json(m.theta.alpha_raw)},
                  {"tau", m.hyper.tau},
                  {"cauchy_scale", m.hyper.cauchy_scale},
                  {"delta_prior", m.hyper.delta_prior}};
  }
  write_text_file(path, j.dump(1) + "\n");
}

TruthRecord read_truth(const std::filesystem::path& path) {
  TruthRecord truth;
  try {
    const json j = json::parse(read_text_file(path));
    truth.kind = j.at("kind").get<std::string>();
    truth.seed = j.at("seed").get<std::uint64_t>();
    truth.text = j.at("text").get<std::string>();
    if (j.contains("model")) {
      const json& m = j.at("model");
      ModelTruth t;
      t.theta.beta_raw = vec_from(m.at("beta_raw"));
      t.theta.sigma = m.at("sigma").get<double>();
      t.theta.delta = vec_from(m.at("delta"));
      t.theta.alpha_raw = vec_from(m.at("alpha_raw"));
      t.hyper.tau = m.at("tau").get<double>();
      t.hyper.cauchy_scale = m.at("cauchy_scale").get<double>();
      t.hyper.delta_prior = m.at("delta_prior").get<double>();
      truth.model = t;
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::Format, path.string() + ": malformed truth record: " + ex.what());
  }
  return truth;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace glass
