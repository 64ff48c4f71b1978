#include "glass/eval.hpp"

#include "glass/error.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace glass {

AccuracyCurve accuracy_by_sequences(std::span<const CharacterDecoding> decodings) {
  AccuracyCurve curve;
  if (decodings.empty()) return curve;
  const std::size_t n_max = decodings.front().decoded_by_n.size();
  std::map<int, std::vector<const CharacterDecoding*>> groups;
  for (const auto& d : decodings) {
    if (d.decoded_by_n.size() != n_max) {
      throw Error(ErrorCode::LengthMismatch, "character " + std::to_string(d.character) + " has " +
                                                 std::to_string(d.decoded_by_n.size()) + " decodings, expected " +
                                                 std::to_string(n_max));
    }
    groups[d.group].push_back(&d);
  }
  curve.groups = static_cast<int>(groups.size());
  for (std::size_t n = 0; n < n_max; ++n) {
    std::vector<double> acc;
    int count = 0;
    for (const auto& [id, members] : groups) {
      int correct = 0;
      for (const auto* d : members) correct += d->decoded_by_n[n] == d->truth ? 1 : 0;
      acc.push_back(static_cast<double>(correct) / static_cast<double>(members.size()));
      count += static_cast<int>(members.size());
    }
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(acc.size());
    double var = 0.0;
    for (double a : acc) var += (a - mean) * (a - mean);
    curve.mean.push_back(mean);
    curve.sd.push_back(acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0);
    curve.counts.push_back(count);
  }
  return curve;
}

std::vector<CharacterDecoding> decode_by_sequences(const Dataset& data, std::span<const PredictiveDist> dists,
                                                   const Keyboard& kb, int group) {
  if (dists.size() != data.halves.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(dists.size()) + " predictions for " +
                                               std::to_string(data.halves.size()) + " half-sequences");
  }
  struct Slots {
    std::map<int, PredictiveDist> row, col;  // keyed by sequence
    std::optional<int> row_target, col_target;
  };
  std::map<int, Slots> chars;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto& half = data.halves[i];
    auto& slot = chars[half.key.character];
    if (half.key.half_type == HalfType::Row) {
      slot.row[half.key.sequence] = dists[i];
      if (half.target) slot.row_target = half.target;
    } else {
      slot.col[half.key.sequence] = dists[i];
      if (half.target) slot.col_target = half.target;
    }
  }
  int n_max = 0;
  for (const auto& [c, slot] : chars) {
    const int n = static_cast<int>(std::min(slot.row.size(), slot.col.size()));
    n_max = n_max == 0 ? n : std::min(n_max, n);
  }
  std::vector<CharacterDecoding> out;
  for (const auto& [c, slot] : chars) {
    CharacterDecoding d;
    d.group = group;
    d.character = c;
    if (slot.row_target && slot.col_target) d.truth = kb.at(*slot.row_target, *slot.col_target);
    std::vector<PredictiveDist> rows, cols;
    auto r = slot.row.begin();
    auto k = slot.col.begin();
    for (int n = 1; n <= n_max; ++n, ++r, ++k) {
      rows.push_back(r->second);
      cols.push_back(k->second);
      d.decoded_by_n.push_back(decode_character(fuse_halfsequences(rows), fuse_halfsequences(cols), kb).symbol);
    }
    out.push_back(std::move(d));
  }
  return out;
}

double seconds_per_character(int n_seq, const TimingConfig& timing) {
  return n_seq * 2 * kStimuliPerHalf * (timing.flash_ms + timing.isi_ms) / 1000.0 + timing.pause_s;
}

double bci_utility(double accuracy, int n_seq, const TimingConfig& timing, int n_keys) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw Error(ErrorCode::InvalidArgument, "accuracy must lie in [0, 1]");
  if (n_seq < 1 || n_keys < 2) throw Error(ErrorCode::InvalidArgument, "n_seq >= 1 and n_keys >= 2 required");
  const double gain = std::max(0.0, 2.0 * accuracy - 1.0);
  return gain * std::log2(static_cast<double>(n_keys - 1)) / seconds_per_character(n_seq, timing);
}

UtilityPeak max_utility(const AccuracyCurve& curve, const TimingConfig& timing, int n_keys) {
  UtilityPeak peak;
  for (int n = 1; n <= curve.max_sequences(); ++n) {
    const double u = bci_utility(curve.mean[static_cast<std::size_t>(n - 1)], n, timing, n_keys);
    if (peak.n_seq == 0 || u > peak.utility) peak = {u, n};
  }
  return peak;
}

std::optional<int> n_seq_80(const AccuracyCurve& curve) {
  for (int n = 1; n <= curve.max_sequences(); ++n) {
    if (curve.mean[static_cast<std::size_t>(n - 1)] >= 0.8) return n;
  }
  return std::nullopt;
}

void write_metrics_csv(const AccuracyCurve& curve, const TimingConfig& timing, std::ostream& out) {
  out << "n_seq,mean_acc,sd,utility\n" << std::setprecision(10);
  for (int n = 1; n <= curve.max_sequences(); ++n) {
    const auto i = static_cast<std::size_t>(n - 1);
    out << n << ',' << curve.mean[i] << ',' << curve.sd[i] << ',' << bci_utility(curve.mean[i], n, timing) << '\n';
  }
}

std::vector<StimulusScore> read_scores_csv(std::istream& in) {
  std::vector<StimulusScore> out;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    if (!header) {
      header = true;
      if (line.rfind("c,", 0) == 0) continue;
    }
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 5) {
      throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": expected c,s,u,j,score");
    }
    try {
      StimulusScore s;
      s.character = std::stoi(f[0]);
      s.sequence = std::stoi(f[1]);
      const int u = std::stoi(f[2]);
      if (u != 1 && u != 2) throw std::invalid_argument("u");
      s.half_type = static_cast<HalfType>(u);
      s.stimulus = std::stoi(f[3]);
      if (s.stimulus < 1 || s.stimulus > kStimuliPerHalf) throw std::invalid_argument("j");
      s.score = std::stod(f[4]);
      out.push_back(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": malformed score record");
    }
  }
  return out;
}

std::vector<CharacterDecoding> decode_scores(std::span<const StimulusScore> scores, const Keyboard& kb,
                                             const std::vector<char>& truth, int group) {
  // character -> orientation -> sequence -> per-stimulus score
  std::map<int, std::map<int, std::map<int, std::array<double, kStimuliPerHalf>>>> table;
  for (const auto& s : scores) {
    table[s.character][static_cast<int>(s.half_type)][s.sequence][static_cast<std::size_t>(s.stimulus - 1)] = s.score;
  }
  int n_max = 0;
  for (const auto& [c, by_u] : table) {
    if (by_u.size() != 2) throw Error(ErrorCode::IncompleteHalfSequence, "character " + std::to_string(c) + " lacks rows or columns");
    const int n = static_cast<int>(std::min(by_u.at(1).size(), by_u.at(2).size()));
    n_max = n_max == 0 ? n : std::min(n_max, n);
  }
  std::vector<CharacterDecoding> out;
  for (const auto& [c, by_u] : table) {
    CharacterDecoding d;
    d.group = group;
    d.character = c;
    if (c >= 1 && c <= static_cast<int>(truth.size())) d.truth = truth[static_cast<std::size_t>(c - 1)];
    Simplex6 row_sum{}, col_sum{};
    auto r = by_u.at(1).begin();
    auto k = by_u.at(2).begin();
    for (int n = 1; n <= n_max; ++n, ++r, ++k) {
      for (std::size_t j = 0; j < row_sum.size(); ++j) {
        row_sum[j] += r->second[j];
        col_sum[j] += k->second[j];
      }
      // The mean and the sum share their argmax.
      d.decoded_by_n.push_back(kb.at(argmax(row_sum), argmax(col_sum)));
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace glass
