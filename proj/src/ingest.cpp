#include "glass/ingest.hpp"

#include "glass/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>
#include <tuple>

namespace glass {

int epoch_length(double window_ms, double sample_rate, EpochEndpoint endpoint) {
  if (!(window_ms > 0.0 && sample_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "window and rate must be positive");
  // The small slack keeps exact products such as 1000 ms * 256 Hz from rounding down.
  const auto whole = static_cast<int>(std::floor(window_ms * sample_rate / 1000.0 + 1e-9));
  return endpoint == EpochEndpoint::Inclusive ? whole + 1 : whole;
}

Dataset extract_epochs(const ContinuousRecording& rec, double window_ms, EpochEndpoint endpoint,
                       const TimingConfig& timing) {
  const int num_channels = static_cast<int>(rec.samples.rows());
  const auto total = static_cast<std::int64_t>(rec.samples.cols());
  const int length = epoch_length(window_ms, rec.sample_rate, endpoint);

  Dataset data;
  data.num_channels = num_channels;
  data.num_samples = length;
  data.sample_rate = rec.sample_rate;
  data.channel_names = rec.channel_names.empty() ? default_channel_names(num_channels) : rec.channel_names;
  data.timing = timing;
  data.timing.window_ms = window_ms;

  using Key = std::tuple<int, int, int>;
  std::map<Key, std::size_t> slot;
  std::vector<std::array<bool, kStimuliPerHalf>> seen;
  std::int64_t previous = -1;
  for (const auto& ev : rec.events) {
    if (ev.sample <= previous) throw Error(ErrorCode::InvalidArgument, "event indices must be strictly increasing");
    previous = ev.sample;
    if (ev.sample < 0 || ev.sample + length > total) {
      throw Error(ErrorCode::WindowOverrun, "event at sample " + std::to_string(ev.sample) + " needs " +
                                                std::to_string(length) + " samples, recording has " +
                                                std::to_string(total));
    }
    if (ev.stimulus < 1 || ev.stimulus > kStimuliPerHalf) {
      throw Error(ErrorCode::InvalidArgument, "stimulus number must lie in 1..6");
    }
    const Key key{ev.character, ev.sequence, static_cast<int>(ev.half_type)};
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, data.halves.size()).first;
      HalfSequence half;
      half.key = {ev.character, ev.sequence, ev.half_type};
      data.halves.push_back(std::move(half));
      seen.push_back({});
    }
    HalfSequence& half = data.halves[it->second];
    auto& flags = seen[it->second];
    const auto j = static_cast<std::size_t>(ev.stimulus - 1);
    if (flags[j]) {
      throw Error(ErrorCode::IncompleteHalfSequence, "stimulus " + std::to_string(ev.stimulus) + " repeated in character " +
                                                         std::to_string(ev.character) + " sequence " +
                                                         std::to_string(ev.sequence));
    }
    flags[j] = true;
    half.epochs[j] = rec.samples.middleCols(static_cast<Eigen::Index>(ev.sample), length);
    if (ev.is_target.value_or(false)) {
      if (half.target) throw Error(ErrorCode::InvalidArgument, "half-sequence has more than one target");
      half.target = ev.stimulus;
    }
  }
  for (std::size_t i = 0; i < data.halves.size(); ++i) {
    if (!std::all_of(seen[i].begin(), seen[i].end(), [](bool b) { return b; })) {
      const auto& key = data.halves[i].key;
      throw Error(ErrorCode::IncompleteHalfSequence, "character " + std::to_string(key.character) + " sequence " +
                                                         std::to_string(key.sequence) + " lacks some of the six stimuli");
    }
  }
  return data;
}

std::vector<Biquad> design_butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate) {
  if (order < 1) throw Error(ErrorCode::InvalidBand, "filter order must be >= 1");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0)) {
    throw Error(ErrorCode::InvalidBand, "band must satisfy 0 < low < high < rate / 2");
  }
  using cd = std::complex<double>;
  const double fs2 = 2.0 * sample_rate;
  const double warped_low = fs2 * std::tan(std::numbers::pi * low_hz / sample_rate);
  const double warped_high = fs2 * std::tan(std::numbers::pi * high_hz / sample_rate);
  const double bandwidth = warped_high - warped_low;
  const double center_sq = warped_low * warped_high;

  std::vector<cd> complex_poles;
  std::vector<double> real_poles;
  for (int k = 1; k <= order; ++k) {
    const cd proto = std::polar(1.0, std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order));
    const cd half_bw = proto * (bandwidth / 2.0);
    const cd root = std::sqrt(half_bw * half_bw - center_sq);
    for (const cd s : {half_bw + root, half_bw - root}) {
      const cd z = (fs2 + s) / (fs2 - s);
      if (std::abs(z.imag()) < 1e-12) {
        real_poles.push_back(z.real());
      } else if (z.imag() > 0.0) {
        complex_poles.push_back(z);
      }
    }
  }
  std::sort(real_poles.begin(), real_poles.end());

  std::vector<Biquad> sections;
  for (const cd& p : complex_poles) {
    sections.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  }
  for (std::size_t k = 0; k + 1 < real_poles.size(); k += 2) {
    const double p1 = real_poles[k];
    const double p2 = real_poles[k + 1];
    sections.push_back({1.0, 0.0, -1.0, -(p1 + p2), p1 * p2});
  }
  if (static_cast<int>(sections.size()) != order) {
    throw Error(ErrorCode::InvalidBand, "pole pairing failed for this band");
  }
  const double center_hz = sample_rate / std::numbers::pi * std::atan(std::sqrt(center_sq) / fs2);
  const double gain = frequency_response(sections, center_hz, sample_rate);
  const double per_section = std::pow(gain, -1.0 / order);
  for (auto& s : sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  return sections;
}

double frequency_response(const std::vector<Biquad>& sections, double f_hz, double sample_rate) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / sample_rate);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

Eigen::VectorXd sos_filter(const std::vector<Biquad>& sections, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = x;
  if (x.size() == 0) return y;
  double level = x[0];
  for (const auto& s : sections) {
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double steady = dc * level;
    double z2 = s.b2 * level - s.a2 * steady;
    double z1 = s.b1 * level - s.a1 * steady + z2;
    for (Eigen::Index n = 0; n < y.size(); ++n) {
      const double in = y[n];
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      y[n] = out;
    }
    level = steady;
  }
  return y;
}

Eigen::VectorXd sos_filtfilt(const std::vector<Biquad>& sections, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return x;
  const Eigen::Index pad = std::min<Eigen::Index>(n - 1, 3 * (2 * static_cast<Eigen::Index>(sections.size()) + 1));
  Eigen::VectorXd ext(n + 2 * pad);
  for (Eigen::Index k = 0; k < pad; ++k) ext[k] = 2.0 * x[0] - x[pad - k];
  ext.segment(pad, n) = x;
  for (Eigen::Index k = 0; k < pad; ++k) ext[pad + n + k] = 2.0 * x[n - 1] - x[n - 2 - k];
  Eigen::VectorXd forward = sos_filter(sections, ext);
  Eigen::VectorXd backward = sos_filter(sections, forward.reverse().eval());
  return backward.reverse().segment(pad, n);
}

ContinuousRecording bandpass(const ContinuousRecording& rec, const FilterSpec& spec) {
  const auto sections = design_butterworth_bandpass(spec.order, spec.low_hz, spec.high_hz, rec.sample_rate);
  ContinuousRecording out = rec;
  for (Eigen::Index e = 0; e < rec.samples.rows(); ++e) {
    const Eigen::VectorXd channel = rec.samples.row(e).transpose();
    out.samples.row(e) = (spec.zero_phase ? sos_filtfilt(sections, channel) : sos_filter(sections, channel)).transpose();
  }
  return out;
}

namespace {

std::vector<Eigen::Index> decimation_indices(Eigen::Index length, double source_hz, double target_hz,
                                             bool allow_nearest) {
  if (!(target_hz > 0.0 && source_hz > 0.0) || target_hz > source_hz) {
    throw Error(ErrorCode::InvalidRate, "target rate must lie in (0, source rate]");
  }
  const double ratio = source_hz / target_hz;
  const double stride = std::round(ratio);
  const bool integral = std::abs(ratio - stride) < 1e-9;
  if (!integral && !allow_nearest) {
    throw Error(ErrorCode::InvalidRate, "source rate " + std::to_string(source_hz) + " is not a multiple of " +
                                            std::to_string(target_hz));
  }
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0;; ++k) {
    const auto pos = static_cast<Eigen::Index>(integral ? k * static_cast<Eigen::Index>(stride)
                                                        : std::llround(static_cast<double>(k) * ratio));
    if (pos >= length) break;
    idx.push_back(pos);
  }
  return idx;
}

Eigen::MatrixXd keep_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
  return out;
}

}  // namespace

ContinuousRecording downsample(const ContinuousRecording& rec, double target_hz, bool allow_nearest) {
  const auto idx = decimation_indices(rec.samples.cols(), rec.sample_rate, target_hz, allow_nearest);
  ContinuousRecording out = rec;
  out.samples = keep_columns(rec.samples, idx);
  const double ratio = rec.sample_rate / target_hz;
  out.sample_rate = target_hz;
  for (auto& ev : out.events) ev.sample = std::llround(static_cast<double>(ev.sample) / ratio);
  return out;
}

Dataset downsample(const Dataset& data, double target_hz, bool allow_nearest) {
  const auto idx = decimation_indices(data.num_samples, data.sample_rate, target_hz, allow_nearest);
  Dataset out = data;
  out.sample_rate = target_hz;
  out.num_samples = static_cast<int>(idx.size());
  for (auto& half : out.halves) {
    for (auto& epoch : half.epochs) epoch = keep_columns(epoch, idx);
  }
  return out;
}

IdentifiabilityReport identifiability_check(const Dataset& data) {
  IdentifiabilityReport report;
  const long features = static_cast<long>(data.num_channels) * data.num_samples;
  report.rows = 5L * static_cast<long>(data.halves.size());
  report.cols = features;
  Eigen::MatrixXd contrasts(report.rows, features);
  Eigen::Index r = 0;
  for (const auto& half : data.halves) {
    const Epoch& pivot = half.epochs[kStimuliPerHalf - 1];
    for (int j = 0; j < kStimuliPerHalf - 1; ++j) {
      const Epoch diff = half.epochs[static_cast<std::size_t>(j)] - pivot;
      // Column-major storage is exactly vec(): columns stacked one after the other.
      contrasts.row(r++) = Eigen::Map<const Eigen::RowVectorXd>(diff.data(), features);
    }
  }
  if (report.rows > 0 && features > 0) {
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(contrasts);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double largest = sv.size() ? sv[0] : 0.0;
    if (largest > 0.0) {
      for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv[k] > 1e-8 * largest) ++report.rank;
      }
    }
  }
  report.full_column_rank = report.rank == features;
  if (report.rows < report.cols) {
    report.message = "5N = " + std::to_string(report.rows) + " < EM = " + std::to_string(report.cols) +
                     ": the necessary condition 5N >= EM fails, so the unconstrained model is not identifiable";
  } else if (!report.full_column_rank) {
    report.message = "contrast matrix has rank " + std::to_string(report.rank) + " < EM = " + std::to_string(report.cols);
  } else {
    report.message = "contrast matrix has full column rank";
  }
  return report;
}

}  // namespace glass
