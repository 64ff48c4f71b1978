#include "glass/error.hpp"
#include "glass/ingest.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace glass;
using glass::testing::random_dataset;

namespace {

double rms(const Eigen::VectorXd& x) { return std::sqrt(x.squaredNorm() / static_cast<double>(x.size())); }

Eigen::VectorXd sinusoid(double f, double fs, int n) {
  Eigen::VectorXd x(n);
  for (int k = 0; k < n; ++k) x[k] = std::sin(2.0 * std::numbers::pi * f * k / fs);
  return x;
}

ContinuousRecording schedule(int num_channels, Eigen::Index total, int characters, int sequences, int spacing) {
  ContinuousRecording rec;
  rec.samples = Eigen::MatrixXd::Zero(num_channels, total);
  rec.sample_rate = 256.0;
  std::int64_t t = 0;
  for (int c = 1; c <= characters; ++c) {
    for (int s = 1; s <= sequences; ++s) {
      for (int u = 1; u <= 2; ++u) {
        for (int j = 1; j <= 6; ++j) {
          rec.events.push_back({t, c, s, static_cast<HalfType>(u), j, j == (u == 1 ? 2 : 5)});
          t += spacing;
        }
      }
    }
  }
  return rec;
}

}  // namespace

TEST_CASE("epoch length rules") {
  CHECK(epoch_length(800.0, 256.0) == 205);
  CHECK(epoch_length(800.0, 32.0, EpochEndpoint::Exclusive) == 25);
  CHECK(epoch_length(800.0, 32.0) == 26);
  CHECK(epoch_length(800.0, 256.0, EpochEndpoint::Exclusive) == 204);
}

TEST_CASE("epoch extraction groups events into half-sequences") {
  ContinuousRecording rec = schedule(2, 24 * 32 + 300, 2, 1, 32);
  for (Eigen::Index k = 0; k < rec.samples.cols(); ++k) rec.samples.col(k).setConstant(static_cast<double>(k));
  const Dataset data = extract_epochs(rec);
  CHECK(data.num_samples == 205);
  CHECK(data.halves.size() == 4);
  CHECK(data.halves[0].target == 2);
  CHECK(data.halves[1].target == 5);
  CHECK(data.halves[1].key.half_type == HalfType::Column);
  CHECK(data.halves[1].epochs[0](1, 0) == 6 * 32);
  CHECK(data.halves[1].epochs[0](0, 204) == 6 * 32 + 204);

  SUBCASE("constant recording gives constant epochs") {
    ContinuousRecording flat = rec;
    flat.samples.setConstant(3.5);
    for (const auto& half : extract_epochs(flat).halves) {
      for (const auto& epoch : half.epochs) CHECK((epoch.array() == 3.5).all());
    }
  }
  SUBCASE("window overrun") {
    ContinuousRecording short_rec = rec;
    short_rec.samples.conservativeResize(2, 24 * 32 - 32 + 100);
    try {
      (void)extract_epochs(short_rec);
      FAIL("expected WindowOverrun");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::WindowOverrun);
    }
  }
  SUBCASE("incomplete half-sequence") {
    ContinuousRecording missing = rec;
    missing.events.erase(missing.events.begin() + 3);
    try {
      (void)extract_epochs(missing);
      FAIL("expected IncompleteHalfSequence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IncompleteHalfSequence);
    }
  }
  SUBCASE("events must increase") {
    ContinuousRecording unordered = rec;
    std::swap(unordered.events[0].sample, unordered.events[1].sample);
    CHECK_THROWS_AS(extract_epochs(unordered), Error);
  }
}

TEST_CASE("Butterworth bandpass response") {
  const auto sos = design_butterworth_bandpass(4, 0.5, 15.0, 256.0);
  CHECK(sos.size() == 4);
  const double warped_low = std::tan(std::numbers::pi * 0.5 / 256.0);
  const double warped_high = std::tan(std::numbers::pi * 15.0 / 256.0);
  const double center = 256.0 / std::numbers::pi * std::atan(std::sqrt(warped_low * warped_high));
  CHECK(frequency_response(sos, center, 256.0) == doctest::Approx(1.0).epsilon(1e-9));
  // Pre-warped edges sit at -3 dB.
  CHECK(frequency_response(sos, 0.5, 256.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(frequency_response(sos, 15.0, 256.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  // Analog prototype magnitude at the pre-warped frequency.
  for (double f : {2.0, 30.0, 50.0, 100.0}) {
    const double w = std::tan(std::numbers::pi * f / 256.0);
    const double omega = (w * w - warped_low * warped_high) / (w * (warped_high - warped_low));
    CHECK(frequency_response(sos, f, 256.0) == doctest::Approx(1.0 / std::sqrt(1.0 + std::pow(omega, 8))).epsilon(1e-8));
  }
  CHECK(frequency_response(sos, 0.0, 256.0) < 1e-12);

  // Edge transients of the 0.5 Hz section take seconds to decay; measure the interior.
  const int n = 256 * 16;
  const auto interior = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x.segment(256 * 6, 256 * 4); };
  FilterSpec spec;
  ContinuousRecording rec;
  rec.sample_rate = 256.0;
  rec.samples.resize(1, n);
  rec.samples.row(0) = sinusoid(50.0, 256.0, n).transpose();
  const Eigen::VectorXd high = bandpass(rec, spec).samples.row(0).transpose();
  CHECK(rms(interior(high)) <= 0.01 * rms(interior(sinusoid(50.0, 256.0, n))));
  rec.samples.row(0) = sinusoid(5.0, 256.0, n).transpose();
  const Eigen::VectorXd mid = bandpass(rec, spec).samples.row(0).transpose();
  CHECK(rms(interior(mid)) >= 0.99 * rms(interior(sinusoid(5.0, 256.0, n))));
  rec.samples.setZero();
  CHECK(bandpass(rec, spec).samples.isZero());

  CHECK_THROWS_AS(design_butterworth_bandpass(4, 15.0, 0.5, 256.0), Error);
  CHECK_THROWS_AS(design_butterworth_bandpass(4, 0.5, 200.0, 256.0), Error);
  CHECK_THROWS_AS(design_butterworth_bandpass(4, 0.0, 15.0, 256.0), Error);
}

TEST_CASE("bandpass is linear") {
  Rng rng = make_rng(5);
  ContinuousRecording a, b, mix;
  for (auto* r : {&a, &b}) {
    r->sample_rate = 256.0;
    r->samples.resize(2, 700);
    for (Eigen::Index k = 0; k < r->samples.size(); ++k) r->samples.data()[k] = standard_normal(rng);
  }
  mix = a;
  mix.samples = 2.5 * a.samples - 0.75 * b.samples;
  for (bool zero_phase : {true, false}) {
    FilterSpec spec;
    spec.zero_phase = zero_phase;
    const Eigen::MatrixXd lhs = bandpass(mix, spec).samples;
    const Eigen::MatrixXd rhs = 2.5 * bandpass(a, spec).samples - 0.75 * bandpass(b, spec).samples;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("downsampling") {
  Dataset data = random_dataset(2, 205, 3, 4);
  data.sample_rate = 256.0;
  const Dataset down = downsample(data, 32.0);
  CHECK(down.num_samples == 26);
  CHECK(down.sample_rate == 32.0);
  CHECK(down.halves[1].epochs[3](1, 5) == data.halves[1].epochs[3](1, 40));
  const Dataset same = downsample(data, 256.0);
  CHECK(same.halves[2].epochs[0] == data.halves[2].epochs[0]);
  CHECK_THROWS_AS(downsample(data, 100.0), Error);
  CHECK_NOTHROW(downsample(data, 100.0, true));
  CHECK_THROWS_AS(downsample(data, 512.0), Error);

  ContinuousRecording rec;
  rec.sample_rate = 256.0;
  rec.samples = Eigen::MatrixXd::Constant(1, 100, 2.0);
  rec.events.push_back({16, 1, 1, HalfType::Row, 1, std::nullopt});
  const ContinuousRecording r = downsample(rec, 32.0);
  CHECK(r.samples.cols() == 13);
  CHECK((r.samples.array() == 2.0).all());
  CHECK(r.events[0].sample == 2);
}

TEST_CASE("identifiability check") {
  Dataset one;
  one.num_channels = 1;
  one.num_samples = 1;
  HalfSequence half;
  for (int j = 0; j < 6; ++j) half.epochs[j] = Epoch::Constant(1, 1, j + 1.0);
  one.halves.push_back(half);
  IdentifiabilityReport r = identifiability_check(one);
  CHECK(r.rank == 1);
  CHECK(r.full_column_rank);
  CHECK(r.rows == 5);
  CHECK(r.cols == 1);

  Dataset small = random_dataset(3, 4, 2, 9);
  r = identifiability_check(small);
  CHECK(r.rows == 10);
  CHECK(r.cols == 12);
  CHECK_FALSE(r.full_column_rank);
  CHECK(r.message.find("5N >= EM") != std::string::npos);
  CHECK(r.rank <= 10);

  Dataset doubled = small;
  doubled.halves.insert(doubled.halves.end(), small.halves.begin(), small.halves.end());
  CHECK(identifiability_check(doubled).rank == r.rank);

  const Dataset big = random_dataset(2, 3, 5, 10);
  r = identifiability_check(big);
  CHECK(r.full_column_rank);
  CHECK(r.rank == 6);
}
