#include "glass/error.hpp"
#include "glass/summary.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace glass;

namespace {

PosteriorDraws random_draws(int count, int num_channels, int num_samples, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  PosteriorDraws d;
  d.beta_raw.resize(count, num_samples);
  d.alpha_raw.resize(count, num_channels);
  d.delta.resize(count, num_channels);
  for (Eigen::Index k = 0; k < d.beta_raw.size(); ++k) d.beta_raw.data()[k] = standard_normal(rng);
  for (Eigen::Index k = 0; k < d.alpha_raw.size(); ++k) d.alpha_raw.data()[k] = 1.0 + standard_normal(rng);
  for (Eigen::Index k = 0; k < d.delta.size(); ++k) d.delta.data()[k] = uniform_open(rng) < 0.7 ? 1.0 : 0.0;
  d.sigma = Eigen::VectorXd::Ones(count);
  d.log_q = Eigen::VectorXd::Zero(count);
  return d;
}

}  // namespace

TEST_CASE("column quantiles use linear interpolation") {
  Eigen::MatrixXd samples(5, 1);
  samples << 4.0, 1.0, 5.0, 2.0, 3.0;
  const ColumnQuantiles q = column_quantiles(samples);
  CHECK(q.median[0] == 3.0);
  // Sorted (1..5): position p * (n - 1).
  CHECK(q.lower[0] == doctest::Approx(1.0 + 0.025 * 4));
  CHECK(q.upper[0] == doctest::Approx(1.0 + 0.975 * 4));
}

TEST_CASE("effect summaries") {
  PosteriorDraws d = random_draws(200, 3, 6, 1);
  const EffectSummary s = summarize_effects(d, Hyperparams{0.4, 1.0, 0.5});
  for (int m = 0; m < 6; ++m) {
    CHECK(s.lower[m] <= s.median[m]);
    CHECK(s.median[m] <= s.upper[m]);
    int nonzero = 0;
    for (int g = 0; g < 200; ++g) nonzero += std::abs(d.beta_raw(g, m)) > 0.4 ? 1 : 0;
    CHECK(s.prob_nonzero[m] == doctest::Approx(nonzero / 200.0));
  }
  SUBCASE("prob_nonzero is nonincreasing in tau") {
    Eigen::VectorXd previous = Eigen::VectorXd::Ones(6);
    for (double tau : {0.0, 0.2, 0.5, 1.0, 2.0, 10.0}) {
      const EffectSummary t = summarize_effects(d, Hyperparams{tau, 1.0, 0.5});
      CHECK((t.prob_nonzero.array() <= previous.array()).all());
      previous = t.prob_nonzero;
    }
    CHECK(previous.isZero());
    CHECK(summarize_effects(d, Hyperparams{10.0, 1.0, 0.5}).median.isZero());
  }
  SUBCASE("identical draws collapse the interval") {
    PosteriorDraws same = d;
    same.beta_raw = d.beta_raw.row(0).replicate(200, 1);
    const EffectSummary t = summarize_effects(same, Hyperparams{});
    CHECK(t.lower == t.upper);
    CHECK(t.median == t.upper);
  }
  SUBCASE("too few draws") {
    PosteriorDraws few = random_draws(39, 3, 6, 2);
    CHECK_THROWS_AS(summarize_effects(few, Hyperparams{}), Error);
    CHECK_THROWS_AS(summarize_channels(few), Error);
  }
}

TEST_CASE("channel summaries") {
  PosteriorDraws d = random_draws(400, 4, 3, 5);
  const ChannelSummary s = summarize_channels(d);
  CHECK(s.weight.norm() == doctest::Approx(1.0).epsilon(1e-10));
  for (int e = 0; e < 4; ++e) {
    CHECK(s.selection_prob[e] == doctest::Approx(d.delta.col(e).mean()));
    CHECK(s.important[static_cast<std::size_t>(e)] == (s.selection_prob[e] > 0.9));
  }
  SUBCASE("weights are invariant to rescaling alpha*") {
    PosteriorDraws scaled = d;
    scaled.alpha_raw *= 3.7;
    CHECK((summarize_channels(scaled).weight - s.weight).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("concentrated alpha and full selection") {
    PosteriorDraws c = d;
    c.alpha_raw.setZero();
    c.alpha_raw.col(0).setConstant(2.0);
    c.delta.setOnes();
    const ChannelSummary t = summarize_channels(c);
    CHECK(t.weight[0] == doctest::Approx(1.0));
    CHECK(t.weight.tail(3).isZero());
    CHECK(t.selection_prob.isOnes());
  }
}
