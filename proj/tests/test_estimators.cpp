#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "twinsim/estimators.hpp"
#include "twinsim/montecarlo.hpp"
#include "twinsim/rng.hpp"
#include "twinsim/sampling.hpp"

using namespace twinsim;

namespace {

ValidatedConfig small_cfg() {
  const auto v = validate(SourceConfig{0.8, 2, 1}, ChannelConfig{0.2, 0.7, 0.7, 0.7, 0.0});
  REQUIRE(v.ok());
  return *v.config;
}

}  // namespace

TEST_CASE("summary statistics of a tiny sample") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto s = est::summarize(v);
  CHECK(s.count == 4);
  CHECK(s.mean == Catch::Approx(2.5).epsilon(1e-15));
  REQUIRE(s.variance_defined);
  CHECK(s.variance == Catch::Approx(5.0 / 3.0).epsilon(1e-14));
  REQUIRE(s.mdr_defined);
  CHECK(s.mdr == Catch::Approx(2.5 / std::sqrt(5.0 / 3.0)).epsilon(1e-13));
}

TEST_CASE("summary degenerate cases") {
  CHECK_FALSE(est::summarize(std::vector<double>{}).variance_defined);
  CHECK_FALSE(est::summarize(std::vector<double>{7.0}).variance_defined);
  const auto flat = est::summarize(std::vector<double>{3.0, 3.0, 3.0});
  REQUIRE(flat.variance_defined);
  CHECK(flat.variance == 0.0);
  CHECK_FALSE(flat.mdr_defined);
}

TEST_CASE("mean estimate uses the analytic standard error") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto m = est::mean_stat(v);
  REQUIRE(m.defined);
  CHECK(m.value == Catch::Approx(2.5).epsilon(1e-15));
  CHECK(m.se == Catch::Approx(std::sqrt(5.0 / 3.0 / 4.0)).epsilon(1e-13));
}

TEST_CASE("bootstrap errors are deterministic and plausible") {
  auto g = rng::make_stream(5, rng::Stream::counts, 0);
  std::vector<double> v;
  for (int i = 0; i < 2000; ++i) v.push_back(static_cast<double>(sample_geometric(0.5, g)));

  const auto a = est::var_stat(v);
  const auto b = est::var_stat(v);
  REQUIRE(a.defined);
  CHECK(a.value == b.value);
  CHECK(a.se == b.se);  // fixed resampling seed
  CHECK(a.se > 0.0);

  // for the variance of ~geometric data the bootstrap se should be within a
  // factor of two of the delta-method scale sqrt((m4 - var^2)/n)
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m;
    var += d * d;
    m4 += d * d * d * d;
  }
  var /= static_cast<double>(v.size() - 1);
  m4 /= static_cast<double>(v.size());
  const double delta_se = std::sqrt((m4 - var * var) / static_cast<double>(v.size()));
  CHECK(a.se > 0.5 * delta_se);
  CHECK(a.se < 2.0 * delta_se);
}

TEST_CASE("mdr estimate matches the summary and carries an error bar") {
  auto g = rng::make_stream(6, rng::Stream::counts, 0);
  std::vector<double> v;
  for (int i = 0; i < 5000; ++i) v.push_back(static_cast<double>(sample_geometric(0.875, g)));
  const auto s = est::summarize(v);
  const auto m = est::mdr_stat(v);
  REQUIRE(m.defined);
  CHECK(m.value == Catch::Approx(s.mdr).epsilon(1e-14));
  CHECK(m.se > 0.0);
  // thermal mode with mean 7: MDR tends to sqrt(7/8)
  CHECK(std::fabs(m.value - std::sqrt(7.0 / 8.0)) < 6.0 * m.se);
}

TEST_CASE("g2 of a constant sample is 1 - 1/value") {
  const std::vector<double> v{4.0, 4.0, 4.0, 4.0, 4.0};
  const auto g = est::g2_sample(v, 0);
  REQUIRE(g.defined);
  CHECK(g.value == Catch::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("g2 of sampled four-mode thermal light approaches 1.25") {
  auto g = rng::make_stream(8, rng::Stream::counts, 0);
  std::vector<double> v;
  const int pulses = 200000;
  v.reserve(pulses);
  for (int i = 0; i < pulses; ++i) {
    std::int64_t tot = 0;
    for (int k = 0; k < 4; ++k) tot += sample_geometric(0.5, g);  // n_mean = 1 per mode
    v.push_back(static_cast<double>(tot));
  }
  const auto r = est::g2_sample(v);
  REQUIRE(r.defined);
  CHECK(r.se > 0.0);
  CHECK(std::fabs(r.value - 1.25) < 5.0 * r.se);
}

TEST_CASE("g2 undefined on a zero-mean sample") {
  const std::vector<double> v{0.0, 0.0, 0.0};
  CHECK_FALSE(est::g2_sample(v).defined);
}

TEST_CASE("difference noise vanishes for perfectly correlated beams") {
  mc::Ensemble e;
  for (int i = 0; i < 100; ++i)
    e.records.push_back({i % 7, i % 7, 0});
  e.pulse_count = 100;
  const auto r = est::nrf(e);
  REQUIRE(r.defined);
  CHECK(r.value == 0.0);
  CHECK(r.se == 0.0);
}

TEST_CASE("difference and sum noise on the small reference chain") {
  // exact values from enumeration: NRF 0.776, Fano 2.12
  const auto e = mc::run_ensemble(small_cfg(), 2024, 50000);
  const auto n = est::nrf(e);
  const auto f = est::fano(e);
  REQUIRE(n.defined);
  REQUIRE(f.defined);
  CHECK(std::fabs(n.value - 0.776) < 5.0 * n.se);
  CHECK(std::fabs(f.value - 2.12) < 5.0 * f.se);
  CHECK(n.se > 0.0);
  CHECK(f.se > 0.0);
}

TEST_CASE("estimators refuse empty and zero-brightness ensembles") {
  mc::Ensemble empty;
  CHECK_FALSE(est::nrf(empty).defined);
  CHECK_FALSE(est::fano(empty).defined);

  const auto v = validate(SourceConfig{0.0, 1, 0}, ChannelConfig{0.0, 1.0, 1.0, 1.0, 0.0});
  REQUIRE(v.ok());
  const auto dark = mc::run_ensemble(*v.config, 1, 100);
  CHECK_FALSE(est::nrf(dark).defined);
  CHECK_FALSE(est::fano(dark).defined);
}

TEST_CASE("value extractors prefer the noisy channel when present") {
  mc::Ensemble e;
  e.records = {{1, 2, 3}, {4, 5, 6}};
  e.pulse_count = 2;
  CHECK(est::signal_values(e) == std::vector<double>{1.0, 4.0});
  CHECK(est::idler_values(e) == std::vector<double>{2.0, 5.0});
  CHECK(est::tap_values(e) == std::vector<double>{3.0, 6.0});
  e.noisy = {{1.25, 2.25, 3.25}, {4.25, 5.25, 6.25}};
  CHECK(est::signal_values(e) == std::vector<double>{1.25, 4.25});
  CHECK(est::idler_values(e) == std::vector<double>{2.25, 5.25});
  CHECK(est::tap_values(e) == std::vector<double>{3.25, 6.25});
}

TEST_CASE("straight-line fit recovers an exact line with zero error bars") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> y{2.0, 4.0, 6.0, 8.0, 10.0};
  const auto f = est::linear_fit(x, y);
  REQUIRE(f.ok);
  CHECK(f.slope == Catch::Approx(2.0).epsilon(1e-13));
  CHECK(f.intercept == Catch::Approx(0.0).margin(1e-12));
  CHECK(f.slope_stderr == Catch::Approx(0.0).margin(1e-12));
  CHECK(f.intercept_stderr == Catch::Approx(0.0).margin(1e-12));
  CHECK(f.residual_rms == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("straight-line fit quantifies scatter") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{0.1, 0.9, 2.1, 2.9};
  const auto f = est::linear_fit(x, y);
  REQUIRE(f.ok);
  CHECK(f.slope == Catch::Approx(0.96).epsilon(1e-12));
  CHECK(f.intercept == Catch::Approx(0.06).margin(1e-12));
  CHECK(f.slope_stderr > 0.0);
  CHECK(f.residual_rms > 0.0);
}

TEST_CASE("straight-line fit rejects bad input with a reason") {
  CHECK(est::linear_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}).message ==
        "x and y lengths differ");
  CHECK(est::linear_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2}).message ==
        "need at least 3 points");
  CHECK(est::linear_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}).message ==
        "x values are degenerate");
}

TEST_CASE("gain curve fit recovers exact synthetic data") {
  std::vector<double> P, S;
  for (int p = 12; p <= 28; ++p) {
    P.push_back(static_cast<double>(p));
    const double sh = std::sinh(std::sqrt(static_cast<double>(p)));
    S.push_back(2.0 * sh * sh);
  }
  const auto f = est::gain_fit(P, S);
  REQUIRE(f.ok);
  CHECK(std::fabs(f.amplitude - 2.0) / 2.0 < 1e-6);
  CHECK(std::fabs(f.rate - 1.0) < 1e-6);
  CHECK(f.g_min == Catch::Approx(std::sqrt(f.rate * 12.0)).epsilon(1e-12));
  CHECK(f.g_max == Catch::Approx(std::sqrt(f.rate * 28.0)).epsilon(1e-12));
  CHECK(f.residual_rms < 1e-5 * S.back());
}

TEST_CASE("gain curve fit tolerates multiplicative noise") {
  std::vector<double> P, S;
  auto g = rng::make_stream(90, rng::Stream::noise, 0);
  for (int p = 12; p <= 28; ++p) {
    P.push_back(static_cast<double>(p));
    const double sh = std::sinh(std::sqrt(static_cast<double>(p)));
    S.push_back(2.0 * sh * sh * (1.0 + 0.01 * rng::normal(g)));
  }
  const auto f = est::gain_fit(P, S);
  REQUIRE(f.ok);
  CHECK(std::fabs(f.rate - 1.0) < 0.05);
  CHECK(std::fabs(f.amplitude - 2.0) / 2.0 < 0.25);
}

TEST_CASE("gain curve fit rejects bad input with a reason") {
  const std::vector<double> P{12, 16, 20};
  CHECK(est::gain_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}).message ==
        "power and signal lengths differ");
  CHECK(est::gain_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2}).message ==
        "need at least 3 points");
  CHECK(est::gain_fit(std::vector<double>{-1, 2, 3}, std::vector<double>{1, 2, 3}).message ==
        "powers must be finite and > 0");
  CHECK(est::gain_fit(P, std::vector<double>{1, -2, 3}).message ==
        "signals must be finite and >= 0");
  CHECK(est::gain_fit(P, std::vector<double>{0, 0, 0}).message == "all signals are zero");
}
