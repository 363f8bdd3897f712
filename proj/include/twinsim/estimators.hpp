#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "twinsim/montecarlo.hpp"
#include "twinsim/rng.hpp"

/// Sample statistics over pulse ensembles: per-beam summaries, pair
/// correlation figures, bootstrap standard errors, and the two fits used
/// by the command-line tool. Every routine that resamples is seeded, so
/// outputs are reproducible byte for byte.
namespace twinsim::est {

inline constexpr int kDefaultResamples = 200;
inline constexpr std::uint64_t kDefaultBootstrapSeed = 0xB0075EEDull;

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased, defined for count >= 2
  double mdr = 0.0;       // mean over standard deviation
  std::uint64_t count = 0;
  bool variance_defined = false;
  bool mdr_defined = false;  // additionally requires positive variance
};

inline SampleSummary summarize(std::span<const double> values) {
  SampleSummary s;
  s.count = values.size();
  if (s.count == 0) return s;
  long double sum = 0.0L;
  for (double v : values) sum += v;
  s.mean = static_cast<double>(sum / static_cast<long double>(s.count));
  if (s.count < 2) return s;
  long double ss = 0.0L;
  for (double v : values) {
    const long double d = static_cast<long double>(v) - static_cast<long double>(s.mean);
    ss += d * d;
  }
  s.variance = static_cast<double>(ss / static_cast<long double>(s.count - 1));
  s.variance_defined = true;
  if (s.variance > 0.0) {
    s.mdr = s.mean / std::sqrt(s.variance);
    s.mdr_defined = true;
  }
  return s;
}

struct StatEstimate {
  double value = 0.0;
  double se = 0.0;
  bool defined = false;
};

/// Detector outputs as doubles, preferring the noisy record when present.
inline std::vector<double> signal_values(const mc::Ensemble& e) {
  std::vector<double> v(e.records.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = e.has_noise() ? e.noisy[i].d_s : static_cast<double>(e.records[i].d_s);
  return v;
}

inline std::vector<double> idler_values(const mc::Ensemble& e) {
  std::vector<double> v(e.records.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = e.has_noise() ? e.noisy[i].d_i : static_cast<double>(e.records[i].d_i);
  return v;
}

inline std::vector<double> tap_values(const mc::Ensemble& e) {
  std::vector<double> v(e.records.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = mc::tap_value(e, i);
  return v;
}

namespace detail {

/// Generic nonparametric bootstrap over row indices. The statistic callback
/// returns false for resamples on which it is undefined; those are skipped.
template <class F>
inline double bootstrap_se(std::size_t n, F&& stat, int resamples, std::uint64_t seed) {
  if (n < 2 || resamples < 2) return 0.0;
  auto g = rng::make_stream(seed, rng::Stream::bootstrap, 0);
  std::vector<std::size_t> idx(n);
  std::vector<double> reps;
  reps.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    for (auto& k : idx) {
      auto j = static_cast<std::size_t>(rng::u01(g) * static_cast<double>(n));
      k = j < n ? j : n - 1;
    }
    double v = 0.0;
    if (stat(idx, v)) reps.push_back(v);
  }
  if (reps.size() < 2) return 0.0;
  long double sum = 0.0L;
  for (double v : reps) sum += v;
  const long double mean = sum / static_cast<long double>(reps.size());
  long double ss = 0.0L;
  for (double v : reps) {
    const long double d = v - mean;
    ss += d * d;
  }
  return std::sqrt(static_cast<double>(ss / static_cast<long double>(reps.size() - 1)));
}

inline bool moments_over(const std::vector<double>& v, const std::vector<std::size_t>& idx,
                         double& mean, double& var) {
  if (idx.size() < 2) return false;
  long double sum = 0.0L;
  for (auto k : idx) sum += v[k];
  const long double m = sum / static_cast<long double>(idx.size());
  long double ss = 0.0L;
  for (auto k : idx) {
    const long double d = v[k] - m;
    ss += d * d;
  }
  mean = static_cast<double>(m);
  var = static_cast<double>(ss / static_cast<long double>(idx.size() - 1));
  return true;
}

}  // namespace detail

/// Mean with its analytic standard error sd/sqrt(n).
inline StatEstimate mean_stat(std::span<const double> values) {
  StatEstimate r;
  const SampleSummary s = summarize(values);
  if (s.count == 0) return r;
  r.value = s.mean;
  r.defined = true;
  if (s.variance_defined)
    r.se = std::sqrt(s.variance / static_cast<double>(s.count));
  return r;
}

inline StatEstimate var_stat(std::span<const double> values, int resamples = kDefaultResamples,
                             std::uint64_t seed = kDefaultBootstrapSeed) {
  StatEstimate r;
  const SampleSummary s = summarize(values);
  if (!s.variance_defined) return r;
  r.value = s.variance;
  r.defined = true;
  std::vector<double> v(values.begin(), values.end());
  r.se = detail::bootstrap_se(
      v.size(),
      [&](const std::vector<std::size_t>& idx, double& out) {
        double m = 0.0, va = 0.0;
        if (!detail::moments_over(v, idx, m, va)) return false;
        out = va;
        return true;
      },
      resamples, seed);
  return r;
}

/// Mean-to-deviation ratio mean/sd with a bootstrap standard error.
inline StatEstimate mdr_stat(std::span<const double> values, int resamples = kDefaultResamples,
                             std::uint64_t seed = kDefaultBootstrapSeed) {
  StatEstimate r;
  const SampleSummary s = summarize(values);
  if (!s.mdr_defined) return r;
  r.value = s.mdr;
  r.defined = true;
  std::vector<double> v(values.begin(), values.end());
  r.se = detail::bootstrap_se(
      v.size(),
      [&](const std::vector<std::size_t>& idx, double& out) {
        double m = 0.0, va = 0.0;
        if (!detail::moments_over(v, idx, m, va) || !(va > 0.0)) return false;
        out = m / std::sqrt(va);
        return true;
      },
      resamples, seed);
  return r;
}

/// Normalized second factorial moment E[n(n-1)] / E[n]^2 of a sample.
/// Pass resamples = 0 to skip the bootstrap error.
inline StatEstimate g2_sample(std::span<const double> values, int resamples = kDefaultResamples,
                              std::uint64_t seed = kDefaultBootstrapSeed) {
  StatEstimate r;
  if (values.empty()) return r;
  auto g2_of = [](const auto& get, std::size_t n, double& out) {
    long double s1 = 0.0L, s2 = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const long double x = get(i);
      s1 += x;
      s2 += x * x;
    }
    if (!(s1 > 0.0L)) return false;
    const long double m1 = s1 / static_cast<long double>(n);
    const long double m2 = s2 / static_cast<long double>(n);
    out = static_cast<double>((m2 - m1) / (m1 * m1));
    return true;
  };
  double v = 0.0;
  if (!g2_of([&](std::size_t i) { return values[i]; }, values.size(), v)) return r;
  r.value = v;
  r.defined = true;
  if (resamples > 1) {
    std::vector<double> copy(values.begin(), values.end());
    r.se = detail::bootstrap_se(
        copy.size(),
        [&](const std::vector<std::size_t>& idx, double& out) {
          return g2_of([&](std::size_t i) { return copy[idx[i]]; }, idx.size(), out);
        },
        resamples, seed);
  }
  return r;
}

/// Noise reduction factor Var(d_i - d_s) / E[d_i + d_s] of a pulse ensemble.
inline StatEstimate nrf(const mc::Ensemble& e, int resamples = kDefaultResamples,
                        std::uint64_t seed = kDefaultBootstrapSeed) {
  StatEstimate r;
  const std::size_t n = e.records.size();
  if (n < 2) return r;
  const std::vector<double> s = signal_values(e);
  const std::vector<double> i = idler_values(e);
  std::vector<double> diff(n), tot(n);
  for (std::size_t k = 0; k < n; ++k) {
    diff[k] = i[k] - s[k];
    tot[k] = i[k] + s[k];
  }
  auto stat = [&](const std::vector<std::size_t>& idx, double& out) {
    double dm = 0.0, dv = 0.0;
    if (!detail::moments_over(diff, idx, dm, dv)) return false;
    long double sum = 0.0L;
    for (auto k : idx) sum += tot[k];
    const double tm = static_cast<double>(sum / static_cast<long double>(idx.size()));
    if (!(tm > 0.0)) return false;
    out = dv / tm;
    return true;
  };
  std::vector<std::size_t> all(n);
  for (std::size_t k = 0; k < n; ++k) all[k] = k;
  double v = 0.0;
  if (!stat(all, v)) return r;
  r.value = v;
  r.defined = true;
  r.se = detail::bootstrap_se(n, stat, resamples, seed);
  return r;
}

/// Fano factor Var(d_s + d_i) / E[d_s + d_i] of a pulse ensemble.
inline StatEstimate fano(const mc::Ensemble& e, int resamples = kDefaultResamples,
                         std::uint64_t seed = kDefaultBootstrapSeed) {
  StatEstimate r;
  const std::size_t n = e.records.size();
  if (n < 2) return r;
  const std::vector<double> s = signal_values(e);
  const std::vector<double> i = idler_values(e);
  std::vector<double> tot(n);
  for (std::size_t k = 0; k < n; ++k) tot[k] = s[k] + i[k];
  auto stat = [&](const std::vector<std::size_t>& idx, double& out) {
    double m = 0.0, va = 0.0;
    if (!detail::moments_over(tot, idx, m, va) || !(m > 0.0)) return false;
    out = va / m;
    return true;
  };
  std::vector<std::size_t> all(n);
  for (std::size_t k = 0; k < n; ++k) all[k] = k;
  double v = 0.0;
  if (!stat(all, v)) return r;
  r.value = v;
  r.defined = true;
  r.se = detail::bootstrap_se(n, stat, resamples, seed);
  return r;
}

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double residual_rms = 0.0;
  bool ok = false;
  std::string message;
};

/// Ordinary least squares y = slope * x + intercept with standard errors.
/// Requires at least three points and non-degenerate x.
inline FitResult linear_fit(std::span<const double> xs, std::span<const double> ys) {
  FitResult f;
  const std::size_t n = xs.size();
  if (n != ys.size()) {
    f.message = "x and y lengths differ";
    return f;
  }
  if (n < 3) {
    f.message = "need at least 3 points";
    return f;
  }
  long double sx = 0.0L, sy = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const long double mx = sx / static_cast<long double>(n);
  const long double my = sy / static_cast<long double>(n);
  long double sxx = 0.0L, sxy = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dx = xs[i] - mx;
    sxx += dx * dx;
    sxy += dx * (ys[i] - my);
  }
  if (!(sxx > 0.0L)) {
    f.message = "x values are degenerate";
    return f;
  }
  const long double slope = sxy / sxx;
  const long double intercept = my - slope * mx;
  long double sse = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double r = ys[i] - (slope * xs[i] + intercept);
    sse += r * r;
  }
  const long double s2 = sse / static_cast<long double>(n - 2);
  f.slope = static_cast<double>(slope);
  f.intercept = static_cast<double>(intercept);
  f.slope_stderr = static_cast<double>(std::sqrt(static_cast<double>(s2 / sxx)));
  f.intercept_stderr = static_cast<double>(
      std::sqrt(static_cast<double>(s2 * (1.0L / static_cast<long double>(n) + mx * mx / sxx))));
  f.residual_rms = static_cast<double>(std::sqrt(static_cast<double>(sse / static_cast<long double>(n))));
  f.ok = true;
  return f;
}

struct GainFit {
  double amplitude = 0.0;  // A in A * sinh^2(sqrt(rate * P))
  double rate = 0.0;       // B in the same model
  double residual_rms = 0.0;
  double g_min = 0.0;  // sqrt(rate * P) over the input power range
  double g_max = 0.0;
  bool ok = false;
  std::string message;
};

namespace detail {

/// Sum of squared residuals at rate B with the amplitude profiled out
/// (the least-squares A for fixed B has a closed form).
inline long double gain_sse(std::span<const double> P, std::span<const double> S, double B,
                            double& amplitude) {
  long double sg4 = 0.0L, ssg = 0.0L;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double x = std::sqrt(B * P[i]);
    if (x > 350.0) return std::numeric_limits<long double>::infinity();
    const double sh = std::sinh(x);
    const long double g2 = static_cast<long double>(sh) * sh;
    sg4 += g2 * g2;
    ssg += S[i] * g2;
  }
  if (!(sg4 > 0.0L)) return std::numeric_limits<long double>::infinity();
  const long double A = ssg / sg4;
  amplitude = static_cast<double>(A);
  long double sse = 0.0L;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double x = std::sqrt(B * P[i]);
    const double sh = std::sinh(x);
    const long double r = S[i] - A * (static_cast<long double>(sh) * sh);
    sse += r * r;
  }
  return sse;
}

}  // namespace detail

/// Fits S = A * sinh^2(sqrt(B * P)) by profiled least squares: closed-form
/// amplitude, log-spaced bracket on the rate, then golden-section refinement.
inline GainFit gain_fit(std::span<const double> powers, std::span<const double> signals) {
  GainFit fit;
  const std::size_t n = powers.size();
  if (n != signals.size()) {
    fit.message = "power and signal lengths differ";
    return fit;
  }
  if (n < 3) {
    fit.message = "need at least 3 points";
    return fit;
  }
  double pmin = powers[0], pmax = powers[0], smax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(powers[i]) || powers[i] <= 0.0) {
      fit.message = "powers must be finite and > 0";
      return fit;
    }
    if (!std::isfinite(signals[i]) || signals[i] < 0.0) {
      fit.message = "signals must be finite and >= 0";
      return fit;
    }
    pmin = std::min(pmin, powers[i]);
    pmax = std::max(pmax, powers[i]);
    smax = std::max(smax, signals[i]);
  }
  if (!(smax > 0.0)) {
    fit.message = "all signals are zero";
    return fit;
  }

  // Initial rate from the log-domain slope: ln S grows like 2 sqrt(B P).
  double b0 = 1.0 / pmax;
  {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i)
      if (signals[i] > 0.0) {
        xs.push_back(std::sqrt(powers[i]));
        ys.push_back(std::log(signals[i]));
      }
    if (xs.size() >= 3) {
      const FitResult lf = linear_fit(xs, ys);
      if (lf.ok && lf.slope > 0.0) b0 = 0.25 * lf.slope * lf.slope;
    }
  }
  const double bcap = 300.0 * 300.0 / pmax;  // keeps sinh arguments in range
  b0 = std::clamp(b0, 1e-12, bcap);

  auto sse_at = [&](double B, double& A) { return detail::gain_sse(powers, signals, B, A); };

  // Log-spaced scan around the initial guess; widen once if the minimum
  // lands on an edge of the scan.
  double lo = std::max(1e-15, b0 * 1e-2);
  double hi = std::min(bcap, b0 * 1e2);
  int best = -1;
  std::vector<double> grid;
  for (int attempt = 0; attempt < 2; ++attempt) {
    constexpr int kPoints = 161;
    grid.clear();
    const double lr = std::log(lo), hr = std::log(hi);
    for (int i = 0; i < kPoints; ++i)
      grid.push_back(std::exp(lr + (hr - lr) * i / (kPoints - 1)));
    best = 0;
    long double best_sse = std::numeric_limits<long double>::infinity();
    for (int i = 0; i < kPoints; ++i) {
      double a = 0.0;
      const long double s = sse_at(grid[i], a);
      if (s < best_sse) {
        best_sse = s;
        best = i;
      }
    }
    if (best > 0 && best + 1 < kPoints) break;
    if (attempt == 1) {
      fit.message = "rate search did not bracket a minimum";
      return fit;
    }
    if (best == 0)
      lo = std::max(1e-15, lo * 1e-2);
    else
      hi = std::min(bcap, hi * 1e2);
  }

  double a = grid[best - 1], b = grid[best + 1];
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double amp1 = 0.0, amp2 = 0.0;
  long double f1 = sse_at(x1, amp1), f2 = sse_at(x2, amp2);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * b; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = sse_at(x1, amp1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = sse_at(x2, amp2);
    }
  }
  const double rate = 0.5 * (a + b);
  double amplitude = 0.0;
  const long double sse = sse_at(rate, amplitude);
  fit.rate = rate;
  fit.amplitude = amplitude;
  fit.residual_rms = std::sqrt(static_cast<double>(sse / static_cast<long double>(n)));
  fit.g_min = std::sqrt(rate * pmin);
  fit.g_max = std::sqrt(rate * pmax);
  fit.ok = true;
  return fit;
}

}  // namespace twinsim::est
