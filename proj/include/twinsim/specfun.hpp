#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "twinsim/core.hpp"

/// Series evaluation for the N-photon-subtracted thermal state whose photon
/// statistics is p(n) proportional to binom(n+N, N)^2 * lambda^n. The
/// normalizer is the diagonal Gauss series sum_n binom(n+N,N)^2 lambda^n,
/// evaluated by term recurrence t_{n+1} = t_n * lambda * ((n+1+N)/(n+1))^2
/// with compensated summation and a power-of-two running scale, so moments
/// stay finite even when the sum itself overflows double range.
namespace twinsim::specfun {

inline constexpr long long kMaxSeriesTerms = 100000000;  // hard iteration cap

struct SeriesResult {
  double value = 0.0;
  long long terms_used = 0;
  double tail_bound = 0.0;  ///< absolute truncation-error bound
  bool converged = false;
  bool overflowed = false;  ///< true when the sum exceeds double range
  bool valid_input = true;
};

struct MomentsResult {
  Moments moments;
  long long terms_used = 0;
  bool converged = false;
  bool valid_input = true;
};

struct PmfResult {
  double value = 0.0;
  bool valid_input = true;
};

struct MdrResult {
  double value = 0.0;
  bool defined = false;
  bool valid_input = true;
};

struct AsymptoticMdr {
  double value = 0.0;
  bool clamped = false;      ///< radicand was negative, value clamped to 0
  bool small_lambda = false; ///< true when the lambda < 0.1 branch was taken
  bool valid_input = true;
};

namespace detail {

struct ScaledSums {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;  // sum t_n, sum n t_n, sum n^2 t_n
  int exp2 = 0;                          // true sums are s_k * 2^exp2
  long long terms = 0;
  double rel_tail = 0.0;                 // max relative truncation bound
  bool converged = false;
};

inline void kahan_add(double& sum, double& comp, double v) {
  const double y = v - comp;
  const double t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

// Accumulates the first three power sums of the series terms at relative
// tolerance rel_tol. Tail bounds use that the term ratio decreases toward
// lambda, so everything past the next term is dominated by a geometric.
inline ScaledSums subtracted_series_sums(int N, double lambda, double rel_tol,
                                         long long max_terms = kMaxSeriesTerms) {
  ScaledSums out;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double t = 1.0;  // term at n = 0
  const double nb = static_cast<double>(N);
  for (long long n = 0;; ++n) {
    const double nd = static_cast<double>(n);
    kahan_add(out.s0, c0, t);
    kahan_add(out.s1, c1, t * nd);
    kahan_add(out.s2, c2, t * nd * nd);
    out.terms = n + 1;

    const double g1 = (nd + 1.0 + nb) / (nd + 1.0);
    const double tau = t * lambda * g1 * g1;  // next term
    const double g2 = (nd + 2.0 + nb) / (nd + 2.0);
    const double rho = lambda * g2 * g2;  // dominating ratio past tau
    if (rho < 1.0) {
      const double geo = 1.0 / (1.0 - rho);
      const double t0 = tau * geo;
      const double t1 = tau * ((nd + 1.0) * geo + rho * geo * geo);
      const double t2 = tau * ((nd + 1.0) * (nd + 1.0) * geo +
                               2.0 * (nd + 1.0) * rho * geo * geo +
                               rho * (1.0 + rho) * geo * geo * geo);
      const double r0 = t0 / out.s0;
      const double r1 = t1 / (out.s1 > 0.0 ? out.s1 : out.s0);
      const double r2 = t2 / (out.s2 > 0.0 ? out.s2 : out.s0);
      const double rel = r0 > r1 ? (r0 > r2 ? r0 : r2) : (r1 > r2 ? r1 : r2);
      if (rel <= rel_tol) {
        out.rel_tail = rel;
        out.converged = true;
        return out;
      }
    }
    if (n + 1 >= max_terms) {
      out.rel_tail = std::numeric_limits<double>::infinity();
      return out;  // converged stays false
    }
    t = tau;
    // common power-of-two rescale keeps term and sums in range; exact in binary
    if (t > 0x1.0p900 || out.s2 > 0x1.0p900) {
      t = std::ldexp(t, -512);
      out.s0 = std::ldexp(out.s0, -512);
      out.s1 = std::ldexp(out.s1, -512);
      out.s2 = std::ldexp(out.s2, -512);
      c0 = std::ldexp(c0, -512);
      c1 = std::ldexp(c1, -512);
      c2 = std::ldexp(c2, -512);
      out.exp2 += 512;
    }
  }
}

inline bool valid_n_lambda(int N, double lambda) {
  return N >= 0 && lambda >= 0.0 && lambda < 1.0 && std::isfinite(lambda);
}

}  // namespace detail

/// Diagonal Gauss series sum_n binom(n+N,N)^2 lambda^n. For N = 0 this is
/// the geometric series 1/(1-lambda); for N = 1 it equals (1+lambda)/(1-lambda)^3.
/// pre: N >= 0, 0 <= lambda < 1, rel_tol > 0
inline SeriesResult hyp2f1_diag(int N, double lambda, double rel_tol = 1e-12,
                                long long max_terms = kMaxSeriesTerms) {
  SeriesResult r;
  if (!detail::valid_n_lambda(N, lambda) || !(rel_tol > 0.0)) {
    r.valid_input = false;
    return r;
  }
  const auto sums = detail::subtracted_series_sums(N, lambda, rel_tol, max_terms);
  r.terms_used = sums.terms;
  r.converged = sums.converged;
  r.value = std::ldexp(sums.s0, sums.exp2);
  if (std::isinf(r.value)) r.overflowed = true;
  r.tail_bound = sums.converged ? sums.rel_tail * r.value
                                : std::numeric_limits<double>::infinity();
  return r;
}

/// Mean and variance of the subtracted-state photon number, computed from
/// ratios of the scaled power sums so no overflow is possible.
/// pre: N >= 0, N_m >= 0; N_m = 0 with N > 0 is rejected (no field to subtract from)
inline MomentsResult subtracted_moments(int N, double n_mean, double rel_tol = 1e-13) {
  MomentsResult r;
  if (N < 0 || !(n_mean >= 0.0) || !std::isfinite(n_mean) || !(rel_tol > 0.0)) {
    r.valid_input = false;
    return r;
  }
  if (n_mean == 0.0) {
    if (N > 0) {
      r.valid_input = false;
      return r;
    }
    r.converged = true;
    r.terms_used = 1;
    return r;  // vacuum: mean 0, variance 0
  }
  const double lambda = n_mean / (n_mean + 1.0);
  const auto sums = detail::subtracted_series_sums(N, lambda, rel_tol);
  r.terms_used = sums.terms;
  r.converged = sums.converged;
  const double mean = sums.s1 / sums.s0;
  const double m2 = sums.s2 / sums.s0;
  r.moments.mean = mean;
  r.moments.variance = m2 - mean * mean;
  if (r.moments.variance < 0.0) r.moments.variance = 0.0;
  return r;
}

/// Probability of n photons in one beam of the N-subtracted state.
/// pre: as subtracted_moments; n >= 0
inline PmfResult subtracted_pmf(int N, double n_mean, std::int64_t n) {
  PmfResult r;
  if (N < 0 || n < 0 || !(n_mean >= 0.0) || !std::isfinite(n_mean)) {
    r.valid_input = false;
    return r;
  }
  if (n_mean == 0.0) {
    if (N > 0) {
      r.valid_input = false;
      return r;
    }
    r.value = n == 0 ? 1.0 : 0.0;
    return r;
  }
  const double lambda = n_mean / (n_mean + 1.0);
  const auto sums = detail::subtracted_series_sums(N, lambda, 1e-14);
  const double log_norm = std::log(sums.s0) + sums.exp2 * 0.6931471805599453;
  const double nd = static_cast<double>(n);
  const double log_binom =
      std::lgamma(nd + N + 1.0) - std::lgamma(static_cast<double>(N) + 1.0) - std::lgamma(nd + 1.0);
  r.value = std::exp(2.0 * log_binom + nd * std::log(lambda) - log_norm);
  return r;
}

/// Mean-to-deviation ratio mean/sqrt(variance) of the subtracted state.
/// For N = 0 it reduces to sqrt(lambda). Undefined when variance is 0.
inline MdrResult subtracted_mdr(int N, double n_mean) {
  MdrResult r;
  const auto m = subtracted_moments(N, n_mean);
  if (!m.valid_input) {
    r.valid_input = false;
    return r;
  }
  if (m.moments.variance > 0.0) {
    r.defined = true;
    r.value = m.moments.mean / std::sqrt(m.moments.variance);
  }
  return r;
}

/// Closed-form large-N estimate of the subtracted-state MDR:
/// sqrt(2 lambda N - 1) in the weak regime (lambda < 0.1), sqrt(2 lambda N + 1)
/// toward lambda -> 1. A negative radicand is clamped to 0 and flagged.
/// pre: N >= 1, N_m >= 0
inline AsymptoticMdr mdr_asymptotic(int N, double n_mean) {
  AsymptoticMdr r;
  if (N < 1 || !(n_mean >= 0.0) || !std::isfinite(n_mean)) {
    r.valid_input = false;
    return r;
  }
  const double lambda = n_mean / (n_mean + 1.0);
  r.small_lambda = lambda < 0.1;
  const double radicand = 2.0 * lambda * static_cast<double>(N) + (r.small_lambda ? -1.0 : 1.0);
  if (radicand < 0.0) {
    r.clamped = true;
    r.value = 0.0;
  } else {
    r.value = std::sqrt(radicand);
  }
  return r;
}

}  // namespace twinsim::specfun
