#pragma once

#include <cmath>
#include <cstdint>

#include "twinsim/specfun.hpp"

/// Closed-form photon statistics of multimode thermal twin beams and the
/// tapping/detection chain: reference values the sampled estimates are
/// validated against.
namespace twinsim::analytic {

/// Which multimode MDR variant to evaluate; `exact` is what the sampler
/// reproduces, `quoted_form` is the commonly quoted sqrt(M) * N_m / (1 + N_m).
enum class MdrFormula { exact, quoted_form };

/// Single-mode thermal distribution, P(n) = N_m^n / (N_m+1)^(n+1).
/// pre: n >= 0, N_m >= 0
inline double thermal_pmf(std::int64_t n, double n_mean) {
  if (n < 0 || !(n_mean >= 0.0)) return 0.0;
  if (n_mean == 0.0) return n == 0 ? 1.0 : 0.0;
  const double lambda = n_mean / (n_mean + 1.0);
  return std::exp(static_cast<double>(n) * std::log(lambda)) / (n_mean + 1.0);
}

/// M-mode thermal photon-number distribution (negative binomial in the mode
/// count): binom(n+M-1, n) (1-lambda)^M lambda^n. Mean M*N_m, variance
/// M*N_m*(N_m+1). Evaluated in log space once n + M is large.
/// pre: n >= 0, M >= 1, N_m >= 0
inline double multimode_pmf(std::int64_t n, int modes, double n_mean) {
  if (n < 0 || modes < 1 || !(n_mean >= 0.0)) return 0.0;
  if (n_mean == 0.0) return n == 0 ? 1.0 : 0.0;
  const double lambda = n_mean / (n_mean + 1.0);
  const double md = static_cast<double>(modes);
  const double nd = static_cast<double>(n);
  if (nd + md <= 60.0) {
    double coeff = 1.0;  // binom(n+M-1, n) by multiplicative recurrence
    for (std::int64_t k = 1; k <= n; ++k)
      coeff *= (md + static_cast<double>(k) - 1.0) / static_cast<double>(k);
    return coeff * std::pow(1.0 - lambda, md) * std::pow(lambda, nd);
  }
  const double log_coeff = std::lgamma(nd + md) - std::lgamma(nd + 1.0) - std::lgamma(md);
  return std::exp(log_coeff + md * std::log1p(-lambda) + nd * std::log(lambda));
}

/// Zero-delay second-order correlation of M-mode thermal light, 1 + 1/M.
/// pre: M >= 1
inline double g2_multimode(int modes) {
  return 1.0 + 1.0 / static_cast<double>(modes);
}

/// g2 of the N-subtracted single-mode state, (⟨n²⟩ - ⟨n⟩) / ⟨n⟩².
/// Undefined (flagged) when the mean vanishes.
inline specfun::MdrResult g2_subtracted(int N, double n_mean) {
  specfun::MdrResult r;
  const auto m = specfun::subtracted_moments(N, n_mean);
  if (!m.valid_input) {
    r.valid_input = false;
    return r;
  }
  const double mean = m.moments.mean;
  if (mean > 0.0) {
    const double m2 = m.moments.variance + mean * mean;
    r.defined = true;
    r.value = (m2 - mean) / (mean * mean);
  }
  return r;
}

/// Fano factor of the summed beams versus mean photons per mode at overall
/// efficiency eta: F = 2 eta N_m + 1. The slope in N_m is 2 eta.
inline double fano_expected(double n_mean, double eta) {
  return 2.0 * eta * n_mean + 1.0;
}

/// Noise reduction factor of the difference signal for M matched and K
/// unmatched modes per beam at overall efficiency eta:
/// NRF = 1 - eta M/(M+K) + eta N_m K/(M+K).
/// pre: M + K >= 1
inline double nrf_expected(int matched, int unmatched, double eta, double n_mean) {
  const double tot = static_cast<double>(matched + unmatched);
  return 1.0 - eta * static_cast<double>(matched) / tot +
         eta * n_mean * static_cast<double>(unmatched) / tot;
}

/// Multimode MDR. exact: sqrt(M * lambda), which follows from mean M*N_m and
/// variance M*N_m*(N_m+1). quoted_form: sqrt(M) * N_m / (1 + N_m), the quoted
/// approximation (the two agree as N_m grows).
/// pre: M >= 1, N_m >= 0
inline double mdr_multimode(int modes, double n_mean, MdrFormula formula = MdrFormula::exact) {
  const double md = static_cast<double>(modes);
  if (formula == MdrFormula::quoted_form) return std::sqrt(md) * n_mean / (1.0 + n_mean);
  const double lambda = n_mean / (n_mean + 1.0);
  return std::sqrt(md * lambda);
}

}  // namespace twinsim::analytic
