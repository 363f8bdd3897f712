#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "twinsim/rng.hpp"

/// Exact integer variate samplers. All paths are fully self-contained so a
/// stream position maps to the same draw everywhere; no libm-dependent
/// special functions sit on the acceptance boundaries.
namespace twinsim {

/// Options for sample_binomial. The Gaussian fast path is an explicit
/// opt-in approximation: when enabled and n*p*(1-p) exceeds the threshold,
/// the draw is round(n*p + sqrt(n*p*(1-p)) * z) clamped to [0,n] instead of
/// an exact variate. Default off; every shipped scenario keeps it off.
struct BinomialOptions {
  bool gaussian_fast_path = false;
  double gaussian_threshold = 1000.0;  ///< minimum n*p*(1-p) for the fast path
};

/// Geometric photon-number draw, P(n) = (1-lambda) * lambda^n, n >= 0,
/// via inverse transform n = floor(ln U / ln lambda). Mean lambda/(1-lambda).
/// pre: 0 <= lambda < 1
inline std::int64_t sample_geometric(double lambda, std::mt19937_64& g) {
  if (lambda <= 0.0) return 0;
  const double u = rng::u01(g);
  const double x = std::floor(std::log(u) / std::log(lambda));
  return x < 0.0 ? 0 : static_cast<std::int64_t>(x);
}

namespace detail {

// Asymptotic correction phi(k) ~ ln Gamma(k) - ((k-1/2) ln k - k + ln sqrt(2 pi)),
// accurate to ~1e-12 for k >= 10 (the only regime the caller reaches).
inline double stirling_phi(double k) {
  const double k2 = k * k;
  return (13860.0 - (462.0 - (132.0 - (99.0 - 140.0 / k2) / k2) / k2) / k2) / k / 166320.0;
}

// Kachitvichyanukul-Schmeiser accept-reject for n*r*q >= 30, r = min(p,1-p).
// The envelope is the published triangle/parallelogram/exponential-tail mix;
// the final acceptance ratio is evaluated exactly (explicit pmf-ratio product
// near the mode, Stirling form with the derived signs elsewhere).
inline std::int64_t binomial_btpe(std::int64_t n, double r, std::mt19937_64& g) {
  const double q = 1.0 - r;
  const double nd = static_cast<double>(n);
  const double fm = nd * r + r;
  const std::int64_t m = static_cast<std::int64_t>(std::floor(fm));
  const double md = static_cast<double>(m);
  const double nrq = nd * r * q;
  const double p1 = std::floor(2.195 * std::sqrt(nrq) - 4.6 * q) + 0.5;
  const double xm = md + 0.5;
  const double xl = xm - p1;
  const double xr = xm + p1;
  const double c = 0.134 + 20.5 / (15.3 + md);
  double a = (fm - xl) / (fm - xl * r);
  const double laml = a * (1.0 + 0.5 * a);
  a = (xr - fm) / (xr * q);
  const double lamr = a * (1.0 + 0.5 * a);
  const double p2 = p1 * (1.0 + 2.0 * c);
  const double p3 = p2 + c / laml;
  const double p4 = p3 + c / lamr;

  for (;;) {
    const double u = rng::u01(g) * p4;
    double v = rng::u01(g);
    double y;
    bool need_test = true;
    if (u <= p1) {
      y = std::floor(xm - p1 * v + u);
      need_test = false;  // inside the triangle, accept outright
    } else if (u <= p2) {
      const double x = xl + (u - p1) / c;
      v = v * c + 1.0 - std::fabs(x - xm) / p1;
      if (v > 1.0) continue;
      y = std::floor(x);
    } else if (u <= p3) {
      y = std::floor(xl + std::log(v) / laml);
      if (y < 0.0) continue;
      v = v * (u - p2) * laml;
    } else {
      y = std::floor(xr - std::log(v) / lamr);
      if (y > nd) continue;
      v = v * (u - p3) * lamr;
    }

    if (need_test) {
      const double k = std::fabs(y - md);
      if (k <= 20.0 || k >= 0.5 * nrq - 1.0) {
        // explicit pmf ratio f(y)/f(m) as a product, exact
        const double s = r / q;
        const double aa = s * (nd + 1.0);
        double f = 1.0;
        if (md < y) {
          for (double i = md + 1.0; i <= y; i += 1.0) f *= (aa / i - s);
        } else if (md > y) {
          for (double i = y + 1.0; i <= md; i += 1.0) f /= (aa / i - s);
        }
        if (v > f) continue;
      } else {
        // squeeze around t = ln f(y), then exact Stirling evaluation
        const double rho = (k / nrq) * ((k * (k / 3.0 + 0.625) + 1.0 / 6.0) / nrq + 0.5);
        const double t = -k * k / (2.0 * nrq);
        const double alv = std::log(v);
        if (alv < t - rho) {
          // accepted by squeeze
        } else if (alv > t + rho) {
          continue;
        } else {
          const double x1 = y + 1.0;
          const double f1 = md + 1.0;
          const double z = nd + 1.0 - md;
          const double w = nd - y + 1.0;
          const double delta = xm * std::log(f1 / x1) + (nd - md + 0.5) * std::log(z / w) +
                               (y - md) * std::log(w * r / (x1 * q)) + stirling_phi(f1) +
                               stirling_phi(z) - stirling_phi(x1) - stirling_phi(w);
          if (alv > delta) continue;
        }
      }
    }
    return static_cast<std::int64_t>(y);
  }
}

// Sequential CDF inversion, valid while q^n stays normal (n*r <= 30 ensures it).
inline std::int64_t binomial_inversion(std::int64_t n, double r, std::mt19937_64& g) {
  const double q = 1.0 - r;
  const double s = r / q;
  const double aa = s * (static_cast<double>(n) + 1.0);
  for (;;) {
    double f = std::pow(q, static_cast<double>(n));
    double u = rng::u01(g);
    std::int64_t x = 0;
    while (u > f) {
      u -= f;
      ++x;
      if (x > n) break;  // float leakage past the support; redraw
      f *= (aa / static_cast<double>(x) - s);
    }
    if (x <= n) return x;
  }
}

}  // namespace detail

/// Exact Bin(n, p) draw. Regimes: Bernoulli counting for n <= 64, CDF
/// inversion for n*min(p,1-p) <= 30, Kachitvichyanukul-Schmeiser
/// accept-reject otherwise. See BinomialOptions for the optional
/// approximate Gaussian path.
/// pre: n >= 0, 0 <= p <= 1
inline std::int64_t sample_binomial(std::int64_t n, double p, std::mt19937_64& g,
                                    const BinomialOptions& opts = {}) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const double r = p < 0.5 ? p : 1.0 - p;
  const bool flipped = p > 0.5;
  const double nd = static_cast<double>(n);

  if (opts.gaussian_fast_path && nd * r * (1.0 - r) > opts.gaussian_threshold) {
    const double mean = nd * p;
    const double sd = std::sqrt(nd * p * (1.0 - p));
    double x = std::floor(mean + sd * rng::normal(g) + 0.5);
    if (x < 0.0) x = 0.0;
    if (x > nd) x = nd;
    return static_cast<std::int64_t>(x);
  }

  std::int64_t k;
  if (n <= 64) {
    k = 0;
    for (std::int64_t i = 0; i < n; ++i) k += rng::u01(g) < r ? 1 : 0;
  } else if (nd * r <= 30.0) {
    k = detail::binomial_inversion(n, r, g);
  } else {
    k = detail::binomial_btpe(n, r, g);
  }
  return flipped ? n - k : k;
}

}  // namespace twinsim
