#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "twinsim/core.hpp"
#include "twinsim/csv.hpp"

/// Exact small-instance reference results obtained by direct enumeration.
/// Everything here is written independently of the series and sampling
/// code: probabilities come from pmf recurrences and dense convolutions,
/// never from the closed forms or samplers it is used to check.
namespace twinsim::oracle {

/// Enumeration is restricted to small sources: (matched + unmatched
/// modes) * n_mean_per_mode must not exceed this.
inline constexpr double kSourceGuard = 50.0;

/// Hard cap on dense joint-table cells, to keep memory bounded.
inline constexpr std::size_t kMaxTableCells = 40000000;

/// Pairs of tap columns whose combined mass falls below this are skipped
/// during the final collapse; the skipped mass is added to the tail.
inline constexpr double kSkipTol = 1e-18;

/// Dense joint distribution of (d_s, d_i, n_c) for one pulse.
struct JointPmf {
  int dmax_s = 0;
  int dmax_i = 0;
  int cmax = 0;
  std::vector<double> p;  // indexed (ds * (dmax_i+1) + di) * (cmax+1) + nc
  /// Probability mass outside the enumerated support (source truncation
  /// plus skipped collapse terms), accounted exactly.
  double truncation_tail = 0.0;
  bool ok = false;
  std::string error;

  double at(int ds, int di, int nc) const {
    if (ds < 0 || di < 0 || nc < 0 || ds > dmax_s || di > dmax_i || nc > cmax) return 0.0;
    return p[(static_cast<std::size_t>(ds) * (dmax_i + 1) + di) * (cmax + 1) + nc];
  }

  double total() const {
    long double s = 0.0L;
    for (double v : p) s += v;
    return static_cast<double>(s);
  }
};

/// Joint photon-number pmf of the two source beams before any optics,
/// truncated to a finite rectangle with the discarded mass accounted.
struct SourcePmf {
  int nmax_s = 0;
  int nmax_i = 0;
  std::vector<double> p;  // indexed n_s * (nmax_i+1) + n_i
  double truncation_tail = 0.0;
  bool ok = false;
  std::string error;

  double at(int ns, int ni) const {
    if (ns < 0 || ni < 0 || ns > nmax_s || ni > nmax_i) return 0.0;
    return p[static_cast<std::size_t>(ns) * (nmax_i + 1) + ni];
  }

  double total() const {
    long double s = 0.0L;
    for (double v : p) s += v;
    return static_cast<double>(s);
  }
};

struct OracleStats {
  Moments signal;
  Moments idler;
  Moments tap;
  double nrf = 0.0;
  double fano = 0.0;
  bool pair_defined = false;  // requires E[d_s + d_i] > 0
  double mdr_signal = 0.0;
  double mdr_idler = 0.0;
  bool mdr_signal_defined = false;
  bool mdr_idler_defined = false;
};

namespace detail {

/// Photon-count pmf of `modes` independent thermal modes, truncated once
/// the retained mass reaches 1 - tol. modes == 0 gives a point mass at 0.
inline std::vector<double> nb_pmf(std::int64_t modes, double lambda, double tol) {
  if (modes == 0 || lambda <= 0.0) return {1.0};
  std::vector<double> p;
  p.push_back(std::pow(1.0 - lambda, static_cast<double>(modes)));
  long double mass = p[0];
  std::size_t k = 0;
  while (mass < 1.0L - static_cast<long double>(tol) && k < 2000000) {
    const double next = p.back() * lambda * (static_cast<double>(k) + static_cast<double>(modes)) /
                        (static_cast<double>(k) + 1.0);
    p.push_back(next);
    mass += next;
    ++k;
  }
  return p;
}

/// Square matrix stored row-major; logical dims are (n+1) x (n+1) for the
/// table of n photons.
struct Grid {
  int dim = 0;  // rows == cols
  std::vector<double> v;
  double& at(int a, int b) { return v[static_cast<std::size_t>(a) * dim + b]; }
  double at(int a, int b) const { return v[static_cast<std::size_t>(a) * dim + b]; }
};

/// Per-photon routing tables: T[n](a, b) is the probability that of n
/// photons, a land in the beam detector and b in the tap detector, each
/// photon independently routed with probabilities (pa, pb, 1-pa-pb).
inline std::vector<Grid> routing_tables(int nmax, double pa, double pb) {
  const double pl = 1.0 - pa - pb;
  std::vector<Grid> T(static_cast<std::size_t>(nmax) + 1);
  T[0].dim = 1;
  T[0].v = {1.0};
  for (int n = 1; n <= nmax; ++n) {
    const Grid& prev = T[n - 1];
    Grid& cur = T[n];
    cur.dim = n + 1;
    cur.v.assign(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; a + b < n; ++b) {
        const double q = prev.at(a, b);
        if (q == 0.0) continue;
        cur.at(a + 1, b) += q * pa;
        cur.at(a, b + 1) += q * pb;
        cur.at(a, b) += q * pl;
      }
  }
  return T;
}

/// Mixture of routing tables over the unmatched-mode count distribution.
inline Grid unmatched_aggregate(const std::vector<double>& nbK, const std::vector<Grid>& T) {
  const int umax = static_cast<int>(nbK.size()) - 1;
  Grid U;
  U.dim = umax + 1;
  U.v.assign(static_cast<std::size_t>(U.dim) * U.dim, 0.0);
  for (int u = 0; u <= umax; ++u) {
    const Grid& t = T[u];
    for (int a = 0; a <= u; ++a)
      for (int b = 0; a + b <= u; ++b) U.at(a, b) += nbK[u] * t.at(a, b);
  }
  return U;
}

/// Full 2-D convolution of independent (detected, tapped) contributions.
inline Grid conv2(const Grid& x, const Grid& y) {
  Grid z;
  z.dim = x.dim + y.dim - 1;
  z.v.assign(static_cast<std::size_t>(z.dim) * z.dim, 0.0);
  for (int a = 0; a < x.dim; ++a)
    for (int b = 0; b < x.dim; ++b) {
      const double q = x.at(a, b);
      if (q == 0.0) continue;
      for (int c = 0; c < y.dim; ++c)
        for (int d = 0; d < y.dim; ++d) {
          const double w = y.at(c, d);
          if (w != 0.0) z.at(a + c, b + d) += q * w;
        }
    }
  return z;
}

}  // namespace detail

/// Exact joint pmf of the raw per-pulse photon totals in the two beams:
/// a shared multimode thermal total (matched modes, identical in both
/// beams) plus an independent multimode thermal total per beam
/// (unmatched modes). No optics are applied.
inline SourcePmf exact_source_pmf(std::int64_t matched_modes, std::int64_t unmatched_modes,
                                  double n_mean_per_mode, double tail_tol = 1e-13) {
  SourcePmf out;
  if (matched_modes < 0 || unmatched_modes < 0 || matched_modes + unmatched_modes < 1 ||
      !(n_mean_per_mode >= 0.0) || !std::isfinite(n_mean_per_mode) || !(tail_tol > 0.0)) {
    out.error = "invalid arguments";
    return out;
  }
  const double load = static_cast<double>(matched_modes + unmatched_modes) * n_mean_per_mode;
  if (load > kSourceGuard) {
    out.error = "exact enumeration requires (matched_modes + unmatched_modes) * "
                "n_mean_per_mode <= 50";
    return out;
  }
  const double lambda = n_mean_per_mode / (n_mean_per_mode + 1.0);
  const std::vector<double> nbM = detail::nb_pmf(matched_modes, lambda, tail_tol);
  const std::vector<double> nbK = detail::nb_pmf(unmatched_modes, lambda, tail_tol);
  const int mmax = static_cast<int>(nbM.size()) - 1;
  const int umax = static_cast<int>(nbK.size()) - 1;
  const int nmax = mmax + umax;
  const std::size_t cells = static_cast<std::size_t>(nmax + 1) * (nmax + 1);
  if (cells > kMaxTableCells) {
    out.error = "instance too large for exact enumeration";
    return out;
  }
  out.nmax_s = nmax;
  out.nmax_i = nmax;
  out.p.assign(cells, 0.0);
  const std::size_t stride = static_cast<std::size_t>(nmax) + 1;
  for (int m = 0; m <= mmax; ++m) {
    const double pm = nbM[m];
    for (int us = 0; us <= umax; ++us) {
      const double pmu = pm * nbK[us];
      double* row = &out.p[static_cast<std::size_t>(m + us) * stride + m];
      for (int ui = 0; ui <= umax; ++ui) row[ui] += pmu * nbK[ui];
    }
  }
  long double covered_m = 0.0L, covered_k = 0.0L;
  for (double v : nbM) covered_m += v;
  for (double v : nbK) covered_k += v;
  out.truncation_tail = static_cast<double>(1.0L - covered_m * covered_k * covered_k);
  out.ok = true;
  return out;
}

/// Exact joint pmf of one pulse's detector outputs by enumerating photon
/// numbers mode by mode and routing every photon through the tap and the
/// detector efficiencies. Requires zero read noise and a small source.
inline JointPmf exact_pipeline(const ValidatedConfig& cfg, double tail_tol = 1e-13) {
  JointPmf out;
  const auto& src = cfg.source;
  const auto& ch = cfg.channel;
  if (ch.read_noise_sd != 0.0) {
    out.error = "exact enumeration requires read_noise_sd == 0";
    return out;
  }
  const double load =
      static_cast<double>(src.matched_modes + src.unmatched_modes) * src.n_mean_per_mode;
  if (load > kSourceGuard) {
    out.error = "exact enumeration requires (matched_modes + unmatched_modes) * "
                "n_mean_per_mode <= 50";
    return out;
  }

  const double lambda = cfg.lambda;
  const double pa_s = (1.0 - ch.tap_ratio) * ch.eta_signal;
  const double pa_i = (1.0 - ch.tap_ratio) * ch.eta_idler;
  const double pb = ch.tap_ratio * ch.eta_tap;

  const std::vector<double> nbM = detail::nb_pmf(src.matched_modes, lambda, tail_tol);
  const std::vector<double> nbK = detail::nb_pmf(src.unmatched_modes, lambda, tail_tol);
  const int mmax = static_cast<int>(nbM.size()) - 1;
  const int umax = static_cast<int>(nbK.size()) - 1;
  const int nmax = mmax > umax ? mmax : umax;
  const int dmax = mmax + umax;  // per-beam photon ceiling inside truncation

  const std::size_t cells = static_cast<std::size_t>(dmax + 1) * (dmax + 1) * (2 * dmax + 1);
  if (cells > kMaxTableCells) {
    out.error = "instance too large for exact enumeration";
    return out;
  }

  const std::vector<detail::Grid> Ts = detail::routing_tables(nmax, pa_s, pb);
  const std::vector<detail::Grid> Ti = detail::routing_tables(nmax, pa_i, pb);
  const detail::Grid Us = detail::unmatched_aggregate(nbK, Ts);
  const detail::Grid Ui = detail::unmatched_aggregate(nbK, Ti);

  out.dmax_s = dmax;
  out.dmax_i = dmax;
  out.cmax = 2 * dmax;
  out.p.assign(cells, 0.0);

  long double skipped = 0.0L;
  const std::size_t stride_c = static_cast<std::size_t>(out.cmax) + 1;
  const std::size_t stride_i = static_cast<std::size_t>(out.dmax_i) + 1;

  std::vector<double> col_s, col_i;
  for (int m = 0; m <= mmax; ++m) {
    const double pm = nbM[m];
    const detail::Grid Vs = detail::conv2(Ts[m], Us);
    const detail::Grid Vi = detail::conv2(Ti[m], Ui);
    const int dim = Vs.dim;  // == Vi.dim == m + umax + 1
    col_s.assign(dim, 0.0);
    col_i.assign(dim, 0.0);
    for (int c = 0; c < dim; ++c)
      for (int d = 0; d < dim; ++d) {
        col_s[c] += Vs.at(d, c);
        col_i[c] += Vi.at(d, c);
      }
    for (int cs = 0; cs < dim; ++cs) {
      if (col_s[cs] == 0.0) continue;
      for (int ci = 0; ci < dim; ++ci) {
        const double pair_mass = pm * col_s[cs] * col_i[ci];
        if (pair_mass < kSkipTol) {
          skipped += pair_mass;
          continue;
        }
        const int nc = cs + ci;
        for (int ds = 0; ds < dim; ++ds) {
          const double vs = Vs.at(ds, cs);
          if (vs == 0.0) continue;
          const double w = pm * vs;
          double* row = &out.p[(static_cast<std::size_t>(ds) * stride_i) * stride_c + nc];
          for (int di = 0; di < dim; ++di) {
            const double vi = Vi.at(di, ci);
            if (vi != 0.0) row[static_cast<std::size_t>(di) * stride_c] += w * vi;
          }
        }
      }
    }
  }

  long double covered_m = 0.0L, covered_k = 0.0L;
  for (double v : nbM) covered_m += v;
  for (double v : nbK) covered_k += v;
  const long double covered = covered_m * covered_k * covered_k;
  out.truncation_tail = static_cast<double>((1.0L - covered) + skipped);
  out.ok = true;
  return out;
}

namespace detail {

struct Accum {
  long double mass = 0.0L;
  long double s1 = 0.0L, s2 = 0.0L;        // signal
  long double i1 = 0.0L, i2 = 0.0L;        // idler
  long double c1 = 0.0L, c2 = 0.0L;        // tap
  long double diff1 = 0.0L, diff2 = 0.0L;  // d_i - d_s
  long double sum1 = 0.0L, sum2 = 0.0L;    // d_s + d_i
};

inline OracleStats stats_from(const Accum& a) {
  OracleStats st;
  if (!(a.mass > 0.0L)) return st;
  const long double z = a.mass;
  auto mom = [&](long double m1, long double m2) {
    Moments mo;
    mo.mean = static_cast<double>(m1 / z);
    const long double va = m2 / z - (m1 / z) * (m1 / z);
    mo.variance = va > 0.0L ? static_cast<double>(va) : 0.0;
    return mo;
  };
  st.signal = mom(a.s1, a.s2);
  st.idler = mom(a.i1, a.i2);
  st.tap = mom(a.c1, a.c2);
  const long double sum_mean = a.sum1 / z;
  if (sum_mean > 0.0L) {
    const long double diff_var = a.diff2 / z - (a.diff1 / z) * (a.diff1 / z);
    const long double sum_var = a.sum2 / z - sum_mean * sum_mean;
    st.nrf = static_cast<double>(diff_var / sum_mean);
    st.fano = static_cast<double>(sum_var / sum_mean);
    st.pair_defined = true;
  }
  if (st.signal.variance > 0.0) {
    st.mdr_signal = st.signal.mean / std::sqrt(st.signal.variance);
    st.mdr_signal_defined = true;
  }
  if (st.idler.variance > 0.0) {
    st.mdr_idler = st.idler.mean / std::sqrt(st.idler.variance);
    st.mdr_idler_defined = true;
  }
  return st;
}

template <class Keep>
inline Accum accumulate(const JointPmf& pmf, Keep&& keep) {
  Accum a;
  for (int ds = 0; ds <= pmf.dmax_s; ++ds)
    for (int di = 0; di <= pmf.dmax_i; ++di)
      for (int nc = 0; nc <= pmf.cmax; ++nc) {
        if (!keep(nc)) continue;
        const double p = pmf.at(ds, di, nc);
        if (p == 0.0) continue;
        a.mass += p;
        a.s1 += p * ds;
        a.s2 += p * static_cast<long double>(ds) * ds;
        a.i1 += p * di;
        a.i2 += p * static_cast<long double>(di) * di;
        a.c1 += p * nc;
        a.c2 += p * static_cast<long double>(nc) * nc;
        const long double d = static_cast<long double>(di) - ds;
        const long double s = static_cast<long double>(di) + ds;
        a.diff1 += p * d;
        a.diff2 += p * d * d;
        a.sum1 += p * s;
        a.sum2 += p * s * s;
      }
  return a;
}

}  // namespace detail

/// Statistics of the full joint table (renormalized over retained mass).
inline OracleStats exact_stats(const JointPmf& pmf) {
  return detail::stats_from(detail::accumulate(pmf, [](int) { return true; }));
}

struct ConditionalStats {
  OracleStats stats;
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;  // pre-normalization probability of the window
  bool ok = false;
  std::string error;
};

/// Statistics of the joint table restricted to monitor counts inside the
/// closed window centred at center_scale * E[n_c] with full width
/// width_sigma * sd(n_c); both taken from the table's own tap marginal.
inline ConditionalStats exact_conditional_stats(const JointPmf& pmf, const ConditionWindow& w) {
  ConditionalStats r;
  const OracleStats base = exact_stats(pmf);
  if (!(base.tap.variance > 0.0)) {
    r.error = "tap distribution has zero spread";
    return r;
  }
  const double sd = std::sqrt(base.tap.variance);
  const double center = w.center_scale * base.tap.mean;
  const double half = 0.5 * w.width_sigma * sd;
  r.lo = center - half;
  r.hi = center + half;
  const auto acc = detail::accumulate(
      pmf, [&](int nc) { return nc >= r.lo && nc <= r.hi; });
  r.mass = static_cast<double>(acc.mass);
  if (!(acc.mass > 0.0L)) {
    r.error = "window selects no probability mass";
    return r;
  }
  r.stats = detail::stats_from(acc);
  r.ok = true;
  return r;
}

struct SubtractedReference {
  std::vector<double> pmf;  // normalized over 0..n_max
  Moments moments;
  bool ok = false;
  std::string error;
};

/// Direct log-domain summation of the heralded photon-number weights
/// binom(n+N, N)^2 * lambda^n, independent of the series implementation.
inline SubtractedReference exact_subtracted_reference(std::int64_t subtracted, double n_mean,
                                                      int n_max) {
  SubtractedReference r;
  if (subtracted < 0 || !(n_mean >= 0.0) || n_max < 0) {
    r.error = "invalid arguments";
    return r;
  }
  if (n_mean == 0.0) {
    if (subtracted > 0) {
      r.error = "zero mean admits no subtraction";
      return r;
    }
    r.pmf.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    r.pmf[0] = 1.0;
    r.moments = {0.0, 0.0};
    r.ok = true;
    return r;
  }
  const long double lambda = static_cast<long double>(n_mean) / (n_mean + 1.0);
  const long double loglam = std::log(lambda);
  std::vector<long double> logw(static_cast<std::size_t>(n_max) + 1);
  long double logmax = -1e30L;
  for (int n = 0; n <= n_max; ++n) {
    long double lb = 0.0L;
    for (std::int64_t k = 1; k <= subtracted; ++k)
      lb += std::log((static_cast<long double>(n) + k) / static_cast<long double>(k));
    logw[n] = 2.0L * lb + static_cast<long double>(n) * loglam;
    if (logw[n] > logmax) logmax = logw[n];
  }
  long double s0 = 0.0L, s1 = 0.0L, s2 = 0.0L;
  std::vector<long double> w(logw.size());
  for (int n = 0; n <= n_max; ++n) {
    w[n] = std::exp(logw[n] - logmax);
    s0 += w[n];
    s1 += w[n] * n;
    s2 += w[n] * static_cast<long double>(n) * n;
  }
  // Geometric bound on everything past n_max, weighted up to n^2.
  const long double nn = static_cast<long double>(n_max) + 1.0L;
  const long double rho =
      lambda * ((nn + 1.0L + subtracted) / (nn + 1.0L)) * ((nn + 1.0L + subtracted) / (nn + 1.0L));
  if (!(rho < 1.0L)) {
    r.error = "n_max too small: tail ratio not yet below 1";
    return r;
  }
  const long double t_next =
      w[n_max] * lambda * ((nn + subtracted) / nn) * ((nn + subtracted) / nn);
  const long double geo = 1.0L / (1.0L - rho);
  const long double tail2 =
      t_next * (nn * nn * geo + 2.0L * nn * rho * geo * geo + rho * (1.0L + rho) * geo * geo * geo);
  const long double tail0 = t_next * geo;
  if (!(tail2 <= 1e-12L * (s2 > s0 ? s2 : s0)) || !(tail0 <= 1e-14L * s0)) {
    r.error = "n_max too small for requested accuracy";
    return r;
  }
  r.pmf.resize(logw.size());
  for (int n = 0; n <= n_max; ++n) r.pmf[n] = static_cast<double>(w[n] / s0);
  const long double mean = s1 / s0;
  const long double var = s2 / s0 - mean * mean;
  r.moments.mean = static_cast<double>(mean);
  r.moments.variance = var > 0.0L ? static_cast<double>(var) : 0.0;
  r.ok = true;
  return r;
}

/// Schema: d_s,d_i,n_c,p for entries with p >= min_p, in lexicographic
/// (d_s, d_i, n_c) order.
inline std::string joint_pmf_csv(const JointPmf& pmf, double min_p = 1e-16) {
  std::string out = "d_s,d_i,n_c,p\n";
  for (int ds = 0; ds <= pmf.dmax_s; ++ds)
    for (int di = 0; di <= pmf.dmax_i; ++di)
      for (int nc = 0; nc <= pmf.cmax; ++nc) {
        const double p = pmf.at(ds, di, nc);
        if (p < min_p) continue;
        out += csv::i64(ds);
        out += ',';
        out += csv::i64(di);
        out += ',';
        out += csv::i64(nc);
        out += ',';
        out += csv::g12(p);
        out += '\n';
      }
  return out;
}

}  // namespace twinsim::oracle
