#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "twinsim/core.hpp"
#include "twinsim/csv.hpp"
#include "twinsim/rng.hpp"
#include "twinsim/sampling.hpp"

/// Pulse-level Monte Carlo of the paired-beam chain: correlated pair
/// emission over matched modes, independent background modes on each arm,
/// a beam-splitter tap feeding a monitor detector, and lossy detection on
/// every output. Reproducibility contract: for a fixed (config, seed,
/// pulse count) the integer records are identical regardless of thread
/// count, and enabling read noise does not change the integer records.
namespace twinsim::mc {

/// Pulses are generated in independently seeded blocks of this size so the
/// stream layout (and hence every record) is invariant under threading.
inline constexpr std::uint64_t kChunkPulses = 4096;

/// Real-valued detector outputs after additive Gaussian read noise.
struct NoisyRecord {
  double d_s = 0.0;
  double d_i = 0.0;
  double n_c = 0.0;
};

struct SimOptions {
  int threads = 1;
  BinomialOptions binomial{};
};

struct Ensemble {
  std::vector<PulseRecord> records;
  /// Parallel to records; filled only when read_noise_sd > 0.
  std::vector<NoisyRecord> noisy;
  std::uint64_t seed = 0;
  std::uint64_t pulse_count = 0;
  std::uint64_t config_digest = 0;

  bool has_noise() const { return !noisy.empty(); }
};

/// Monitor-arm location statistics used to place a selection window.
struct TapSummary {
  double mean = 0.0;
  double sd = 0.0;
  std::uint64_t count = 0;
  bool valid = false;  // requires at least two pulses
};

/// Draws one pulse. The draw order below is fixed; changing it changes the
/// meaning of every published seed.
inline PulseRecord generate_pulse(const ValidatedConfig& cfg, std::mt19937_64& g,
                                  const BinomialOptions& opts = {}) {
  const double lambda = cfg.lambda;
  std::int64_t src_s = 0;
  std::int64_t src_i = 0;
  for (std::int64_t m = 0; m < cfg.source.matched_modes; ++m) {
    const std::int64_t n = sample_geometric(lambda, g);
    src_s += n;
    src_i += n;
  }
  for (std::int64_t k = 0; k < cfg.source.unmatched_modes; ++k)
    src_s += sample_geometric(lambda, g);
  for (std::int64_t k = 0; k < cfg.source.unmatched_modes; ++k)
    src_i += sample_geometric(lambda, g);

  const std::int64_t tap_s = sample_binomial(src_s, cfg.channel.tap_ratio, g, opts);
  const std::int64_t tap_i = sample_binomial(src_i, cfg.channel.tap_ratio, g, opts);

  PulseRecord rec;
  rec.n_c = sample_binomial(tap_s + tap_i, cfg.channel.eta_tap, g, opts);
  rec.d_s = sample_binomial(src_s - tap_s, cfg.channel.eta_signal, g, opts);
  rec.d_i = sample_binomial(src_i - tap_i, cfg.channel.eta_idler, g, opts);
  return rec;
}

namespace detail {

inline void fill_chunk(const ValidatedConfig& cfg, std::uint64_t seed, std::uint64_t chunk,
                       std::uint64_t begin, std::uint64_t end, const SimOptions& opts,
                       Ensemble& out) {
  auto g = rng::make_stream(seed, rng::Stream::counts, chunk);
  for (std::uint64_t i = begin; i < end; ++i)
    out.records[i] = generate_pulse(cfg, g, opts.binomial);
  if (cfg.channel.read_noise_sd > 0.0) {
    // Separate stream: toggling noise must not perturb the counts above.
    auto gn = rng::make_stream(seed, rng::Stream::noise, chunk);
    const double sd = cfg.channel.read_noise_sd;
    for (std::uint64_t i = begin; i < end; ++i) {
      const PulseRecord& r = out.records[i];
      NoisyRecord n;
      n.d_s = static_cast<double>(r.d_s) + sd * rng::normal(gn);
      n.d_i = static_cast<double>(r.d_i) + sd * rng::normal(gn);
      n.n_c = static_cast<double>(r.n_c) + sd * rng::normal(gn);
      out.noisy[i] = n;
    }
  }
}

}  // namespace detail

inline Ensemble run_ensemble(const ValidatedConfig& cfg, std::uint64_t seed,
                             std::uint64_t pulses, const SimOptions& opts = {}) {
  Ensemble e;
  e.seed = seed;
  e.pulse_count = pulses;
  e.config_digest = cfg.digest;
  e.records.resize(pulses);
  if (cfg.channel.read_noise_sd > 0.0) e.noisy.resize(pulses);
  if (pulses == 0) return e;

  const std::uint64_t chunks = (pulses + kChunkPulses - 1) / kChunkPulses;
  const int want = std::max(1, opts.threads);
  const std::uint64_t nthreads =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(want), chunks);

  auto work = [&](std::uint64_t tid) {
    for (std::uint64_t c = tid; c < chunks; c += nthreads) {
      const std::uint64_t begin = c * kChunkPulses;
      const std::uint64_t end = std::min(pulses, begin + kChunkPulses);
      detail::fill_chunk(cfg, seed, c, begin, end, opts, e);
    }
  };
  if (nthreads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::uint64_t t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  return e;
}

/// Value the selection logic sees for pulse i: noisy monitor output when
/// read noise is enabled, the integer count otherwise.
inline double tap_value(const Ensemble& e, std::size_t i) {
  return e.has_noise() ? e.noisy[i].n_c : static_cast<double>(e.records[i].n_c);
}

inline TapSummary tap_statistics(const Ensemble& e) {
  TapSummary s;
  s.count = e.records.size();
  if (s.count < 2) return s;
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < e.records.size(); ++i) {
    const double y = tap_value(e, i) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0, sc = 0.0;
  for (std::size_t i = 0; i < e.records.size(); ++i) {
    const double d = tap_value(e, i) - s.mean;
    const double y = d * d - sc;
    const double t = ss + y;
    sc = (t - ss) - y;
    ss = t;
  }
  s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  s.valid = true;
  return s;
}

enum class ConditionStatus {
  ok,
  empty,       // window valid but no pulse fell inside it
  zero_width,  // tap spread is zero, window degenerates
  too_small,   // fewer than two pulses, tap statistics undefined
};

struct ConditionResult {
  Ensemble ensemble;
  TapSummary tap;
  double lo = 0.0;
  double hi = 0.0;
  double acceptance = 0.0;
  std::uint64_t accepted = 0;
  ConditionStatus status = ConditionStatus::ok;
};

/// Keeps pulses whose monitor value lies in the closed interval centred at
/// center_scale * mean with full width width_sigma * sd. The tap summary
/// is normally measured on the same ensemble; pass one explicitly to
/// condition against reference statistics from elsewhere.
inline ConditionResult apply_condition(const Ensemble& e, const ConditionWindow& w,
                                       const TapSummary& tap) {
  ConditionResult r;
  r.tap = tap;
  r.ensemble.seed = e.seed;
  r.ensemble.config_digest = e.config_digest;
  if (!r.tap.valid) {
    r.status = ConditionStatus::too_small;
    return r;
  }
  if (!(r.tap.sd > 0.0)) {
    r.status = ConditionStatus::zero_width;
    return r;
  }
  const double center = w.center_scale * r.tap.mean;
  const double half = 0.5 * w.width_sigma * r.tap.sd;
  r.lo = center - half;
  r.hi = center + half;
  for (std::size_t i = 0; i < e.records.size(); ++i) {
    const double v = tap_value(e, i);
    if (v >= r.lo && v <= r.hi) {
      r.ensemble.records.push_back(e.records[i]);
      if (e.has_noise()) r.ensemble.noisy.push_back(e.noisy[i]);
    }
  }
  r.accepted = r.ensemble.records.size();
  r.ensemble.pulse_count = r.accepted;
  r.acceptance = static_cast<double>(r.accepted) / static_cast<double>(e.records.size());
  if (r.accepted == 0) r.status = ConditionStatus::empty;
  return r;
}

inline ConditionResult apply_condition(const Ensemble& e, const ConditionWindow& w) {
  return apply_condition(e, w, tap_statistics(e));
}

/// Schema: pulse,d_s,d_i,n_c plus noisy columns when present.
inline std::string ensemble_csv(const Ensemble& e) {
  std::string out;
  out.reserve(32 * e.records.size() + 64);
  out += e.has_noise() ? "pulse,d_s,d_i,n_c,d_s_noisy,d_i_noisy,n_c_noisy\n"
                       : "pulse,d_s,d_i,n_c\n";
  for (std::size_t i = 0; i < e.records.size(); ++i) {
    const PulseRecord& r = e.records[i];
    out += csv::i64(static_cast<long long>(i));
    out += ',';
    out += csv::i64(r.d_s);
    out += ',';
    out += csv::i64(r.d_i);
    out += ',';
    out += csv::i64(r.n_c);
    if (e.has_noise()) {
      const NoisyRecord& n = e.noisy[i];
      out += ',';
      out += csv::g12(n.d_s);
      out += ',';
      out += csv::g12(n.d_i);
      out += ',';
      out += csv::g12(n.n_c);
    }
    out += '\n';
  }
  return out;
}

}  // namespace twinsim::mc
