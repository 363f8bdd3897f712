#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

/// Core value types shared by the whole toolkit: source and channel
/// parameters, per-pulse records, conditioning windows, and validation.
namespace twinsim {

/// @brief Thermal twin-beam source description.
struct SourceConfig {
  double n_mean_per_mode = 0.0;  ///< mean photons per mode, >= 0
  int matched_modes = 1;         ///< modes present in both beams (M), >= 0
  int unmatched_modes = 0;       ///< independent modes per beam (K), >= 0
};

/// @brief Tapping and detection chain description.
/// Efficiencies are per-photon survival probabilities in [0,1].
struct ChannelConfig {
  double tap_ratio = 0.0;       ///< fraction of each beam diverted to the tap
  double eta_signal = 1.0;      ///< signal-beam detection efficiency
  double eta_idler = 1.0;       ///< idler-beam detection efficiency
  double eta_tap = 1.0;         ///< tap detector efficiency
  double read_noise_sd = 0.0;   ///< Gaussian read noise sd; 0 disables it
};

/// @brief Acceptance window for tap-count conditioning.
/// A record passes when |n_c - center_scale * mean_tap| <= width_sigma * sd_tap / 2.
/// The interval is closed; width_sigma is the FULL width in units of sd_tap.
struct ConditionWindow {
  double center_scale = 1.0;
  double width_sigma = 0.5;
};

/// @brief Number of photons removed from each beam, N >= 0.
struct SubtractionSpec {
  int photons_subtracted = 0;
};

/// @brief Integer detector counts for one pulse.
struct PulseRecord {
  std::int64_t d_s = 0;  ///< signal-beam count
  std::int64_t d_i = 0;  ///< idler-beam count
  std::int64_t n_c = 0;  ///< tap-detector count
};

/// @brief First two central moments; variance >= 0 by construction.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// @brief Self-consistent configuration with the derived Bernoulli
/// parameter lambda = n/(n+1) precomputed. Obtained only through validate().
struct ValidatedConfig {
  SourceConfig source;
  ChannelConfig channel;
  ConditionWindow window;
  double lambda = 0.0;       ///< n_mean_per_mode / (n_mean_per_mode + 1), in [0,1)
  std::uint64_t digest = 0;  ///< stable hash of source + channel values
};

struct ValidationResult {
  std::optional<ValidatedConfig> config;
  std::vector<std::string> errors;
  bool ok() const { return config.has_value(); }
};

namespace detail {

inline void fmt_field(std::string& out, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s=%.17g;", key, v);
  out += buf;
}

// FNV-1a over the canonical text form of the numeric fields.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace detail

/// Stable digest identifying a source + channel pair; the window does not
/// participate because it is applied after generation.
inline std::uint64_t config_digest(const SourceConfig& s, const ChannelConfig& c) {
  std::string txt;
  detail::fmt_field(txt, "n", s.n_mean_per_mode);
  detail::fmt_field(txt, "M", static_cast<double>(s.matched_modes));
  detail::fmt_field(txt, "K", static_cast<double>(s.unmatched_modes));
  detail::fmt_field(txt, "r", c.tap_ratio);
  detail::fmt_field(txt, "es", c.eta_signal);
  detail::fmt_field(txt, "ei", c.eta_idler);
  detail::fmt_field(txt, "et", c.eta_tap);
  detail::fmt_field(txt, "rn", c.read_noise_sd);
  return detail::fnv1a(txt);
}

/// Checks every invariant and reports all violations at once; on success
/// returns the config with lambda precomputed. Validation is idempotent:
/// feeding a validated config back yields the identical result.
inline ValidationResult validate(const SourceConfig& source, const ChannelConfig& channel,
                                 const ConditionWindow& window = {}) {
  ValidationResult r;
  if (!(std::isfinite(source.n_mean_per_mode) && source.n_mean_per_mode >= 0.0))
    r.errors.push_back("n_mean_per_mode must be finite and >= 0");
  if (source.matched_modes < 0) r.errors.push_back("matched_modes must be >= 0");
  if (source.unmatched_modes < 0) r.errors.push_back("unmatched_modes must be >= 0");
  if (source.matched_modes >= 0 && source.unmatched_modes >= 0 &&
      source.matched_modes + source.unmatched_modes < 1)
    r.errors.push_back("matched_modes + unmatched_modes must be >= 1");
  if (!detail::in_unit(channel.tap_ratio)) r.errors.push_back("tap_ratio out of [0,1]");
  if (!detail::in_unit(channel.eta_signal)) r.errors.push_back("eta_signal out of [0,1]");
  if (!detail::in_unit(channel.eta_idler)) r.errors.push_back("eta_idler out of [0,1]");
  if (!detail::in_unit(channel.eta_tap)) r.errors.push_back("eta_tap out of [0,1]");
  if (!(std::isfinite(channel.read_noise_sd) && channel.read_noise_sd >= 0.0))
    r.errors.push_back("read_noise_sd must be finite and >= 0");
  if (!(std::isfinite(window.center_scale) && window.center_scale > 0.0))
    r.errors.push_back("center_scale must be > 0");
  if (!(std::isfinite(window.width_sigma) && window.width_sigma > 0.0))
    r.errors.push_back("width_sigma must be > 0");
  if (!r.errors.empty()) return r;

  ValidatedConfig vc;
  vc.source = source;
  vc.channel = channel;
  vc.window = window;
  vc.lambda = source.n_mean_per_mode / (source.n_mean_per_mode + 1.0);
  vc.digest = config_digest(source, channel);
  r.config = vc;
  return r;
}

}  // namespace twinsim
