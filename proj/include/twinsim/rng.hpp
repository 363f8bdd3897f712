#pragma once

#include <cmath>
#include <cstdint>
#include <random>

/// Deterministic random-number plumbing. Every variate in the toolkit is
/// derived from raw std::mt19937_64 output through the helpers below, so a
/// given (seed, stream, index) triple produces identical draws on every
/// platform and for any thread count.
namespace twinsim::rng {

/// Purpose tags keep independent substreams from ever colliding.
enum class Stream : std::uint64_t {
  counts = 1,     ///< photon generation and thinning
  noise = 2,      ///< detector read noise
  bootstrap = 3,  ///< estimator resampling
  scan = 4,       ///< sweep-point seed derivation
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Collapses (seed, purpose, index) into one well-mixed 64-bit engine seed.
inline std::uint64_t stream_seed(std::uint64_t seed, Stream purpose, std::uint64_t index) {
  std::uint64_t s = seed;
  s ^= splitmix64(s) + static_cast<std::uint64_t>(purpose) * 0xD1B54A32D192ED03ull;
  s ^= splitmix64(s) + index * 0x8CB92BA72F3D8DD7ull;
  return splitmix64(s);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream purpose, std::uint64_t index) {
  return std::mt19937_64(stream_seed(seed, purpose, index));
}

/// Uniform draw on the open interval (0,1); never returns 0 or 1, so logs
/// of the result are always finite.
inline double u01(std::mt19937_64& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; one variate per two uniforms, no cached
/// partner, which keeps the stream position independent of call history.
inline double normal(std::mt19937_64& g) {
  const double u1 = u01(g);
  const double u2 = u01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
}

}  // namespace twinsim::rng
