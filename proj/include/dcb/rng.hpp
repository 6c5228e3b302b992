#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace dcb {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic seed derivation: folds tags into a master seed so that
/// independent components (WLANs, sweep cells, stream purposes) get
/// decorrelated generators without perturbing each other.
inline std::uint64_t derive_seed(std::uint64_t master) {
  std::uint64_t s = master ^ 0xd1b54a32d192ed03ULL;
  return splitmix64(s);
}

template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, Tags... rest) {
  std::uint64_t s = master ^ (tag + 0x9e3779b97f4a7c15ULL);
  return derive_seed(splitmix64(s), rest...);
}

inline std::uint64_t stream_tag(std::string_view name) {
  // FNV-1a, stable across platforms
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// One random stream. Uses the standard-specified mt19937_64 engine but
/// hand-rolled variate transforms so draws are bit-stable across standard
/// library implementations.
class RandomStream {
 public:
  RandomStream() : engine_(0) {}
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Exponential with the given mean.
  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dcb
