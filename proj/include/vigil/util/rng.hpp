#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace vigil {

// Deterministic RNG wrapper. std::mt19937_64 emits a standard-specified
// sequence, but the std distributions are implementation-defined, so every
// sampling primitive used for experiment reproducibility is spelled out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // Uniform integer in [lo, hi] inclusive.
  long long range(long long lo, long long hi) {
    return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Uniform real in [0, 1) with 53 bits of precision.
  double real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double real(double lo, double hi) { return lo + (hi - lo) * real(); }

  bool coin() { return (engine_() & 1u) != 0; }

  // Box-Muller; deliberately not std::normal_distribution (impl-defined).
  double normal(double mean = 0.0, double sd = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + sd * spare_;
    }
    double u1, u2;
    do {
      u1 = real();
    } while (u1 <= 0.0);
    u2 = real();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return mean + sd * mag * std::cos(2.0 * M_PI * u2);
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Sample k distinct indices from [0, n) in selection order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used for deriving per-request seeds and cache keys.
inline std::uint64_t fnv1a64_bytes(const void* data, std::size_t len,
                                   std::uint64_t seed = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t seed = 1469598103934665603ull) {
  return fnv1a64_bytes(s.data(), s.size(), seed);
}

// String literals must hash their characters; without this overload they
// would decay to the raw-bytes form with the seed parsed as a length.
inline std::uint64_t fnv1a64(const char* s,
                             std::uint64_t seed = 1469598103934665603ull) {
  return fnv1a64(std::string(s), seed);
}

}  // namespace vigil
