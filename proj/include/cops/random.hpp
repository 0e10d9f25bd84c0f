#ifndef COPS_RANDOM_HPP
#define COPS_RANDOM_HPP

// Splittable counter-based random stream: Philox4x32-10 (Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3", SC'11) keyed by
// (seed, stream-id). Identical (seed, stream-id) reproduces an identical
// sample sequence; distinct stream-ids give statistically independent
// streams, so parallel sweeps are reproducible independently of scheduling.

#include <array>
#include <cmath>
#include <cstdint>

namespace cops {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Order-dependent 64-bit mix of two words.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ull));
}

struct Philox4x32 {
  std::array<std::uint32_t, 4> counter{{0, 0, 0, 0}};
  std::array<std::uint32_t, 2> key{{0, 0}};

  static void round(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& k) {
    constexpr std::uint64_t m0 = 0xD2511F53ull;
    constexpr std::uint64_t m1 = 0xCD9E8D57ull;
    const std::uint64_t p0 = m0 * ctr[0];
    const std::uint64_t p1 = m1 * ctr[2];
    std::array<std::uint32_t, 4> out;
    out[0] = static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0];
    out[1] = static_cast<std::uint32_t>(p1);
    out[2] = static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1];
    out[3] = static_cast<std::uint32_t>(p0);
    ctr = out;
    k[0] += 0x9E3779B9u;  // golden ratio
    k[1] += 0xBB67AE85u;  // sqrt(3) - 1
  }

  std::array<std::uint32_t, 4> operator()() const {
    auto ctr = counter;
    auto k = key;
    for (int i = 0; i < 10; ++i) round(ctr, k);
    return ctr;
  }

  void increment() {
    if (++counter[0] != 0) return;
    if (++counter[1] != 0) return;
    if (++counter[2] != 0) return;
    ++counter[3];
  }
};

}  // namespace detail

/// Deterministic random stream identified by (seed, stream_id).
class RandomStream {
 public:
  RandomStream() : RandomStream(0, 0) {}
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {
    const std::uint64_t k = detail::mix64(seed, stream_id);
    engine_.key = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    const std::uint64_t c = detail::splitmix64(k);
    engine_.counter = {0, 0, static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Independent child stream; substream(k) is deterministic in (this, k).
  RandomStream substream(std::uint64_t k) const {
    return RandomStream(seed_, detail::mix64(stream_id_, k));
  }

  std::uint64_t next_u64() {
    if (buffered_) {
      buffered_ = false;
      return buffer_;
    }
    const auto block = engine_();
    engine_.increment();
    buffer_ = (static_cast<std::uint64_t>(block[2]) << 32) | block[3];
    buffered_ = true;
    return (static_cast<std::uint64_t>(block[0]) << 32) | block[1];
  }

  /// Uniform on (0, 1): 53-bit mantissa, never exactly 0 or 1.
  double next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  /// Standard normal via the Marsaglia polar method (second value cached).
  double next_gaussian() {
    if (have_cached_gaussian_) {
      have_cached_gaussian_ = false;
      return cached_gaussian_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_uniform() - 1.0;
      v = 2.0 * next_uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    cached_gaussian_ = v * factor;
    have_cached_gaussian_ = true;
    return u * factor;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  detail::Philox4x32 engine_;
  std::uint64_t buffer_ = 0;
  bool buffered_ = false;
  double cached_gaussian_ = 0.0;
  bool have_cached_gaussian_ = false;
};

/// Stream-id derivation helper for (budget, run) style keys.
inline std::uint64_t derive_stream_id(std::uint64_t a, std::uint64_t b) {
  return detail::mix64(a, b);
}

}  // namespace cops

#endif  // COPS_RANDOM_HPP
