#pragma once

// Counter-mode pseudo-random streams and run provenance.
//
// Every drawn value is a pure function of (seed, stream, counter), so any
// sweep point can be replayed or sharded to a worker without touching the
// draws of any other point. The generator is SplitMix64 evaluated in counter
// mode: the k-th output is finalise(base + (k+1)*GOLDEN), with `base` derived
// from the (seed, stream) pair.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace powlab {

inline constexpr std::string_view kToolVersion = "0.1.0";

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finaliser: a bijective 64-bit mixer with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// FNV-1a over a byte string; used to fingerprint resolved configurations.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Identifies one reproducible run: echoed into every CSV header so a result
// file carries everything needed to regenerate its own body.
struct RunStamp {
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  std::string tool_version = std::string(kToolVersion);
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : base_(detail::mix64(seed + detail::kGolden) ^
              detail::mix64(stream ^ 0x5851f42d4c957f2dULL)),
        counter_(0) {}

  // Pure function of (seed, stream, counter); does not advance the stream.
  std::uint64_t value_at(std::uint64_t counter) const noexcept {
    return detail::mix64(base_ + (counter + 1) * detail::kGolden);
  }

  std::uint64_t next_u64() noexcept { return value_at(counter_++); }

  // Uniform on [0, 1) with 53 significant bits.
  double next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // One biased coin flip. p must lie in [0, 1].
  bool next_bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("bernoulli probability outside [0,1]");
    }
    return next_uniform() < p;
  }

  std::uint64_t counter() const noexcept { return counter_; }
  void set_counter(std::uint64_t c) noexcept { counter_ = c; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_;
};

}  // namespace powlab
