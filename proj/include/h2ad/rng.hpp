#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace h2ad {

/// splitmix64 finalizer. Used both to key substreams and as the generator.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a sequence of counters into one substream key.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

/// Counter-based stream: state advances by the golden gamma, output is the
/// finalized state. Cheap to construct, so one per (group, snapshot) is fine.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Circularly-symmetric complex Gaussian with unit variance: (g1 + j g2)/sqrt(2).
template <class Engine>
std::complex<double> complex_gaussian(Engine& eng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double re = normal(eng);
  const double im = normal(eng);
  return {re * M_SQRT1_2, im * M_SQRT1_2};
}

}  // namespace h2ad
