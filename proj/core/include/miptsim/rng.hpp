#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace mipt {

// Seeded, stream-indexed RNG. One stream per (disorder realization, object
// class); identical (base_seed, stream_index) pairs reproduce the exact
// same draw sequence, distinct stream indices give independent sequences.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_index)
      : base_seed_(base_seed), stream_index_(stream_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed),
                      static_cast<std::uint32_t>(base_seed >> 32),
                      static_cast<std::uint32_t>(stream_index),
                      static_cast<std::uint32_t>(stream_index >> 32)};
    engine_.seed(seq);
  }

  double uniform() { return unif_(engine_); }             // [0, 1)
  double normal() { return norm_(engine_); }              // N(0, 1)
  bool bernoulli(double p) { return unif_(engine_) < p; }

  // complex Gaussian with E[z] = 0, E[|z|^2] = var (var/2 per quadrature)
  std::complex<double> complex_normal(double var = 1.0) {
    const double s = std::sqrt(0.5 * var);
    const double re = norm_(engine_);
    const double im = norm_(engine_);
    return {s * re, s * im};
  }

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

 private:
  std::uint64_t base_seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

// Stream classes used by the trajectory runners. Keeping gates, measurement
// locations and Born outcomes on separate streams makes the forced-mode
// measurement pattern replayable independently of the state.
enum class StreamClass : std::uint64_t {
  gates = 0,
  pattern = 1,
  outcomes = 2,
  tensors = 3,
};

inline constexpr std::uint64_t kStreamClasses = 4;

inline std::uint64_t stream_index_for(std::uint64_t realization, StreamClass c) {
  return realization * kStreamClasses + static_cast<std::uint64_t>(c);
}

}  // namespace mipt
