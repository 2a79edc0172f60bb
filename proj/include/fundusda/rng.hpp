#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace fundusda {

// Deterministic random stream (xoshiro256**). All distributions are written
// out here instead of using <random> distribution objects, whose sequences
// are implementation-defined and would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller. Two uniform draws per call.
  double gauss();

  // Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  // Beta(a, b) via two gamma draws.
  double beta(double a, double b);

  // Uniform integer in [lo, hi). Rejection sampling, exactly uniform.
  int randint(int lo, int hi);

  bool coin(double p = 0.5);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(randint(0, static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream keyed by label. Consumes one parent draw.
  Rng fork(std::string_view label);

 private:
  uint64_t s_[4];
};

// Stable seed derivation for stage/substream seeds.
uint64_t derive_seed(uint64_t base, std::string_view label);

}  // namespace fundusda
