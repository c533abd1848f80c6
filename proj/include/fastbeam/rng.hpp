#pragma once

#include <cstdint>

namespace fastbeam {

/// xoshiro256** with explicit normal/gamma sampling so that streams are
/// reproducible independent of the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                     // [0, 1)
  double uniform(double lo, double hi);
  double normal();                      // standard normal, Box-Muller
  double gamma(double shape);           // unit scale, Marsaglia-Tsang
  int uniform_int(int n);               // [0, n)

  /// Deterministic sub-stream seed for (seed, index) pairs, e.g. per-sample
  /// generators inside a dataset build.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fastbeam
