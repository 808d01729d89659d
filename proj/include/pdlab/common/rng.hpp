#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pdlab {

/// std::mt19937_64 with portable draws. The std distributions are
/// implementation-defined, so every sampled value goes through these.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [lo, hi].
  int between(int lo, int hi);
  /// Uniform in [0, 1).
  double uniform();
  bool chance(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller.
  double normal();

  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pdlab
