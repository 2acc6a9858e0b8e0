#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace puforge {

/// Seeded random stream. Draw sequences depend only on (seed, stream label):
/// the engine is mt19937_64 and every distribution below is implemented here,
/// so no standard-library distribution (whose output is implementation-defined)
/// sits on the path.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const std::string& stream() const noexcept { return stream_; }

  /// Independent child stream labelled "<stream>/<label>".
  [[nodiscard]] Rng fork(std::string_view label) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  double gamma(double shape);
  double beta(double a, double b);

  /// Random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::string stream_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace puforge
