#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace mlsis {

/// Mixes a master seed with a stream index into an independent seed
/// (splitmix64 finalizer). Used to give every repetition and every Markov
/// chain its own substream so results do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Random source shared by all samplers: a 64-bit Mersenne twister plus the
/// standard distributions the estimators need.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// A generator seeded from `derive_seed(master, stream)`.
  static Rng substream(std::uint64_t master, std::uint64_t stream) {
    return Rng(derive_seed(master, stream));
  }

  double normal() { return normal_(engine_); }

  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }

  /// Gamma variate with the given shape and scale.
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  /// Beta(a, b) variate via the gamma ratio.
  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace mlsis
