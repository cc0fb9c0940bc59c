#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "mlsis/distributions.hpp"
#include "mlsis/mcmc.hpp"
#include "mlsis/model.hpp"
#include "mlsis/rng.hpp"

namespace mlsis::testing {

// Independent normal cdf oracle (erfc based), for values away from the far tail.
inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_std(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

// Hand-rolled generators for property tests. Each case gets its own stream.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  std::size_t size(std::size_t lo, std::size_t hi) { return lo + rng_.index(hi - lo + 1); }
  Vector normal_vector(std::size_t n) { return sample_std_normal(n, rng_); }
  Vector unit_vector(std::size_t n) {
    Vector v = normal_vector(n);
    return v / v.norm();
  }
  std::vector<double> values(std::size_t n, double lo, double hi) {
    std::vector<double> out(n);
    for (double& v : out) v = uniform(lo, hi);
    return out;
  }
  VmfnParams vmfn_params(std::size_t n) {
    VmfnParams p;
    p.nu = unit_vector(n);
    p.kappa = uniform(0.0, 30.0);
    p.shape = uniform(0.5, 15.0);
    p.spread = uniform(0.3, 10.0);
    return p;
  }
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

// G_l(u) = beta - u_1 on every level, with input dimension growing by `step`
// per level. All level updates are exact.
class LevelInvariantLinear final : public LimitStateModel {
 public:
  LevelInvariantLinear(double beta, int levels, std::size_t step = 2)
      : beta_(beta), levels_(levels), step_(step) {}

  int max_level() const override { return levels_; }
  std::size_t dim(int level) const override { return step_ * static_cast<std::size_t>(level); }
  int cost_dim() const override { return 1; }
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const override {
    check_input(u, level);
    return beta_ - u[0];
  }
  using LimitStateModel::evaluate;

 private:
  double beta_;
  int levels_;
  std::size_t step_;
};

// Exact sampler for the tempering densities of G(u) = beta - u_1: a kernel
// whose proposals are i.i.d. draws from the target and always accepted.
// With u_1 - sigma Z >= beta (Z standard normal) the pair (u_1, Z) has the
// target marginal in u_1; draw W = u_1 - sigma Z from its truncated law and
// u_1 | W from the Gaussian conditional.
class PerfectLinearSampler final : public MarkovKernel {
 public:
  explicit PerfectLinearSampler(double beta) : beta_(beta) {}

  std::string name() const override { return "perfect"; }
  void prepare(const Eigen::MatrixXd&, const SmoothedTarget& target) override {
    sigma_ = target.sigma();
  }
  Vector propose(const Vector& current, Rng& rng) const override {
    Vector u = sample_std_normal(static_cast<std::size_t>(current.size()), rng);
    const double s2 = 1.0 + sigma_ * sigma_;
    const double s = std::sqrt(s2);
    // W / s is standard normal truncated to [beta / s, inf); invert the
    // upper tail through log-space bisection on the complementary cdf.
    const double lower = beta_ / s;
    const double log_tail = std_normal_log_cdf(-lower);
    const double target = log_tail + std::log(rng.uniform());
    double lo = lower;
    double hi = lower + 40.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (std_normal_log_cdf(-mid) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double w = s * 0.5 * (lo + hi);
    u[0] = w / s2 + sigma_ / s * rng.normal();
    return u;
  }
  double log_correction(const Vector&, const Vector&) const override {
    return std::numeric_limits<double>::infinity();
  }

 private:
  double beta_;
  double sigma_ = 1.0;
};

}  // namespace mlsis::testing
