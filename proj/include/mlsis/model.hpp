#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mlsis/rng.hpp"

namespace mlsis {

/// Failure convention shared by every estimator: G <= 0 is a failure.
constexpr bool is_failure(double g) { return g <= 0.0; }

/// Per-level evaluation counts. Levels are 1-based. Increments are atomic so
/// one counter can be shared by concurrent evaluations.
class EvalCounter {
 public:
  explicit EvalCounter(int max_level);
  EvalCounter(const EvalCounter& other);
  EvalCounter& operator=(const EvalCounter& other);

  int max_level() const { return max_level_; }
  void increment(int level, std::uint64_t by = 1);
  std::uint64_t count(int level) const;
  std::uint64_t total() const;
  /// counts()[l - 1] is the count for level l.
  std::vector<std::uint64_t> counts() const;

 private:
  int max_level_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> counts_;
};

/// A limit-state function G_l : R^{n_l} -> R on a hierarchy of levels
/// 1..max_level(). Implementations must be deterministic and safe to call
/// concurrently.
class LimitStateModel {
 public:
  virtual ~LimitStateModel() = default;

  virtual int max_level() const = 0;
  /// Input dimension n_l; non-decreasing in l.
  virtual std::size_t dim(int level) const = 0;
  /// Spatial dimension d in the cost model 2^{-d (L - l)}.
  virtual int cost_dim() const = 0;
  /// G_l(u); u.size() must equal dim(level).
  virtual double evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const = 0;

  /// Counted evaluation.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level,
                  EvalCounter& counter) const {
    counter.increment(level);
    return evaluate(u, level);
  }

 protected:
  void check_input(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const;
};

/// G(u) = beta - u_1 on R^n with a single level; P_f = Phi(-beta).
class LinearModel final : public LimitStateModel {
 public:
  LinearModel(double beta, std::size_t n);

  int max_level() const override { return 1; }
  std::size_t dim(int) const override { return n_; }
  int cost_dim() const override { return 1; }
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const override;
  using LimitStateModel::evaluate;

  double beta() const { return beta_; }
  double exact_failure_probability() const;

 private:
  double beta_;
  std::size_t n_;
};

/// A model whose value is the same constant everywhere, on `levels` levels.
class ConstantModel final : public LimitStateModel {
 public:
  ConstantModel(double value, std::size_t n, int levels = 1);

  int max_level() const override { return levels_; }
  std::size_t dim(int) const override { return n_; }
  int cost_dim() const override { return 1; }
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const override;
  using LimitStateModel::evaluate;

 private:
  double value_;
  std::size_t n_;
  int levels_;
};

/// Crude Monte Carlo estimate of P(G_l <= 0) from `samples` prior draws.
double mc_estimate(const LimitStateModel& model, int level, std::size_t samples, Rng& rng,
                   EvalCounter& counter);

}  // namespace mlsis
