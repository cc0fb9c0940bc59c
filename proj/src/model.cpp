#include "mlsis/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mlsis/distributions.hpp"
#include "mlsis/errors.hpp"

namespace mlsis {

EvalCounter::EvalCounter(int max_level)
    : max_level_(max_level),
      counts_(std::make_unique<std::atomic<std::uint64_t>[]>(
          static_cast<std::size_t>(max_level > 0 ? max_level : 0))) {
  if (max_level < 1) throw InvalidArgument("EvalCounter: max_level must be >= 1");
  for (int l = 0; l < max_level_; ++l) counts_[l].store(0);
}

EvalCounter::EvalCounter(const EvalCounter& other) : EvalCounter(other.max_level_) {
  for (int l = 0; l < max_level_; ++l) counts_[l].store(other.counts_[l].load());
}

EvalCounter& EvalCounter::operator=(const EvalCounter& other) {
  if (this != &other) {
    EvalCounter copy(other);
    max_level_ = copy.max_level_;
    counts_ = std::move(copy.counts_);
  }
  return *this;
}

void EvalCounter::increment(int level, std::uint64_t by) {
  if (level < 1 || level > max_level_) {
    throw InvalidArgument("EvalCounter: level " + std::to_string(level) + " out of range");
  }
  counts_[level - 1].fetch_add(by, std::memory_order_relaxed);
}

std::uint64_t EvalCounter::count(int level) const {
  if (level < 1 || level > max_level_) {
    throw InvalidArgument("EvalCounter: level " + std::to_string(level) + " out of range");
  }
  return counts_[level - 1].load(std::memory_order_relaxed);
}

std::uint64_t EvalCounter::total() const {
  std::uint64_t sum = 0;
  for (int l = 0; l < max_level_; ++l) sum += counts_[l].load(std::memory_order_relaxed);
  return sum;
}

std::vector<std::uint64_t> EvalCounter::counts() const {
  std::vector<std::uint64_t> out(static_cast<std::size_t>(max_level_));
  for (int l = 0; l < max_level_; ++l) out[l] = counts_[l].load(std::memory_order_relaxed);
  return out;
}

void LimitStateModel::check_input(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const {
  if (level < 1 || level > max_level()) {
    throw InvalidArgument("model: level " + std::to_string(level) + " out of range");
  }
  if (static_cast<std::size_t>(u.size()) != dim(level)) {
    throw InvalidArgument("model: input has dimension " + std::to_string(u.size()) +
                          ", level " + std::to_string(level) + " expects " +
                          std::to_string(dim(level)));
  }
}

LinearModel::LinearModel(double beta, std::size_t n) : beta_(beta), n_(n) {
  if (n == 0) throw InvalidArgument("LinearModel: dimension must be >= 1");
}

double LinearModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const {
  check_input(u, level);
  return beta_ - u[0];
}

double LinearModel::exact_failure_probability() const {
  return 0.5 * std::erfc(beta_ / std::numbers::sqrt2);
}

ConstantModel::ConstantModel(double value, std::size_t n, int levels)
    : value_(value), n_(n), levels_(levels) {
  if (n == 0 || levels < 1) throw InvalidArgument("ConstantModel: invalid shape");
}

double ConstantModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const {
  check_input(u, level);
  return value_;
}

double mc_estimate(const LimitStateModel& model, int level, std::size_t samples, Rng& rng,
                   EvalCounter& counter) {
  if (samples == 0) throw InvalidArgument("mc_estimate: need at least one sample");
  const std::size_t n = model.dim(level);
  std::size_t failures = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Vector u = sample_std_normal(n, rng);
    if (is_failure(model.evaluate(u, level, counter))) ++failures;
  }
  return static_cast<double>(failures) / static_cast<double>(samples);
}

}  // namespace mlsis
