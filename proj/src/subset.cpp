#include "mlsis/subset.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "mlsis/distributions.hpp"
#include "mlsis/errors.hpp"
#include "mlsis/mcmc.hpp"

namespace mlsis {

namespace {

bool near_integer(double x) { return std::abs(x - std::round(x)) < 1e-9 * std::max(1.0, x); }

SubsetResult subset_run(const LimitStateModel& model, std::size_t n, const SubsetOptions& options,
                        Rng& rng, const std::function<int(std::size_t)>& level_of,
                        bool burn_in_every_step) {
  options.validate(n);
  const auto n_seeds = static_cast<std::size_t>(std::llround(options.p0 * static_cast<double>(n)));
  const auto chain_length = static_cast<std::size_t>(std::llround(1.0 / options.p0));
  const int top = level_of(options.max_levels);

  EvalCounter counter(model.max_level());
  AcsKernel kernel;
  int level = level_of(1);
  std::vector<ChainPoint> points(n);
  for (auto& p : points) p.u = sample_std_normal(model.dim(level), rng);
  for (auto& p : points) p.g = model.evaluate(p.u, level, counter);

  SubsetResult result;
  double log_estimate = 0.0;
  double prev_threshold = std::numeric_limits<double>::infinity();
  std::size_t stall = 0;
  bool failure_reached = false;

  for (std::size_t j = 1; j <= options.max_levels; ++j) {
    const int next_level = level_of(j);
    const bool level_update = j > 1 && next_level > level;
    const int prev_level = level;
    if (level_update) {
      extend_dimension(points, model.dim(next_level) - model.dim(level), rng);
      for (auto& p : points) {
        p.g_alt = p.g;
        p.g = model.evaluate(p.u, next_level, counter);
      }
      level = next_level;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a].g < points[b].g; });
    double threshold = failure_reached ? 0.0 : points[order[n_seeds - 1]].g;
    if (threshold <= 0.0) {
      threshold = 0.0;
      failure_reached = true;
    }
    std::size_t inside = 0;
    while (inside < n && points[order[inside]].g <= threshold) ++inside;
    if (inside == 0) {
      throw NonConvergence("subset simulation: intermediate domain is empty at step " +
                           std::to_string(j));
    }

    SubsetLevel rec;
    rec.level = level;
    rec.threshold = threshold;
    rec.numerator = static_cast<double>(inside) / static_cast<double>(n);

    const bool final_step = failure_reached && level == top;
    if (!final_step || level_update) {
      std::vector<ChainPoint> seeds;
      seeds.reserve(n_seeds);
      if (inside >= n_seeds) {
        for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(points[order[i]]);
        for (std::size_t i = n_seeds; i-- > 1;) std::swap(seeds[i], seeds[rng.index(i + 1)]);
      } else {
        for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(points[order[rng.index(inside)]]);
      }
      const auto target =
          SmoothedTarget::indicator(model, level, threshold, level_update ? prev_level : 0);
      ChainOptions chain{chain_length,
                         (burn_in_every_step || level_update) ? options.burn_in : 0,
                         options.threads};
      KernelStats stats;
      const std::uint64_t stream = rng.next_u64();
      points = run_chains(seeds, kernel, target, chain, stream, counter, &stats);
      rec.acceptance = stats.acceptance_rate();

      if (level_update) {
        std::size_t back = 0;
        for (const auto& p : points) back += p.g_alt <= prev_threshold ? 1 : 0;
        rec.denominator = static_cast<double>(back) / static_cast<double>(n);
        if (back == 0) {
          throw NonConvergence("multilevel subset simulation: zero denominator estimate");
        }
      }
    }
    rec.evals = counter.counts();
    log_estimate += std::log(rec.numerator) - std::log(rec.denominator);
    result.levels.push_back(rec);

    if (final_step) {
      result.estimate = std::exp(log_estimate);
      result.evals = counter.counts();
      return result;
    }
    if (!level_update && !failure_reached) {
      stall = threshold >= prev_threshold ? stall + 1 : 0;
      if (stall >= options.max_stall) {
        throw NonConvergence("subset simulation: threshold stalled for " +
                             std::to_string(stall) + " steps");
      }
    }
    prev_threshold = threshold;
  }
  throw NonConvergence("subset simulation: no convergence within " +
                       std::to_string(options.max_levels) + " levels");
}

}  // namespace

void SubsetOptions::validate(std::size_t n_samples) const {
  if (n_samples < 2) throw InvalidArgument("need at least 2 samples");
  if (!(p0 > 0.0 && p0 < 1.0)) throw InvalidArgument("p0 must be in (0, 1)");
  if (!near_integer(1.0 / p0)) throw InvalidArgument("1/p0 must be an integer");
  if (!near_integer(p0 * static_cast<double>(n_samples)) ||
      std::llround(p0 * static_cast<double>(n_samples)) < 1) {
    throw InvalidArgument("p0 * N must be a positive integer");
  }
  if (max_levels == 0 || max_stall == 0) throw InvalidArgument("iteration caps must be >= 1");
}

SubsetResult sus_estimate(const LimitStateModel& model, int level, std::size_t n,
                          const SubsetOptions& options, Rng& rng) {
  if (level < 1 || level > model.max_level()) throw InvalidArgument("sus_estimate: bad level");
  return subset_run(model, n, options, rng, [level](std::size_t) { return level; }, true);
}

SubsetResult mlsus_estimate(const LimitStateModel& model, std::size_t n,
                            const SubsetOptions& options, Rng& rng) {
  const int top = model.max_level();
  return subset_run(
      model, n, options, rng,
      [top](std::size_t j) { return static_cast<int>(std::min<std::size_t>(j, top)); }, false);
}

}  // namespace mlsis
