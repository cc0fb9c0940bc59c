#include "mlsis/mlsis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mlsis/distributions.hpp"
#include "mlsis/errors.hpp"
#include "mlsis/optimize.hpp"

namespace mlsis {

std::vector<double> bridging_log_weights(std::span<const double> g_coarse,
                                         std::span<const double> g_fine, double sigma,
                                         double beta, double beta_prev) {
  if (g_coarse.size() != g_fine.size()) {
    throw InvalidArgument("bridging weights: mismatched value lists");
  }
  std::vector<double> lw(g_fine.size());
  const double step = beta - beta_prev;
  for (std::size_t k = 0; k < lw.size(); ++k) {
    lw[k] = step * (std_normal_log_cdf(-g_fine[k] / sigma) -
                    std_normal_log_cdf(-g_coarse[k] / sigma));
  }
  return lw;
}

BetaSolution solve_beta(std::span<const double> g_coarse, std::span<const double> g_fine,
                        double sigma, double beta_prev, double delta_target) {
  if (g_coarse.empty()) throw InvalidArgument("solve_beta: no samples");
  if (!(beta_prev >= 0.0 && beta_prev < 1.0)) throw InvalidArgument("solve_beta: beta_prev");
  if (!(sigma > 0.0)) throw InvalidArgument("solve_beta: sigma must be > 0");
  if (!(delta_target > 0.0)) throw InvalidArgument("solve_beta: delta_target must be > 0");
  for (std::size_t k = 0; k < g_coarse.size(); ++k) {
    if (!std::isfinite(g_coarse[k]) || !std::isfinite(g_fine[k])) {
      throw InvalidArgument("solve_beta: non-finite limit-state value");
    }
  }
  // Per-sample log-ratio once; weights at beta are exp((beta - beta_prev) r).
  std::vector<double> r(g_fine.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] = std_normal_log_cdf(-g_fine[k] / sigma) - std_normal_log_cdf(-g_coarse[k] / sigma);
  }
  std::vector<double> lw(r.size());
  auto delta = [&](double beta) {
    for (std::size_t k = 0; k < r.size(); ++k) lw[k] = (beta - beta_prev) * r[k];
    return cov_of_log_weights(lw);
  };
  const double full = delta(1.0);
  if (full <= delta_target) return {1.0, full};

  auto objective = [&](double beta) {
    const double d = delta(beta) - delta_target;
    return d * d;
  };
  const ScalarMinimum m = minimize_with_audit(objective, beta_prev, 1.0, 1e-8, 50, false);
  double beta = m.x;
  if (!(beta > beta_prev)) beta = std::min(1.0, beta_prev + 1e-8);
  return {beta, delta(beta)};
}

PeekResult peek_level_update(const SampleEnsemble& ensemble, const LimitStateModel& model,
                             std::size_t n_s, Rng& rng, EvalCounter& counter) {
  const std::size_t n = ensemble.size();
  const int level = ensemble.level;
  if (level >= model.max_level()) throw InvalidArgument("peek: already on the finest level");
  if (n_s == 0 || n_s >= n) throw InvalidArgument("peek: subset size must be in [1, N)");

  // Partial Fisher-Yates: the first n_s entries are a uniform subset.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_s; ++i) std::swap(order[i], order[i + rng.index(n - i)]);

  PeekResult out;
  out.subset.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_s));
  const std::size_t delta_n = model.dim(level + 1) - model.dim(level);
  std::vector<double> lw(n_s);
  for (std::size_t i = 0; i < n_s; ++i) {
    const ChainPoint& p = ensemble.points[out.subset[i]];
    Vector ext(static_cast<Eigen::Index>(delta_n));
    for (Eigen::Index d = 0; d < ext.size(); ++d) ext[d] = rng.normal();
    Vector u(p.u.size() + ext.size());
    u << p.u, ext;
    const double g_fine = model.evaluate(u, level + 1, counter);
    out.extension.push_back(std::move(ext));
    out.g_fine.push_back(g_fine);
    lw[i] = std_normal_log_cdf(-g_fine / ensemble.sigma) -
            std_normal_log_cdf(-p.g / ensemble.sigma);
  }
  out.delta = cov_of_log_weights(lw);
  return out;
}

std::vector<StepRecord> bridge_level(SampleEnsemble& ensemble, const LimitStateModel& model,
                                     MarkovKernel& kernel, const SamplerOptions& options,
                                     Rng& rng, EvalCounter& counter, const PeekResult* peek) {
  const int coarse = ensemble.level;
  if (coarse >= model.max_level()) throw InvalidArgument("bridge: already on the finest level");
  const std::size_t n = ensemble.size();
  const std::size_t delta_n = model.dim(coarse + 1) - model.dim(coarse);
  const double sigma = ensemble.sigma;

  std::vector<long> from_peek(n, -1);
  if (peek) {
    for (std::size_t i = 0; i < peek->subset.size(); ++i) {
      from_peek[peek->subset[i]] = static_cast<long>(i);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    ChainPoint& p = ensemble.points[k];
    p.g_alt = p.g;
    const long i = from_peek[k];
    const Eigen::Index old = p.u.size();
    p.u.conservativeResize(old + static_cast<Eigen::Index>(delta_n));
    if (i >= 0) {
      p.u.tail(static_cast<Eigen::Index>(delta_n)) = peek->extension[static_cast<std::size_t>(i)];
      p.g = peek->g_fine[static_cast<std::size_t>(i)];
    } else {
      for (Eigen::Index d = old; d < p.u.size(); ++d) p.u[d] = rng.normal();
      p.g = model.evaluate(p.u, coarse + 1, counter);
    }
  }

  std::vector<StepRecord> records;
  double beta_prev = 0.0;
  while (beta_prev < 1.0) {
    if (records.size() >= options.max_bridging_steps) {
      throw NonConvergence("bridge_level: no convergence after " +
                           std::to_string(options.max_bridging_steps) + " bridging steps");
    }
    std::vector<double> g_coarse(n);
    std::vector<double> g_fine(n);
    for (std::size_t k = 0; k < n; ++k) {
      g_coarse[k] = ensemble.points[k].g_alt;
      g_fine[k] = ensemble.points[k].g;
    }
    const BetaSolution sol = solve_beta(g_coarse, g_fine, sigma, beta_prev, options.delta_target);
    const auto lw = bridging_log_weights(g_coarse, g_fine, sigma, sol.beta, beta_prev);
    double top = *std::max_element(lw.begin(), lw.end());
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = std::exp(lw[k] - top);

    StepRecord rec;
    rec.kind = StepKind::Bridging;
    rec.level = coarse + 1;
    rec.sigma = sigma;
    rec.beta = sol.beta;
    rec.log_s = log_mean_exp(lw);
    rec.delta = cov_of_weights(w);

    KernelStats stats;
    const auto target = SmoothedTarget::bridging(model, coarse, sigma, sol.beta);
    ensemble.points = resample_move(ensemble.points, w, kernel, target, options, rng, counter,
                                    &stats);
    rec.acceptance = stats.acceptance_rate();
    rec.evals = counter.counts();
    records.push_back(std::move(rec));
    beta_prev = sol.beta;
  }

  ensemble.level = coarse + 1;
  records.back().delta_opt = stopping_cov(ensemble);
  return records;
}

EstimateResult mlsis_estimate(const LimitStateModel& model, std::size_t n,
                              const SamplerOptions& options, Rng& rng) {
  auto kernel = make_kernel(options.kernel);
  return mlsis_estimate(model, n, options, *kernel, rng);
}

EstimateResult mlsis_estimate(const LimitStateModel& model, std::size_t n,
                              const SamplerOptions& options, MarkovKernel& kernel, Rng& rng) {
  options.validate(n);
  const int top_level = model.max_level();
  const auto n_s = static_cast<std::size_t>(
      std::llround(options.ns_fraction * static_cast<double>(n)));
  if (top_level > 1 && (n_s == 0 || n_s >= n)) {
    throw InvalidArgument("mlsis_estimate: ns_fraction * N must be in [1, N)");
  }
  EvalCounter counter(top_level);
  SampleEnsemble ensemble = SampleEnsemble::from_prior(model, 1, n, rng, counter);
  EstimateResult result;
  auto& steps = result.trace.steps;
  std::size_t n_tempering = 0;

  auto temper = [&] {
    if (n_tempering++ >= options.max_tempering_steps) {
      throw NonConvergence("mlsis_estimate: no convergence after " +
                           std::to_string(options.max_tempering_steps) + " tempering steps");
    }
    steps.push_back(tempering_step(ensemble, model, kernel, options, rng, counter));
  };
  auto bridge = [&](const PeekResult* peek) {
    auto recs = bridge_level(ensemble, model, kernel, options, rng, counter, peek);
    steps.insert(steps.end(), recs.begin(), recs.end());
  };

  temper();
  // Once set, "tempering finished" stays set: later bridges never reopen it.
  bool tempering_done = steps.back().delta_opt <= options.delta_target;
  bool bridging_done = ensemble.level == top_level;
  bool last_was_bridge = false;
  while (!tempering_done || !bridging_done) {
    if (tempering_done) {
      bridge(nullptr);
      last_was_bridge = true;
    } else if (bridging_done || last_was_bridge) {
      temper();
      last_was_bridge = false;
    } else {
      PeekResult peek = peek_level_update(ensemble, model, n_s, rng, counter);
      StepRecord rec;
      rec.kind = StepKind::Peek;
      rec.level = ensemble.level + 1;
      rec.sigma = ensemble.sigma;
      rec.delta = peek.delta;
      rec.evals = counter.counts();
      const bool do_bridge = !(peek.delta < options.delta_target);
      rec.reused = do_bridge;
      steps.push_back(std::move(rec));
      if (do_bridge) {
        bridge(&peek);
        last_was_bridge = true;
      } else {
        temper();
        last_was_bridge = false;
      }
    }
    if (steps.back().delta_opt <= options.delta_target) tempering_done = true;
    if (ensemble.level == top_level) bridging_done = true;
  }

  result.trace.log_final_correction = log_optimal_correction(ensemble.g_values(), ensemble.sigma);
  result.estimate = result.trace.estimate();
  result.evals = counter.counts();
  return result;
}

}  // namespace mlsis
