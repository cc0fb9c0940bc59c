#include "mlsis/sis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlsis/distributions.hpp"
#include "mlsis/errors.hpp"
#include "mlsis/optimize.hpp"

namespace mlsis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool near_integer(double x) { return std::abs(x - std::round(x)) < 1e-9 * std::max(1.0, x); }

std::vector<double> normalized_weights(std::span<const double> log_weights) {
  double top = -kInf;
  for (double lw : log_weights) top = std::max(top, lw);
  if (top == -kInf || std::isnan(top)) throw DegenerateWeights("all weights are zero");
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - top);
  return w;
}

}  // namespace

void SamplerOptions::validate(std::size_t n_samples) const {
  if (n_samples < 2) throw InvalidArgument("need at least 2 samples");
  if (!(delta_target > 0.0) || !std::isfinite(delta_target)) {
    throw InvalidArgument("delta_target must be > 0");
  }
  if (!(c > 0.0 && c <= 1.0)) throw InvalidArgument("c must be in (0, 1]");
  if (!near_integer(1.0 / c)) throw InvalidArgument("1/c must be an integer");
  if (!near_integer(c * static_cast<double>(n_samples))) {
    throw InvalidArgument("c * N must be an integer");
  }
  if (!(ns_fraction > 0.0 && ns_fraction < 1.0)) {
    throw InvalidArgument("ns_fraction must be in (0, 1)");
  }
  if (max_tempering_steps == 0 || max_bridging_steps == 0) {
    throw InvalidArgument("iteration caps must be >= 1");
  }
}

std::size_t SamplerOptions::seed_count(std::size_t n_samples) const {
  return static_cast<std::size_t>(std::llround(c * static_cast<double>(n_samples)));
}

std::size_t SamplerOptions::chain_length() const {
  return static_cast<std::size_t>(std::llround(1.0 / c));
}

std::vector<double> SampleEnsemble::g_values() const {
  std::vector<double> g(points.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = points[k].g;
  return g;
}

SampleEnsemble SampleEnsemble::from_prior(const LimitStateModel& model, int level, std::size_t n,
                                          Rng& rng, EvalCounter& counter) {
  SampleEnsemble e;
  e.level = level;
  e.points.resize(n);
  const std::size_t dim = model.dim(level);
  for (auto& p : e.points) p.u = sample_std_normal(dim, rng);
  for (auto& p : e.points) p.g = model.evaluate(p.u, level, counter);
  return e;
}

const char* to_string(StepKind kind) {
  switch (kind) {
    case StepKind::Tempering:
      return "tempering";
    case StepKind::Bridging:
      return "bridging";
    case StepKind::Peek:
      return "peek";
  }
  return "?";
}

std::size_t EstimatorTrace::count(StepKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [kind](const auto& s) { return s.kind == kind; }));
}

double EstimatorTrace::log_estimate() const {
  double sum = log_final_correction;
  for (const auto& s : steps) sum += s.log_s;
  return sum;
}

double EstimatorTrace::estimate() const { return std::exp(log_estimate()); }

std::vector<double> tempering_log_weights(std::span<const double> g, double sigma,
                                          double sigma_prev) {
  std::vector<double> lw(g.size());
  const bool first = std::isinf(sigma_prev);
  for (std::size_t k = 0; k < g.size(); ++k) {
    lw[k] = std_normal_log_cdf(-g[k] / sigma);
    if (!first) lw[k] -= std_normal_log_cdf(-g[k] / sigma_prev);
  }
  return lw;
}

SigmaSolution solve_sigma(std::span<const double> g, double sigma_prev, double delta_target) {
  if (g.empty()) throw InvalidArgument("solve_sigma: no samples");
  if (!(sigma_prev > 0.0)) throw InvalidArgument("solve_sigma: sigma_prev must be > 0");
  if (!(delta_target > 0.0)) throw InvalidArgument("solve_sigma: delta_target must be > 0");
  for (double v : g) {
    if (!std::isfinite(v)) throw InvalidArgument("solve_sigma: non-finite limit-state value");
  }
  const double upper = std::min(sigma_prev, kSigmaMax);
  if (!(upper > kSigmaMin)) throw NonConvergence("solve_sigma: sigma reached its lower bound");

  auto delta = [&](double log_sigma) {
    return cov_of_log_weights(tempering_log_weights(g, std::exp(log_sigma), sigma_prev));
  };
  auto objective = [&](double log_sigma) {
    const double d = delta(log_sigma) - delta_target;
    return d * d;
  };
  const double lo = std::log(kSigmaMin);
  const double hi = std::log(upper);
  const ScalarMinimum m = minimize_with_audit(objective, lo, hi, 1e-4, 50, true);
  SigmaSolution out;
  out.sigma = m.x == hi ? upper : (m.x == lo ? kSigmaMin : std::exp(m.x));
  out.delta = delta(m.x);
  out.boundary = (m.x == lo || m.x == hi);
  return out;
}

double log_optimal_correction(std::span<const double> g, double sigma) {
  std::vector<double> lw(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    lw[k] = is_failure(g[k]) ? -std_normal_log_cdf(-g[k] / sigma) : -kInf;
  }
  return log_mean_exp(lw);
}

double stopping_cov(std::span<const double> g, double sigma) {
  std::vector<double> lw(g.size());
  bool any = false;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (is_failure(g[k])) {
      lw[k] = -std_normal_log_cdf(-g[k] / sigma);
      any = true;
    } else {
      lw[k] = -kInf;
    }
  }
  if (!any) return kInf;
  return cov_of_log_weights(lw);
}

double stopping_cov(const SampleEnsemble& ensemble) {
  return stopping_cov(ensemble.g_values(), ensemble.sigma);
}

std::vector<ChainPoint> resample_move(const std::vector<ChainPoint>& points,
                                      std::span<const double> weights, MarkovKernel& kernel,
                                      const SmoothedTarget& target,
                                      const SamplerOptions& options, Rng& rng,
                                      EvalCounter& counter, KernelStats* stats) {
  kernel.fit(as_matrix(points), weights);
  const auto idx = resample_multinomial(weights, options.seed_count(points.size()), rng);
  std::vector<ChainPoint> seeds;
  seeds.reserve(idx.size());
  for (std::size_t i : idx) seeds.push_back(points[i]);
  const std::uint64_t stream = rng.next_u64();
  ChainOptions chain{options.chain_length(), options.burn_in, options.threads};
  return run_chains(seeds, kernel, target, chain, stream, counter, stats);
}

StepRecord tempering_step(SampleEnsemble& ensemble, const LimitStateModel& model,
                          MarkovKernel& kernel, const SamplerOptions& options, Rng& rng,
                          EvalCounter& counter) {
  const auto g = ensemble.g_values();
  const SigmaSolution sol = solve_sigma(g, ensemble.sigma, options.delta_target);
  const auto lw = tempering_log_weights(g, sol.sigma, ensemble.sigma);
  const auto w = normalized_weights(lw);

  StepRecord rec;
  rec.kind = StepKind::Tempering;
  rec.level = ensemble.level;
  rec.sigma = sol.sigma;
  rec.log_s = log_mean_exp(lw);
  rec.delta = cov_of_weights(w);
  rec.boundary = sol.boundary;

  KernelStats stats;
  const auto target = SmoothedTarget::tempering(model, ensemble.level, sol.sigma);
  ensemble.points = resample_move(ensemble.points, w, kernel, target, options, rng, counter, &stats);
  ensemble.sigma = sol.sigma;

  rec.acceptance = stats.acceptance_rate();
  rec.delta_opt = stopping_cov(ensemble);
  rec.evals = counter.counts();
  return rec;
}

EstimateResult sis_estimate(const LimitStateModel& model, int level, std::size_t n,
                            const SamplerOptions& options, Rng& rng) {
  auto kernel = make_kernel(options.kernel);
  return sis_estimate(model, level, n, options, *kernel, rng);
}

EstimateResult sis_estimate(const LimitStateModel& model, int level, std::size_t n,
                            const SamplerOptions& options, MarkovKernel& kernel, Rng& rng) {
  options.validate(n);
  if (level < 1 || level > model.max_level()) throw InvalidArgument("sis_estimate: bad level");
  EvalCounter counter(model.max_level());
  SampleEnsemble ensemble = SampleEnsemble::from_prior(model, level, n, rng, counter);

  EstimateResult result;
  do {
    if (result.trace.steps.size() >= options.max_tempering_steps) {
      throw NonConvergence("sis_estimate: no convergence after " +
                           std::to_string(options.max_tempering_steps) + " tempering steps");
    }
    result.trace.steps.push_back(
        tempering_step(ensemble, model, kernel, options, rng, counter));
  } while (!(result.trace.steps.back().delta_opt <= options.delta_target));

  result.trace.log_final_correction = log_optimal_correction(ensemble.g_values(), ensemble.sigma);
  result.estimate = result.trace.estimate();
  result.evals = counter.counts();
  return result;
}

}  // namespace mlsis
