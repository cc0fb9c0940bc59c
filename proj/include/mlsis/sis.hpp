#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mlsis/mcmc.hpp"
#include "mlsis/model.hpp"
#include "mlsis/rng.hpp"

namespace mlsis {

struct SamplerOptions {
  double delta_target = 0.25;
  KernelKind kernel = KernelKind::Vmfn;
  /// Seed fraction: N c chains of length 1/c per move.
  double c = 0.1;
  std::size_t burn_in = 0;
  /// Peek subset size as a fraction of N (multilevel only).
  double ns_fraction = 0.1;
  std::size_t max_tempering_steps = 100;
  std::size_t max_bridging_steps = 100;
  /// Worker threads for the chains of one adaptation batch.
  unsigned threads = 1;

  /// Checks the option ranges and that c N and 1/c are integers.
  void validate(std::size_t n_samples) const;
  std::size_t seed_count(std::size_t n_samples) const;
  std::size_t chain_length() const;
};

inline constexpr double kSigmaMin = 1e-8;
inline constexpr double kSigmaMax = 1e8;

/// The particle system moved through tempering and bridging. Every point
/// caches G at the ensemble's level.
struct SampleEnsemble {
  std::vector<ChainPoint> points;
  int level = 1;
  double sigma = std::numeric_limits<double>::infinity();

  std::size_t size() const { return points.size(); }
  std::vector<double> g_values() const;

  /// N prior draws in R^{n_level}, each evaluated at `level`.
  static SampleEnsemble from_prior(const LimitStateModel& model, int level, std::size_t n,
                                   Rng& rng, EvalCounter& counter);
};

enum class StepKind { Tempering, Bridging, Peek };
const char* to_string(StepKind kind);

struct StepRecord {
  StepKind kind = StepKind::Tempering;
  /// Ensemble level after the step (the target fine level for a peek).
  int level = 1;
  double sigma = 0.0;
  /// Bridging exponent reached; 0 for other steps.
  double beta = 0.0;
  /// log of the normalizing-constant ratio estimate; 0 for a peek.
  double log_s = 0.0;
  /// Coefficient of variation of the step's weights.
  double delta = 0.0;
  /// Stopping statistic after the step; NaN where not computed.
  double delta_opt = std::numeric_limits<double>::quiet_NaN();
  /// The minimizer sits on the search-interval boundary.
  bool boundary = false;
  /// Peek evaluations reused by the bridge that followed.
  bool reused = false;
  double acceptance = 0.0;
  /// Cumulative per-level evaluation counts after the step.
  std::vector<std::uint64_t> evals;
};

struct EstimatorTrace {
  std::vector<StepRecord> steps;
  /// log of the mean optimal-density weight on the final ensemble.
  double log_final_correction = 0.0;

  std::size_t count(StepKind kind) const;
  /// Sum of all log_s plus the final correction.
  double log_estimate() const;
  double estimate() const;
};

struct EstimateResult {
  double estimate = 0.0;
  EstimatorTrace trace;
  std::vector<std::uint64_t> evals;  ///< evals[l - 1] for level l
};

struct SigmaSolution {
  double sigma = 0.0;
  double delta = 0.0;
  bool boundary = false;
};

/// Log tempering weights Phi(-g/sigma) / Phi(-g/sigma_prev); the denominator
/// is 1 when sigma_prev is infinite.
std::vector<double> tempering_log_weights(std::span<const double> g, double sigma,
                                          double sigma_prev);

/// Next temperature: the sigma in (0, sigma_prev) whose weights have a
/// coefficient of variation closest to delta_target. A 50-point grid on
/// log sigma brackets the minimum and golden-section search refines it; ties
/// go to the smaller sigma.
SigmaSolution solve_sigma(std::span<const double> g, double sigma_prev, double delta_target);

/// Coefficient of variation of I(G <= 0) / Phi(-G/sigma); +inf when no
/// sample fails.
double stopping_cov(std::span<const double> g, double sigma);
double stopping_cov(const SampleEnsemble& ensemble);

/// log of the mean of I(G <= 0) / Phi(-G/sigma); -inf without failures.
double log_optimal_correction(std::span<const double> g, double sigma);

/// One tempering step at the ensemble's level: choose sigma, weight,
/// resample and move with MCMC. Returns the step record (delta_opt filled).
StepRecord tempering_step(SampleEnsemble& ensemble, const LimitStateModel& model,
                          MarkovKernel& kernel, const SamplerOptions& options, Rng& rng,
                          EvalCounter& counter);

/// Resamples N c seeds by the given weights and moves them with MCMC to N
/// samples of `target`. Fits the kernel on the weighted ensemble first.
std::vector<ChainPoint> resample_move(const std::vector<ChainPoint>& points,
                                      std::span<const double> weights, MarkovKernel& kernel,
                                      const SmoothedTarget& target,
                                      const SamplerOptions& options, Rng& rng,
                                      EvalCounter& counter, KernelStats* stats);

/// Single-level SIS at `level` with N samples.
EstimateResult sis_estimate(const LimitStateModel& model, int level, std::size_t n,
                            const SamplerOptions& options, Rng& rng);
EstimateResult sis_estimate(const LimitStateModel& model, int level, std::size_t n,
                            const SamplerOptions& options, MarkovKernel& kernel, Rng& rng);

}  // namespace mlsis
