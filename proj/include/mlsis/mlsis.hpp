#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mlsis/mcmc.hpp"
#include "mlsis/model.hpp"
#include "mlsis/sis.hpp"

namespace mlsis {

struct BetaSolution {
  double beta = 1.0;
  double delta = 0.0;
};

/// Log bridging weights (beta - beta_prev) [log Phi(-g_fine/sigma) - log Phi(-g_coarse/sigma)].
std::vector<double> bridging_log_weights(std::span<const double> g_coarse,
                                         std::span<const double> g_fine, double sigma,
                                         double beta, double beta_prev);

/// Next bridging exponent in (beta_prev, 1]. Returns exactly 1 when the full
/// step already meets delta_target.
BetaSolution solve_beta(std::span<const double> g_coarse, std::span<const double> g_fine,
                        double sigma, double beta_prev, double delta_target);

/// Fine-level evaluations made on a random subset to decide between
/// tempering and a level update. Kept so a following bridge can reuse them.
struct PeekResult {
  double delta = 0.0;
  std::vector<std::size_t> subset;
  std::vector<Vector> extension;  ///< appended coordinates per subset entry
  std::vector<double> g_fine;
};

/// Evaluates G_{l+1} on n_s samples drawn without replacement and returns
/// the coefficient of variation of Phi(-G_{l+1}/sigma) / Phi(-G_l/sigma).
PeekResult peek_level_update(const SampleEnsemble& ensemble, const LimitStateModel& model,
                             std::size_t n_s, Rng& rng, EvalCounter& counter);

/// Level update l -> l+1 at fixed sigma through a sequence of bridging
/// densities. Extends the dimension first; reuses peek evaluations if given.
/// Returns one record per bridging step; the last carries delta_opt.
std::vector<StepRecord> bridge_level(SampleEnsemble& ensemble, const LimitStateModel& model,
                                     MarkovKernel& kernel, const SamplerOptions& options,
                                     Rng& rng, EvalCounter& counter,
                                     const PeekResult* peek = nullptr);

/// Multilevel SIS over levels 1..model.max_level().
EstimateResult mlsis_estimate(const LimitStateModel& model, std::size_t n,
                              const SamplerOptions& options, Rng& rng);
EstimateResult mlsis_estimate(const LimitStateModel& model, std::size_t n,
                              const SamplerOptions& options, MarkovKernel& kernel, Rng& rng);

}  // namespace mlsis
