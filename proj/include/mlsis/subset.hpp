#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlsis/model.hpp"
#include "mlsis/rng.hpp"

namespace mlsis {

struct SubsetOptions {
  double p0 = 0.1;
  std::size_t burn_in = 0;
  std::size_t max_levels = 50;
  /// Consecutive non-decreasing thresholds tolerated before giving up.
  std::size_t max_stall = 3;
  unsigned threads = 1;

  /// p0 in (0, 1) with p0 N and 1/p0 integers.
  void validate(std::size_t n_samples) const;
};

struct SubsetLevel {
  int level = 1;
  double threshold = 0.0;
  /// Estimate of P(B_j | B_{j-1}) (P(B_1) for the first entry).
  double numerator = 1.0;
  /// Estimate of P(B_{j-1} | B_j); 1 when the domains are nested.
  double denominator = 1.0;
  double acceptance = 0.0;
  std::vector<std::uint64_t> evals;
};

struct SubsetResult {
  double estimate = 0.0;
  std::vector<SubsetLevel> levels;
  std::vector<std::uint64_t> evals;
};

/// Subset simulation at a fixed level with aCS conditional sampling.
SubsetResult sus_estimate(const LimitStateModel& model, int level, std::size_t n,
                          const SubsetOptions& options, Rng& rng);

/// Multilevel subset simulation: subset j lives on level min(j, L). After a
/// level update the nestedness defect is corrected by the estimated
/// P(B_{j-1} | B_j).
SubsetResult mlsus_estimate(const LimitStateModel& model, std::size_t n,
                            const SubsetOptions& options, Rng& rng);

}  // namespace mlsis
