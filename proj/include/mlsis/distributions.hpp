#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mlsis/rng.hpp"

namespace mlsis {

using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// ---------------------------------------------------------------------------
// Standard normal utilities
// ---------------------------------------------------------------------------

/// log Phi(x), accurate in both tails. For x <= -30 the Mills-ratio series is
/// used so the result never underflows for finite x.
double std_normal_log_cdf(double x);

/// log of the n-variate standard normal density.
double std_normal_log_density(const VectorRef& u);

/// n i.i.d. N(0, 1) entries.
Vector sample_std_normal(std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// von Mises-Fisher / Nakagami
// ---------------------------------------------------------------------------

/// log I_v(x) for the modified Bessel function of the first kind, v >= 0,
/// x >= 0. Power series for x <= 50, uniform (Debye) expansion above.
double log_bessel_i(double order, double x);

/// log of the surface area of the unit sphere S^{n-1}.
double log_sphere_area(std::size_t n);

/// log C_n(kappa), the vMF normalizing constant on S^{n-1}.
double vmf_log_normalizer(std::size_t n, double kappa);

/// Log density of the vMF law on S^{n-1} with respect to surface measure.
double vmf_log_density(const VectorRef& direction, const VectorRef& mean_direction,
                       double kappa);

/// Exact vMF draw (Wood's rejection scheme on the tangent-normal split).
Vector sample_vmf(const VectorRef& mean_direction, double kappa, Rng& rng);

/// Log Nakagami density; -inf for r <= 0.
double nakagami_log_density(double r, double shape, double spread);

/// R with R^2 ~ Gamma(shape, spread / shape).
double sample_nakagami(double shape, double spread, Rng& rng);

struct VmfnParams {
  Vector nu;          ///< unit mean direction
  double kappa = 0;   ///< concentration
  double shape = 1;   ///< Nakagami shape s >= 0.5
  double spread = 1;  ///< Nakagami spread gamma > 0

  std::size_t dim() const { return static_cast<std::size_t>(nu.size()); }

  /// Throws InvalidArgument if the invariants do not hold.
  void validate() const;
};

/// Upper bound on the mean resultant length used by the fit.
inline constexpr double kMaxResultantLength = 0.95;
inline constexpr double kMinNakagamiShape = 0.5;
inline constexpr double kMaxNakagamiShape = 1e6;

/// Log density of u = r * a on R^n (Lebesgue measure): the product
/// f_N(r) f_vMF(a) divided by the polar Jacobian r^{n-1}. Returns -inf at 0.
double vmfn_log_density(const VectorRef& u, const VmfnParams& params);

/// u = r * a with r ~ Nakagami and a ~ vMF drawn independently.
Vector sample_vmfn(const VmfnParams& params, Rng& rng);

/// Weighted moment fit of a single vMFN component. Samples are the columns
/// of `samples`; zero-weight columns are ignored.
VmfnParams fit_vmfn(const Eigen::MatrixXd& samples, std::span<const double> weights);

}  // namespace mlsis
