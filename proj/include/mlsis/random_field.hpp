#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mlsis {

/// Gaussian parameters (mean, variance) of log a for a log-normal field a
/// with the given mean and standard deviation.
struct LognormalParams {
  double mean = 0.0;      ///< mu_Z
  double variance = 0.0;  ///< zeta^2
};

LognormalParams lognormal_params(double mean_a, double std_a);

/// One eigenpair of the 1D exponential kernel exp(-|x-y|/lambda) on [0,1].
/// The eigenfunction is norm * cos(omega (x - 1/2)) for even pairs and
/// norm * sin(omega (x - 1/2)) for odd pairs.
struct KlMode1d {
  double eigenvalue = 0.0;
  double omega = 0.0;
  double norm = 0.0;
  bool odd = false;

  double operator()(double x) const;
};

/// The M largest eigenpairs on [0,1], sorted by eigenvalue (descending).
std::vector<KlMode1d> kl_eigenpairs_1d(double corr_length, std::size_t count);

/// Eigenpair of the separable 2D kernel exp(-||x-y||_1/lambda) on [0,1]^2:
/// a product of 1D pairs.
struct KlMode2d {
  double eigenvalue = 0.0;
  std::size_t first = 0;   ///< index into the 1D pair list (x1 factor)
  std::size_t second = 0;  ///< index into the 1D pair list (x2 factor)
};

/// Truncated Karhunen-Loeve basis of a Gaussian field
/// Z(x) = mu + zeta * sum_m sqrt(nu_m) theta_m(x) xi_m on [0,1]^d, d = 1, 2.
class KlBasis {
 public:
  static KlBasis one_d(double corr_length, double mean, double variance, std::size_t count);
  static KlBasis two_d(double corr_length, double mean, double variance, std::size_t count);

  int domain_dim() const { return domain_dim_; }
  double corr_length() const { return corr_length_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }
  std::size_t size() const { return eigenvalues_.size(); }
  std::span<const double> eigenvalues() const { return eigenvalues_; }

  /// theta_m(x); x has domain_dim() coordinates.
  double eigenfunction(std::size_t m, std::span<const double> x) const;

  /// zeta * sqrt(nu_m) * theta_m(x): the coefficient of xi_m in Z(x).
  double scaled_mode(std::size_t m, std::span<const double> x) const;

  /// Z(x) using the first xi.size() modes (a prefix of the basis).
  double evaluate_log_field(std::span<const double> xi, std::span<const double> x) const;

 private:
  KlBasis() = default;

  int domain_dim_ = 1;
  double corr_length_ = 1.0;
  double mean_ = 0.0;
  double variance_ = 1.0;
  std::vector<double> eigenvalues_;
  std::vector<KlMode1d> modes_1d_;
  std::vector<KlMode2d> modes_2d_;
};

}  // namespace mlsis
