#include "mlsis/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mlsis/errors.hpp"

namespace mlsis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// log I_v(x) from the ascending series; fine for x up to a few hundred but
// only used for x <= 50.
double log_bessel_i_series(double v, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 10000; ++k) {
    term *= q / ((k + 1.0) * (v + k + 1.0));
    sum += term;
    if (term < 1e-17 * sum && k > x) break;
  }
  return v * std::log(0.5 * x) - std::lgamma(v + 1.0) + std::log(sum);
}

// Large-argument expansion, used for small orders.
double log_bessel_i_hankel(double v, double x) {
  const double mu = 4.0 * v * v;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

// Uniform asymptotic expansion in the order (Abramowitz & Stegun 9.7.7).
double log_bessel_i_debye(double v, double x) {
  const double z = x / v;
  const double root = std::sqrt(1.0 + z * z);
  const double eta = root + std::log(z / (1.0 + root));
  const double p = 1.0 / root;
  const double p2 = p * p;
  const double u1 = p * (3.0 - 5.0 * p2) / 24.0;
  const double u2 = p2 * (81.0 - 462.0 * p2 + 385.0 * p2 * p2) / 1152.0;
  const double u3 =
      p * p2 * (30375.0 + p2 * (-369603.0 + p2 * (765765.0 - 425425.0 * p2))) / 414720.0;
  const double u4 =
      p2 * p2 *
      (4465125.0 +
       p2 * (-94121676.0 + p2 * (349922430.0 + p2 * (-446185740.0 + 185910725.0 * p2)))) /
      39813120.0;
  const double series = 1.0 + u1 / v + u2 / (v * v) + u3 / (v * v * v) + u4 / (v * v * v * v);
  return v * eta - 0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * std::log(root) +
         std::log(series);
}

void require_unit(const VectorRef& v, const char* what) {
  if (v.size() < 2) {
    throw InvalidArgument(std::string(what) + " must have dimension >= 2");
  }
  if (std::abs(v.norm() - 1.0) > 1e-9) {
    throw InvalidArgument(std::string(what) + " must be a unit vector");
  }
}

}  // namespace

double std_normal_log_cdf(double x) {
  if (!std::isfinite(x)) {
    throw InvalidArgument("std_normal_log_cdf: non-finite argument");
  }
  if (x > 5.0) {
    return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  }
  if (x > -30.0) {
    return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  }
  // Phi(x) = phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
  const double inv2 = 1.0 / (x * x);
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) * inv2;
    series += term;
  }
  return -0.5 * x * x - std::log(-x) - 0.5 * kLogTwoPi + std::log(series);
}

double std_normal_log_density(const VectorRef& u) {
  return -0.5 * u.squaredNorm() - 0.5 * kLogTwoPi * static_cast<double>(u.size());
}

Vector sample_std_normal(std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("sample_std_normal: dimension must be >= 1");
  Vector u(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.normal();
  return u;
}

double log_bessel_i(double order, double x) {
  if (order < 0.0 || x < 0.0 || !std::isfinite(x)) {
    throw InvalidArgument("log_bessel_i: requires order >= 0 and finite x >= 0");
  }
  if (x == 0.0) return order == 0.0 ? 0.0 : -kInf;
  if (x <= 50.0) return log_bessel_i_series(order, x);
  if (order < 1.0) return log_bessel_i_hankel(order, x);
  return log_bessel_i_debye(order, x);
}

double log_sphere_area(std::size_t n) {
  const double half = 0.5 * static_cast<double>(n);
  return std::log(2.0) + half * std::log(std::numbers::pi) - std::lgamma(half);
}

double vmf_log_normalizer(std::size_t n, double kappa) {
  if (kappa < 0.0) throw InvalidArgument("vMF concentration must be >= 0");
  if (kappa == 0.0) return -log_sphere_area(n);
  const double order = 0.5 * static_cast<double>(n) - 1.0;
  return order * std::log(kappa) - 0.5 * static_cast<double>(n) * kLogTwoPi -
         log_bessel_i(order, kappa);
}

double vmf_log_density(const VectorRef& direction, const VectorRef& mean_direction,
                       double kappa) {
  if (kappa < 0.0) throw InvalidArgument("vmf_log_density: negative kappa");
  require_unit(direction, "direction");
  require_unit(mean_direction, "mean direction");
  if (direction.size() != mean_direction.size()) {
    throw InvalidArgument("vmf_log_density: dimension mismatch");
  }
  return vmf_log_normalizer(static_cast<std::size_t>(direction.size()), kappa) +
         kappa * mean_direction.dot(direction);
}

Vector sample_vmf(const VectorRef& mean_direction, double kappa, Rng& rng) {
  if (kappa < 0.0) throw InvalidArgument("sample_vmf: negative kappa");
  require_unit(mean_direction, "mean direction");
  const auto n = mean_direction.size();
  const double m1 = static_cast<double>(n - 1);

  // Component along the mean direction.
  const double b = m1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m1 * m1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m1 * std::log(1.0 - x0 * x0);
  double w = 0.0;
  for (;;) {
    const double z = rng.beta(0.5 * m1, 0.5 * m1);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform();
    if (kappa * w + m1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }

  // Uniform direction in the tangent space of the mean direction.
  Vector tangent(n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) tangent[i] = rng.normal();
    tangent -= tangent.dot(mean_direction) * mean_direction;
    norm = tangent.norm();
  } while (norm < 1e-12);
  tangent /= norm;

  Vector a = w * mean_direction + std::sqrt(std::max(0.0, 1.0 - w * w)) * tangent;
  return a / a.norm();
}

double nakagami_log_density(double r, double shape, double spread) {
  if (shape < kMinNakagamiShape || !(spread > 0.0)) {
    throw InvalidArgument("nakagami_log_density: requires shape >= 0.5 and spread > 0");
  }
  if (!(r > 0.0)) return -kInf;
  return std::log(2.0) + shape * std::log(shape) - std::lgamma(shape) - shape * std::log(spread) +
         (2.0 * shape - 1.0) * std::log(r) - shape / spread * r * r;
}

double sample_nakagami(double shape, double spread, Rng& rng) {
  if (shape < kMinNakagamiShape || !(spread > 0.0)) {
    throw InvalidArgument("sample_nakagami: requires shape >= 0.5 and spread > 0");
  }
  return std::sqrt(rng.gamma(shape, spread / shape));
}

void VmfnParams::validate() const {
  if (nu.size() < 2) throw InvalidArgument("VmfnParams: dimension must be >= 2");
  if (std::abs(nu.norm() - 1.0) > 1e-9) throw InvalidArgument("VmfnParams: nu not unit");
  if (kappa < 0.0) throw InvalidArgument("VmfnParams: kappa < 0");
  if (shape < kMinNakagamiShape) throw InvalidArgument("VmfnParams: shape < 0.5");
  if (!(spread > 0.0)) throw InvalidArgument("VmfnParams: spread <= 0");
}

double vmfn_log_density(const VectorRef& u, const VmfnParams& params) {
  const double r = u.norm();
  if (!(r > 0.0)) return -kInf;
  const auto n = static_cast<std::size_t>(u.size());
  if (n != params.dim()) throw InvalidArgument("vmfn_log_density: dimension mismatch");
  return nakagami_log_density(r, params.shape, params.spread) +
         vmf_log_normalizer(n, params.kappa) + params.kappa * params.nu.dot(u) / r -
         static_cast<double>(n - 1) * std::log(r);
}

Vector sample_vmfn(const VmfnParams& params, Rng& rng) {
  params.validate();
  const double r = sample_nakagami(params.shape, params.spread, rng);
  return r * sample_vmf(params.nu, params.kappa, rng);
}

VmfnParams fit_vmfn(const Eigen::MatrixXd& samples, std::span<const double> weights) {
  if (static_cast<std::size_t>(samples.cols()) != weights.size()) {
    throw InvalidArgument("fit_vmfn: one weight per sample required");
  }
  if (samples.cols() < 2) throw InvalidArgument("fit_vmfn: at least two samples required");
  const auto n = samples.rows();

  Vector resultant = Vector::Zero(n);
  double total = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  for (Eigen::Index k = 0; k < samples.cols(); ++k) {
    const double w = weights[static_cast<std::size_t>(k)];
    if (w < 0.0 || !std::isfinite(w)) throw InvalidArgument("fit_vmfn: invalid weight");
    if (w == 0.0) continue;
    const double r = samples.col(k).norm();
    if (!(r > 0.0)) throw InvalidArgument("fit_vmfn: zero sample");
    resultant += (w / r) * samples.col(k);
    total += w;
    m2 += w * r * r;
    m4 += w * r * r * r * r;
  }
  if (!(total > 0.0)) throw DegenerateWeights("fit_vmfn: zero total weight");

  VmfnParams p;
  const double length = resultant.norm();
  if (length > 0.0) {
    p.nu = resultant / length;
  } else {
    p.nu = Vector::Unit(n, 0);
  }
  const double chi = std::min(length / total, kMaxResultantLength);
  const double dn = static_cast<double>(n);
  p.kappa = (chi * dn - chi * chi * chi) / (1.0 - chi * chi);

  p.spread = m2 / total;
  const double fourth = m4 / total;
  const double excess = fourth - p.spread * p.spread;
  double shape = excess > 0.0 ? p.spread * p.spread / excess : kMaxNakagamiShape;
  p.shape = std::clamp(shape, kMinNakagamiShape, kMaxNakagamiShape);
  return p;
}

}  // namespace mlsis
