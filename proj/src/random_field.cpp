#include "mlsis/random_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mlsis/errors.hpp"

namespace mlsis {

LognormalParams lognormal_params(double mean_a, double std_a) {
  if (!(mean_a > 0.0) || !(std_a > 0.0)) {
    throw InvalidArgument("lognormal_params: mean and standard deviation must be positive");
  }
  LognormalParams p;
  p.variance = std::log1p((std_a * std_a) / (mean_a * mean_a));
  p.mean = std::log(mean_a) - 0.5 * p.variance;
  return p;
}

double KlMode1d::operator()(double x) const {
  const double t = omega * (x - 0.5);
  return norm * (odd ? std::sin(t) : std::cos(t));
}

namespace {

// Root of f on [lo, hi] where f(lo) and f(hi) have opposite signs.
template <class F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw InternalError("kl_eigenpairs_1d: characteristic root not bracketed on [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, lo); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<KlMode1d> kl_eigenpairs_1d(double corr_length, std::size_t count) {
  if (!(corr_length > 0.0)) throw InvalidArgument("kl_eigenpairs_1d: correlation length <= 0");
  if (count == 0) throw InvalidArgument("kl_eigenpairs_1d: need at least one mode");

  // Kernel shifted to [-a, a]; z = omega * a.
  constexpr double a = 0.5;
  const double c = 1.0 / corr_length;
  const double ca = c * a;
  constexpr double pi = std::numbers::pi;

  std::vector<KlMode1d> modes;
  modes.reserve(count);
  // Roots alternate even, odd, even, ... in increasing omega, so the
  // eigenvalues come out sorted.
  for (std::size_t k = 0; modes.size() < count; ++k) {
    const double base = static_cast<double>(k) * pi;
    {
      const double z = bisect([ca](double t) { return t * std::sin(t) - ca * std::cos(t); },
                              base, base + 0.5 * pi);
      KlMode1d m;
      m.omega = z / a;
      m.eigenvalue = 2.0 * c / (m.omega * m.omega + c * c);
      m.norm = 1.0 / std::sqrt(a + std::sin(2.0 * z) / (2.0 * m.omega));
      m.odd = false;
      modes.push_back(m);
    }
    if (modes.size() == count) break;
    {
      const double z = bisect([ca](double t) { return t * std::cos(t) + ca * std::sin(t); },
                              base + 0.5 * pi, base + pi);
      KlMode1d m;
      m.omega = z / a;
      m.eigenvalue = 2.0 * c / (m.omega * m.omega + c * c);
      m.norm = 1.0 / std::sqrt(a - std::sin(2.0 * z) / (2.0 * m.omega));
      m.odd = true;
      modes.push_back(m);
    }
  }
  return modes;
}

KlBasis KlBasis::one_d(double corr_length, double mean, double variance, std::size_t count) {
  if (!(variance > 0.0)) throw InvalidArgument("KlBasis: variance must be positive");
  KlBasis b;
  b.domain_dim_ = 1;
  b.corr_length_ = corr_length;
  b.mean_ = mean;
  b.variance_ = variance;
  b.modes_1d_ = kl_eigenpairs_1d(corr_length, count);
  for (const auto& m : b.modes_1d_) b.eigenvalues_.push_back(m.eigenvalue);
  return b;
}

KlBasis KlBasis::two_d(double corr_length, double mean, double variance, std::size_t count) {
  if (!(variance > 0.0)) throw InvalidArgument("KlBasis: variance must be positive");
  KlBasis b;
  b.domain_dim_ = 2;
  b.corr_length_ = corr_length;
  b.mean_ = mean;
  b.variance_ = variance;
  // The top `count` products only involve the first `count` 1D pairs.
  b.modes_1d_ = kl_eigenpairs_1d(corr_length, count);
  std::vector<KlMode2d> all;
  all.reserve(count * count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < count; ++j) {
      all.push_back({b.modes_1d_[i].eigenvalue * b.modes_1d_[j].eigenvalue, i, j});
    }
  }
  auto before = [](const KlMode2d& l, const KlMode2d& r) {
    if (l.eigenvalue != r.eigenvalue) return l.eigenvalue > r.eigenvalue;
    if (l.first != r.first) return l.first < r.first;
    return l.second < r.second;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count), all.end(),
                    before);
  all.resize(count);
  b.modes_2d_ = std::move(all);
  for (const auto& m : b.modes_2d_) b.eigenvalues_.push_back(m.eigenvalue);
  return b;
}

double KlBasis::eigenfunction(std::size_t m, std::span<const double> x) const {
  if (m >= size()) throw InvalidArgument("KlBasis: mode index out of range");
  if (x.size() != static_cast<std::size_t>(domain_dim_)) {
    throw InvalidArgument("KlBasis: point dimension mismatch");
  }
  for (double xi : x) {
    if (!(xi >= -1e-12 && xi <= 1.0 + 1e-12)) {
      throw InvalidArgument("KlBasis: point outside the unit domain");
    }
  }
  if (domain_dim_ == 1) return modes_1d_[m](x[0]);
  const auto& p = modes_2d_[m];
  return modes_1d_[p.first](x[0]) * modes_1d_[p.second](x[1]);
}

double KlBasis::scaled_mode(std::size_t m, std::span<const double> x) const {
  return std::sqrt(variance_ * eigenvalues_[m]) * eigenfunction(m, x);
}

double KlBasis::evaluate_log_field(std::span<const double> xi, std::span<const double> x) const {
  if (xi.size() > size()) {
    throw InvalidArgument("evaluate_log_field: more coefficients than basis modes");
  }
  double z = mean_;
  for (std::size_t m = 0; m < xi.size(); ++m) z += scaled_mode(m, x) * xi[m];
  return z;
}

}  // namespace mlsis
