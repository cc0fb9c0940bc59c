#include "mlsis/fem1d.hpp"

#include <cmath>
#include <string>

#include "mlsis/errors.hpp"

namespace mlsis {

std::vector<double> solve_diffusion_1d(std::span<const double> element_coefficients) {
  const std::size_t m = element_coefficients.size();
  if (m == 0) throw InvalidArgument("solve_diffusion_1d: empty mesh");
  const double h = 1.0 / static_cast<double>(m);

  // Stiffness per element; unknowns are v_1..v_m.
  std::vector<double> k(m);
  for (std::size_t e = 0; e < m; ++e) {
    const double a = element_coefficients[e];
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw ModelEvaluationError("solve_diffusion_1d: non-positive coefficient on element " +
                                 std::to_string(e));
    }
    k[e] = a / h;
  }

  // Thomas algorithm. Row i (1-based node) has sub -k[i-1], diag k[i-1] + k[i]
  // (just k[m-1] on the Neumann node) and super -k[i].
  std::vector<double> c_prime(m);
  std::vector<double> d_prime(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool last = (i + 1 == m);
    const double diag = last ? k[i] : k[i] + k[i + 1];
    const double sub = i > 0 ? -k[i] : 0.0;
    const double super = last ? 0.0 : -k[i + 1];
    const double rhs = last ? 0.5 * h : h;
    const double denom = diag - (i > 0 ? sub * c_prime[i - 1] : 0.0);
    c_prime[i] = super / denom;
    d_prime[i] = (rhs - (i > 0 ? sub * d_prime[i - 1] : 0.0)) / denom;
  }
  std::vector<double> v(m + 1, 0.0);
  v[m] = d_prime[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) v[i + 1] = d_prime[i] - c_prime[i] * v[i + 2];
  return v;
}

std::vector<double> solve_diffusion_1d(const std::function<double(double)>& coefficient,
                                       double h) {
  const double cells = 1.0 / h;
  const auto m = static_cast<std::size_t>(std::llround(cells));
  if (!(h > 0.0) || m == 0 || std::abs(cells - static_cast<double>(m)) > 1e-9) {
    throw InvalidArgument("solve_diffusion_1d: 1/h must be a positive integer");
  }
  std::vector<double> a(m);
  for (std::size_t e = 0; e < m; ++e) a[e] = coefficient((static_cast<double>(e) + 0.5) * h);
  return solve_diffusion_1d(a);
}

Diffusion1dModel::Diffusion1dModel(Diffusion1dConfig config) : config_(std::move(config)),
    basis_([this] {
      if (config_.level_dims.empty()) throw InvalidArgument("Diffusion1dModel: no levels");
      std::size_t n_max = 0;
      for (std::size_t i = 0; i < config_.level_dims.size(); ++i) {
        if (config_.level_dims[i] == 0 ||
            (i > 0 && config_.level_dims[i] < config_.level_dims[i - 1])) {
          throw InvalidArgument("Diffusion1dModel: level dims must be positive, non-decreasing");
        }
        n_max = std::max(n_max, config_.level_dims[i]);
      }
      const auto ln = lognormal_params(config_.mean_a, config_.std_a);
      return KlBasis::one_d(config_.corr_length, ln.mean, ln.variance, n_max);
    }()) {
  for (int level = 1; level <= max_level(); ++level) {
    const double h = mesh_size(level);
    const auto m = static_cast<Eigen::Index>(std::llround(1.0 / h));
    const auto n = static_cast<Eigen::Index>(dim(level));
    Eigen::MatrixXd modes(m, n);
    for (Eigen::Index e = 0; e < m; ++e) {
      const double x = (static_cast<double>(e) + 0.5) * h;
      for (Eigen::Index j = 0; j < n; ++j) {
        modes(e, j) = basis_.scaled_mode(static_cast<std::size_t>(j), std::span(&x, 1));
      }
    }
    modes_.push_back(std::move(modes));
  }
}

std::size_t Diffusion1dModel::dim(int level) const {
  if (level < 1 || level > max_level()) throw InvalidArgument("Diffusion1dModel: bad level");
  return config_.level_dims[static_cast<std::size_t>(level - 1)];
}

double Diffusion1dModel::mesh_size(int level) { return std::ldexp(1.0, -level - 1); }

std::vector<double> Diffusion1dModel::element_coefficients(
    const Eigen::Ref<const Eigen::VectorXd>& u, int level) const {
  check_input(u, level);
  const Eigen::VectorXd z =
      (modes_[static_cast<std::size_t>(level - 1)] * u).array() + basis_.mean();
  std::vector<double> a(static_cast<std::size_t>(z.size()));
  for (Eigen::Index e = 0; e < z.size(); ++e) a[static_cast<std::size_t>(e)] = std::exp(z[e]);
  return a;
}

double Diffusion1dModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const {
  const auto v = solve_diffusion_1d(element_coefficients(u, level));
  return config_.threshold - v.back();
}

}  // namespace mlsis
