#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mlsis/model.hpp"
#include "mlsis/random_field.hpp"

namespace mlsis {

/// Piecewise-linear FEM for -(a v')' = 1 on [0,1], v(0) = 0, v'(1) = 0, on a
/// uniform mesh with one coefficient value per element. Returns the m + 1
/// nodal values (v_0 = 0 included).
std::vector<double> solve_diffusion_1d(std::span<const double> element_coefficients);

/// Same, sampling the coefficient at element midpoints; 1/h must be an integer.
std::vector<double> solve_diffusion_1d(const std::function<double(double)>& coefficient,
                                       double h);

struct Diffusion1dConfig {
  double corr_length = 0.01;
  double mean_a = 1.0;
  double std_a = 0.1;
  double threshold = 0.535;
  /// n_l for l = 1..L; the size sets L. Mesh size on level l is 2^{-l-1}.
  std::vector<std::size_t> level_dims{10, 20, 40, 80, 150, 150, 150, 150};
};

/// G_l(xi) = threshold - v_{h_l}(1) with a = exp(Z) from a truncated KL
/// expansion of the exponential-covariance Gaussian field.
class Diffusion1dModel final : public LimitStateModel {
 public:
  explicit Diffusion1dModel(Diffusion1dConfig config = {});

  int max_level() const override { return static_cast<int>(config_.level_dims.size()); }
  std::size_t dim(int level) const override;
  int cost_dim() const override { return 1; }
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const override;
  using LimitStateModel::evaluate;

  static double mesh_size(int level);
  const KlBasis& basis() const { return basis_; }
  const Diffusion1dConfig& config() const { return config_; }

  /// exp(Z) at element midpoints of level `level`.
  std::vector<double> element_coefficients(const Eigen::Ref<const Eigen::VectorXd>& u,
                                           int level) const;

 private:
  Diffusion1dConfig config_;
  KlBasis basis_;
  // modes_[l-1] is (elements x n_l): zeta sqrt(nu_m) theta_m(x_mid).
  std::vector<Eigen::MatrixXd> modes_;
};

}  // namespace mlsis
