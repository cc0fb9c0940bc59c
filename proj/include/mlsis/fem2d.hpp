#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mlsis/model.hpp"
#include "mlsis/random_field.hpp"

namespace mlsis {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform triangulation of the unit square: m x m cells, each split along
/// its lower-left to upper-right diagonal into a lower-right triangle (local
/// index 0) and an upper-left triangle (local index 1).
///
/// Edge numbering: horizontal edges first (j * m + i), then vertical edges
/// (j * (m + 1) + i), then diagonals (j * m + i). Global edge normals are +y,
/// +x and (1, -1)/sqrt(2) respectively.
class UnitSquareMesh {
 public:
  struct LocalEdge {
    std::size_t edge = 0;
    double sign = 1.0;    ///< +1 if the global normal points out of the triangle
    double length = 0.0;
    Point2 opposite;      ///< vertex opposite the edge
  };

  explicit UnitSquareMesh(std::size_t cells_per_side);

  std::size_t cells_per_side() const { return m_; }
  double h() const { return h_; }
  std::size_t triangle_count() const { return 2 * m_ * m_; }
  std::size_t edge_count() const { return 3 * m_ * m_ + 2 * m_; }
  double triangle_area() const { return 0.5 * h_ * h_; }

  std::array<LocalEdge, 3> local_edges(std::size_t triangle) const;
  Point2 centroid(std::size_t triangle) const;
  std::array<Point2, 3> vertices(std::size_t triangle) const;

  /// Containing triangle via cell index then diagonal test. Points slightly
  /// outside the square map to the nearest boundary cell.
  std::size_t locate(Point2 p) const;

  std::size_t horizontal_edge(std::size_t i, std::size_t j) const { return j * m_ + i; }
  std::size_t vertical_edge(std::size_t i, std::size_t j) const {
    return m_ * (m_ + 1) + j * (m_ + 1) + i;
  }
  std::size_t diagonal_edge(std::size_t i, std::size_t j) const {
    return 2 * m_ * (m_ + 1) + j * m_ + i;
  }
  /// Edges on y = 0 or y = 1 (no-flow).
  bool is_no_flow_edge(std::size_t edge) const;

 private:
  std::size_t m_;
  double h_;
};

/// Lowest-order Raviart-Thomas velocity with piecewise-constant pressure.
/// Within each triangle the velocity is q(x) = b x - c, stored per triangle.
class DiscreteVelocity {
 public:
  DiscreteVelocity(std::shared_ptr<const UnitSquareMesh> mesh, std::vector<double> edge_values,
                   std::vector<double> pressure = {});

  const UnitSquareMesh& mesh() const { return *mesh_; }
  /// Normal velocity component along each edge's global normal.
  std::span<const double> edge_values() const { return edge_values_; }
  std::span<const double> pressure() const { return pressure_; }

  Point2 velocity(std::size_t triangle, Point2 p) const;
  Point2 velocity(Point2 p) const { return velocity(mesh_->locate(p), p); }
  /// Divergence of q on the triangle.
  double divergence(std::size_t triangle) const { return 2.0 * coeffs_[triangle][2]; }
  /// Total flux q . n ds across an edge in its global normal direction.
  double edge_flux(std::size_t edge) const;

 private:
  std::shared_ptr<const UnitSquareMesh> mesh_;
  std::vector<double> edge_values_;
  std::vector<double> pressure_;
  std::vector<std::array<double, 3>> coeffs_;  // (c_x, c_y, b)
};

/// Mixed RT0 solve of q = -a grad v, div q = 0 with v = 1 on x = 0, v = 0 on
/// x = 1 and q . n = 0 on y = 0, 1. One coefficient value per triangle.
DiscreteVelocity solve_darcy_rt0(std::shared_ptr<const UnitSquareMesh> mesh,
                                 std::span<const double> triangle_coefficients);

/// Same with a coefficient function sampled at triangle centroids.
DiscreteVelocity solve_darcy_rt0(std::shared_ptr<const UnitSquareMesh> mesh,
                                 const std::function<double(Point2)>& coefficient);

struct TraceOptions {
  std::size_t max_steps = 10'000'000;
};

/// Forward-Euler particle tracking with step dt = h / (2 |q|). Returns the
/// time at which the path first leaves the closed square (the last step is
/// clipped at the crossing) or reaches its boundary while moving outward.
/// The first step is never tested so a start on the boundary is allowed.
double trace_particle(const DiscreteVelocity& velocity, Point2 start,
                      const TraceOptions& options = {});

struct FlowCellConfig {
  double corr_length = 0.5;
  double mean_log = 0.0;
  double variance_log = 1.0;
  double tau0 = 0.03;
  Point2 start{0.0, 0.5};
  /// n_l for l = 1..L; the size sets L. Mesh size on level l is 2^{-l-1}.
  std::vector<std::size_t> level_dims{10, 20, 40, 80, 150, 150};
  TraceOptions trace{};
};

/// G_l(xi) = tau_{h_l}(xi) - tau0 for the particle travel time through a
/// log-normal permeability field.
class FlowCellModel final : public LimitStateModel {
 public:
  explicit FlowCellModel(FlowCellConfig config = {});
  ~FlowCellModel() override;

  int max_level() const override { return static_cast<int>(config_.level_dims.size()); }
  std::size_t dim(int level) const override;
  int cost_dim() const override { return 2; }
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const override;
  using LimitStateModel::evaluate;

  static double mesh_size(int level) { return std::ldexp(1.0, -level - 1); }
  const FlowCellConfig& config() const { return config_; }
  const KlBasis& basis() const { return basis_; }

  std::shared_ptr<const UnitSquareMesh> mesh(int level) const;
  std::vector<double> triangle_coefficients(const Eigen::Ref<const Eigen::VectorXd>& u,
                                            int level) const;
  DiscreteVelocity velocity(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const;
  double travel_time(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const;

 private:
  struct LevelCache;
  const LevelCache& level_cache(int level) const;

  FlowCellConfig config_;
  KlBasis basis_;
  std::vector<std::unique_ptr<LevelCache>> levels_;
};

}  // namespace mlsis
