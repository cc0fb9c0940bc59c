#include "mlsis/fem2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mlsis/errors.hpp"

namespace mlsis {

UnitSquareMesh::UnitSquareMesh(std::size_t cells_per_side)
    : m_(cells_per_side), h_(1.0 / static_cast<double>(cells_per_side)) {
  if (cells_per_side == 0) throw InvalidArgument("UnitSquareMesh: need at least one cell");
}

std::array<UnitSquareMesh::LocalEdge, 3> UnitSquareMesh::local_edges(std::size_t t) const {
  const std::size_t cell = t / 2;
  const std::size_t i = cell % m_;
  const std::size_t j = cell / m_;
  const double x0 = static_cast<double>(i) * h_;
  const double y0 = static_cast<double>(j) * h_;
  const double diag = h_ * std::numbers::sqrt2;
  if (t % 2 == 0) {
    return {{{horizontal_edge(i, j), -1.0, h_, {x0 + h_, y0 + h_}},
             {vertical_edge(i + 1, j), 1.0, h_, {x0, y0}},
             {diagonal_edge(i, j), -1.0, diag, {x0 + h_, y0}}}};
  }
  return {{{horizontal_edge(i, j + 1), 1.0, h_, {x0, y0}},
           {vertical_edge(i, j), -1.0, h_, {x0 + h_, y0 + h_}},
           {diagonal_edge(i, j), 1.0, diag, {x0, y0 + h_}}}};
}

std::array<Point2, 3> UnitSquareMesh::vertices(std::size_t t) const {
  const std::size_t cell = t / 2;
  const double x0 = static_cast<double>(cell % m_) * h_;
  const double y0 = static_cast<double>(cell / m_) * h_;
  if (t % 2 == 0) return {{{x0, y0}, {x0 + h_, y0}, {x0 + h_, y0 + h_}}};
  return {{{x0, y0}, {x0 + h_, y0 + h_}, {x0, y0 + h_}}};
}

Point2 UnitSquareMesh::centroid(std::size_t t) const {
  const auto v = vertices(t);
  return {(v[0].x + v[1].x + v[2].x) / 3.0, (v[0].y + v[1].y + v[2].y) / 3.0};
}

std::size_t UnitSquareMesh::locate(Point2 p) const {
  const auto last = static_cast<double>(m_ - 1);
  const double fi = std::clamp(std::floor(p.x / h_), 0.0, last);
  const double fj = std::clamp(std::floor(p.y / h_), 0.0, last);
  const auto i = static_cast<std::size_t>(fi);
  const auto j = static_cast<std::size_t>(fj);
  const double dx = p.x - fi * h_;
  const double dy = p.y - fj * h_;
  return 2 * (j * m_ + i) + (dy <= dx ? 0 : 1);
}

bool UnitSquareMesh::is_no_flow_edge(std::size_t edge) const {
  if (edge >= m_ * (m_ + 1)) return false;
  const std::size_t j = edge / m_;
  return j == 0 || j == m_;
}

DiscreteVelocity::DiscreteVelocity(std::shared_ptr<const UnitSquareMesh> mesh,
                                   std::vector<double> edge_values, std::vector<double> pressure)
    : mesh_(std::move(mesh)),
      edge_values_(std::move(edge_values)),
      pressure_(std::move(pressure)) {
  if (edge_values_.size() != mesh_->edge_count()) {
    throw InvalidArgument("DiscreteVelocity: one value per edge required");
  }
  const double scale = 1.0 / (2.0 * mesh_->triangle_area());
  coeffs_.resize(mesh_->triangle_count());
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    std::array<double, 3> c{0.0, 0.0, 0.0};
    for (const auto& e : mesh_->local_edges(t)) {
      const double w = edge_values_[e.edge] * e.sign * e.length * scale;
      c[0] += w * e.opposite.x;
      c[1] += w * e.opposite.y;
      c[2] += w;
    }
    coeffs_[t] = c;
  }
}

Point2 DiscreteVelocity::velocity(std::size_t triangle, Point2 p) const {
  const auto& c = coeffs_[triangle];
  return {c[2] * p.x - c[0], c[2] * p.y - c[1]};
}

double DiscreteVelocity::edge_flux(std::size_t edge) const {
  const bool diagonal = edge >= 2 * mesh_->cells_per_side() * (mesh_->cells_per_side() + 1);
  return edge_values_[edge] * mesh_->h() * (diagonal ? std::numbers::sqrt2 : 1.0);
}

namespace {

// Local RT0 mass matrix for unit coefficient in the outward-normal basis,
// exact via the edge-midpoint rule.
Eigen::Matrix3d local_mass(const UnitSquareMesh& mesh, std::size_t t) {
  const auto edges = mesh.local_edges(t);
  const auto v = mesh.vertices(t);
  const std::array<Point2, 3> mids{{{0.5 * (v[0].x + v[1].x), 0.5 * (v[0].y + v[1].y)},
                                    {0.5 * (v[1].x + v[2].x), 0.5 * (v[1].y + v[2].y)},
                                    {0.5 * (v[2].x + v[0].x), 0.5 * (v[2].y + v[0].y)}}};
  const double area = mesh.triangle_area();
  Eigen::Matrix3d k;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      double integral = 0.0;
      for (const auto& q : mids) {
        integral += (q.x - edges[a].opposite.x) * (q.x - edges[b].opposite.x) +
                    (q.y - edges[a].opposite.y) * (q.y - edges[b].opposite.y);
      }
      integral *= area / 3.0;
      k(a, b) = edges[a].length * edges[b].length / (4.0 * area * area) * integral;
    }
  }
  return k;
}

// Static condensation of one triangle for unit coefficient. With edge traces
// lambda the outward normal fluxes are -a * recovery * lambda, the pressure
// is pressure . lambda and a * stiffness is the contribution to the flux
// balance on the edges.
struct Hybrid {
  Eigen::Matrix3d stiffness;
  Eigen::Matrix3d recovery;
  Eigen::RowVector3d pressure;
};

Hybrid hybrid_matrices(const UnitSquareMesh& mesh, std::size_t t) {
  const auto edges = mesh.local_edges(t);
  const Eigen::Vector3d len(edges[0].length, edges[1].length, edges[2].length);
  const Eigen::Matrix3d inv = local_mass(mesh, t).inverse();
  const Eigen::Matrix3d inv_len = inv * len.asDiagonal();
  Hybrid h;
  h.pressure = (len.transpose() * inv_len) / len.dot(inv * len);
  h.recovery = inv_len - (inv * len) * h.pressure;
  h.stiffness = len.asDiagonal() * h.recovery;
  return h;
}

}  // namespace

DiscreteVelocity solve_darcy_rt0(std::shared_ptr<const UnitSquareMesh> mesh,
                                 std::span<const double> triangle_coefficients) {
  const UnitSquareMesh& g = *mesh;
  const std::size_t n_tri = g.triangle_count();
  if (triangle_coefficients.size() != n_tri) {
    throw InvalidArgument("solve_darcy_rt0: one coefficient per triangle required");
  }
  const std::array<Hybrid, 2> ref{hybrid_matrices(g, 0), hybrid_matrices(g, 1)};

  // Unknowns are the edge traces of the pressure; west (1) and east (0) are given.
  const std::size_t m = g.cells_per_side();
  std::vector<double> trace(g.edge_count(), 0.0);
  std::vector<long> free_index(g.edge_count(), -1);
  long n_free = 0;
  for (std::size_t j = 0; j < m; ++j) trace[g.vertical_edge(0, j)] = 1.0;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const bool dirichlet = e >= m * (m + 1) && e < 2 * m * (m + 1) &&
                           ((e - m * (m + 1)) % (m + 1) == 0 || (e - m * (m + 1)) % (m + 1) == m);
    if (!dirichlet) free_index[e] = n_free++;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n_tri * 9);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_free);
  for (std::size_t t = 0; t < n_tri; ++t) {
    const double a = triangle_coefficients[t];
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw ModelEvaluationError("solve_darcy_rt0: non-positive coefficient on triangle " +
                                 std::to_string(t));
    }
    const auto edges = g.local_edges(t);
    const auto& k = ref[t % 2].stiffness;
    for (int i = 0; i < 3; ++i) {
      const long fi = free_index[edges[i].edge];
      if (fi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const long fj = free_index[edges[j].edge];
        if (fj >= 0) {
          triplets.emplace_back(fi, fj, a * k(i, j));
        } else {
          rhs[fi] -= a * k(i, j) * trace[edges[j].edge];
        }
      }
    }
  }
  Eigen::SparseMatrix<double> system(n_free, n_free);
  system.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
  if (solver.info() != Eigen::Success) throw InternalError("solve_darcy_rt0: singular system");
  const Eigen::VectorXd x = solver.solve(rhs);
  if (solver.info() != Eigen::Success) throw InternalError("solve_darcy_rt0: solve failed");
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (free_index[e] >= 0) trace[e] = x[free_index[e]];
  }

  // Recover the local fluxes; interior edges see both neighbours, keep the mean.
  std::vector<double> edge_values(g.edge_count(), 0.0);
  std::vector<int> sides(g.edge_count(), 0);
  std::vector<double> pressure(n_tri);
  for (std::size_t t = 0; t < n_tri; ++t) {
    const auto edges = g.local_edges(t);
    const Hybrid& r = ref[t % 2];
    const Eigen::Vector3d lambda(trace[edges[0].edge], trace[edges[1].edge],
                                 trace[edges[2].edge]);
    const Eigen::Vector3d outward = -triangle_coefficients[t] * (r.recovery * lambda);
    pressure[t] = r.pressure.dot(lambda);
    for (int i = 0; i < 3; ++i) {
      edge_values[edges[i].edge] += edges[i].sign * outward[i];
      ++sides[edges[i].edge];
    }
  }
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    edge_values[e] = g.is_no_flow_edge(e) ? 0.0 : edge_values[e] / sides[e];
  }
  return DiscreteVelocity(std::move(mesh), std::move(edge_values), std::move(pressure));
}

DiscreteVelocity solve_darcy_rt0(std::shared_ptr<const UnitSquareMesh> mesh,
                                 const std::function<double(Point2)>& coefficient) {
  std::vector<double> a(mesh->triangle_count());
  for (std::size_t t = 0; t < a.size(); ++t) a[t] = coefficient(mesh->centroid(t));
  return solve_darcy_rt0(std::move(mesh), a);
}

namespace {

bool outside_closed_square(Point2 p) { return p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0; }

// Largest s in [0, 1] with from + s (to - from) inside the closed square.
double exit_fraction(Point2 from, Point2 to) {
  double s = 1.0;
  auto clip = [&s](double a, double b) {
    const double d = b - a;
    if (b > 1.0) s = std::min(s, (1.0 - a) / d);
    if (b < 0.0) s = std::min(s, (0.0 - a) / d);
  };
  clip(from.x, to.x);
  clip(from.y, to.y);
  return std::clamp(s, 0.0, 1.0);
}

bool leaving_through_boundary(Point2 p, Point2 q) {
  return (p.x >= 1.0 && q.x > 0.0) || (p.x <= 0.0 && q.x < 0.0) || (p.y >= 1.0 && q.y > 0.0) ||
         (p.y <= 0.0 && q.y < 0.0);
}

}  // namespace

double trace_particle(const DiscreteVelocity& velocity, Point2 start,
                      const TraceOptions& options) {
  const double h = velocity.mesh().h();
  if (outside_closed_square(start)) {
    throw InvalidArgument("trace_particle: start point outside the domain");
  }
  Point2 p = start;
  double t = 0.0;
  for (std::size_t step = 0; step < options.max_steps; ++step) {
    const Point2 q = velocity.velocity(p);
    const double speed = std::hypot(q.x, q.y);
    if (!(speed > 0.0) || !std::isfinite(speed)) {
      throw ModelEvaluationError("trace_particle: stagnation point at (" + std::to_string(p.x) +
                                 ", " + std::to_string(p.y) + ")");
    }
    const double dt = h / (2.0 * speed);
    const Point2 next{p.x + dt * q.x, p.y + dt * q.y};
    if (step > 0) {
      if (outside_closed_square(next)) return t + exit_fraction(p, next) * dt;
      if (leaving_through_boundary(next, q)) return t + dt;
    }
    if (next.x < -h || next.x > 1.0 + h || next.y < -h || next.y > 1.0 + h) {
      throw InternalError("trace_particle: particle left the tracking band");
    }
    p = next;
    t += dt;
  }
  throw NonConvergence("trace_particle: step limit reached");
}

struct FlowCellModel::LevelCache {
  std::once_flag once;
  std::shared_ptr<const UnitSquareMesh> mesh;
  Eigen::MatrixXd modes;  // triangles x n_l
};

FlowCellModel::FlowCellModel(FlowCellConfig config)
    : config_(std::move(config)),
      basis_([this] {
        if (config_.level_dims.empty()) throw InvalidArgument("FlowCellModel: no levels");
        for (std::size_t i = 0; i < config_.level_dims.size(); ++i) {
          if (config_.level_dims[i] == 0 ||
              (i > 0 && config_.level_dims[i] < config_.level_dims[i - 1])) {
            throw InvalidArgument("FlowCellModel: level dims must be positive, non-decreasing");
          }
        }
        if (!(config_.tau0 > 0.0)) throw InvalidArgument("FlowCellModel: tau0 must be > 0");
        return KlBasis::two_d(config_.corr_length, config_.mean_log, config_.variance_log,
                              config_.level_dims.back());
      }()) {
  for (int l = 0; l < max_level(); ++l) levels_.push_back(std::make_unique<LevelCache>());
}

FlowCellModel::~FlowCellModel() = default;

std::size_t FlowCellModel::dim(int level) const {
  if (level < 1 || level > max_level()) throw InvalidArgument("FlowCellModel: bad level");
  return config_.level_dims[static_cast<std::size_t>(level - 1)];
}

const FlowCellModel::LevelCache& FlowCellModel::level_cache(int level) const {
  if (level < 1 || level > max_level()) throw InvalidArgument("FlowCellModel: bad level");
  LevelCache& cache = *levels_[static_cast<std::size_t>(level - 1)];
  std::call_once(cache.once, [&] {
    const auto m = static_cast<std::size_t>(std::llround(1.0 / mesh_size(level)));
    cache.mesh = std::make_shared<const UnitSquareMesh>(m);
    const auto n_tri = static_cast<Eigen::Index>(cache.mesh->triangle_count());
    const auto n = static_cast<Eigen::Index>(dim(level));
    cache.modes.resize(n_tri, n);
    for (Eigen::Index t = 0; t < n_tri; ++t) {
      const Point2 c = cache.mesh->centroid(static_cast<std::size_t>(t));
      const double x[2] = {c.x, c.y};
      for (Eigen::Index j = 0; j < n; ++j) {
        cache.modes(t, j) = basis_.scaled_mode(static_cast<std::size_t>(j), x);
      }
    }
  });
  return cache;
}

std::shared_ptr<const UnitSquareMesh> FlowCellModel::mesh(int level) const {
  return level_cache(level).mesh;
}

std::vector<double> FlowCellModel::triangle_coefficients(
    const Eigen::Ref<const Eigen::VectorXd>& u, int level) const {
  check_input(u, level);
  const auto& cache = level_cache(level);
  const Eigen::VectorXd z = (cache.modes * u).array() + basis_.mean();
  std::vector<double> a(static_cast<std::size_t>(z.size()));
  for (Eigen::Index t = 0; t < z.size(); ++t) a[static_cast<std::size_t>(t)] = std::exp(z[t]);
  return a;
}

DiscreteVelocity FlowCellModel::velocity(const Eigen::Ref<const Eigen::VectorXd>& u,
                                         int level) const {
  return solve_darcy_rt0(mesh(level), triangle_coefficients(u, level));
}

double FlowCellModel::travel_time(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const {
  return trace_particle(velocity(u, level), config_.start, config_.trace);
}

double FlowCellModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& u, int level) const {
  return travel_time(u, level) - config_.tau0;
}

}  // namespace mlsis
