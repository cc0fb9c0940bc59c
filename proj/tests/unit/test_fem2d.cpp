#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "mlsis/errors.hpp"
#include "mlsis/fem2d.hpp"
#include "support.hpp"

namespace mlsis {
namespace {

using MeshPtr = std::shared_ptr<const UnitSquareMesh>;

MeshPtr make_mesh(std::size_t m) { return std::make_shared<const UnitSquareMesh>(m); }

double triangle_divergence(const DiscreteVelocity& v, std::size_t t) {
  double out = 0.0;
  for (const auto& e : v.mesh().local_edges(t)) out += e.sign * v.edge_flux(e.edge);
  return out;
}

// Reference solution of the mixed system assembled directly from the RT0
// basis functions phi_E = sign |E| / (2 |T|) (x - P_opp) and solved densely.
std::vector<double> dense_mixed_solution(const UnitSquareMesh& g, const std::vector<double>& a) {
  const std::size_t ne = g.edge_count();
  const std::size_t nt = g.triangle_count();
  std::vector<long> idx(ne, -1);
  long nf = 0;
  for (std::size_t e = 0; e < ne; ++e) {
    if (!g.is_no_flow_edge(e)) idx[e] = nf++;
  }
  const long n = nf + static_cast<long>(nt);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto edges = g.local_edges(t);
    const auto v = g.vertices(t);
    const double area = g.triangle_area();
    auto phi = [&](int i, double x, double y) {
      const double s = edges[i].sign * edges[i].length / (2.0 * area);
      return std::array<double, 2>{s * (x - edges[i].opposite.x), s * (y - edges[i].opposite.y)};
    };
    for (int i = 0; i < 3; ++i) {
      const long fi = idx[edges[i].edge];
      if (fi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const long fj = idx[edges[j].edge];
        if (fj < 0) continue;
        double s = 0.0;
        for (int q = 0; q < 3; ++q) {
          const double x = 0.5 * (v[q].x + v[(q + 1) % 3].x);
          const double y = 0.5 * (v[q].y + v[(q + 1) % 3].y);
          const auto pi = phi(i, x, y);
          const auto pj = phi(j, x, y);
          s += (pi[0] * pj[0] + pi[1] * pj[1]) * area / 3.0;
        }
        k(fi, fj) += s / a[t];
      }
      const double div = edges[i].sign * edges[i].length;
      k(fi, nf + static_cast<long>(t)) -= div;
      k(nf + static_cast<long>(t), fi) -= div;
    }
  }
  for (std::size_t j = 0; j < g.cells_per_side(); ++j) rhs[idx[g.vertical_edge(0, j)]] = g.h();
  const Eigen::VectorXd x = k.fullPivLu().solve(rhs);
  std::vector<double> out(ne, 0.0);
  for (std::size_t e = 0; e < ne; ++e) {
    if (idx[e] >= 0) out[e] = x[idx[e]];
  }
  return out;
}

TEST(UnitSquareMesh, Counts) {
  for (std::size_t m : {1u, 4u, 16u}) {
    UnitSquareMesh g(m);
    EXPECT_EQ(g.triangle_count(), 2 * m * m);
    EXPECT_EQ(g.edge_count(), 3 * m * m + 2 * m);
  }
  EXPECT_THROW(UnitSquareMesh(0), InvalidArgument);
}

TEST(UnitSquareMesh, PropertyLocateFindsContainingTriangle) {
  testing::Gen gen(1);
  UnitSquareMesh g(8);
  for (int k = 0; k < 5000; ++k) {
    const Point2 p{gen.uniform(0.0, 1.0), gen.uniform(0.0, 1.0)};
    const auto v = g.vertices(g.locate(p));
    // Barycentric coordinates must all be >= 0 (up to rounding).
    const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
    const double l1 = ((p.x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (p.y - v[0].y)) / det;
    const double l2 = ((v[1].x - v[0].x) * (p.y - v[0].y) - (p.x - v[0].x) * (v[1].y - v[0].y)) / det;
    EXPECT_GE(l1, -1e-12);
    EXPECT_GE(l2, -1e-12);
    EXPECT_GE(1.0 - l1 - l2, -1e-12);
  }
}

TEST(SolveDarcy, HomogeneousUnitFlow) {
  auto mesh = make_mesh(8);
  const auto v = solve_darcy_rt0(mesh, [](Point2) { return 1.0; });
  for (std::size_t t = 0; t < mesh->triangle_count(); ++t) {
    const Point2 c = mesh->centroid(t);
    const Point2 q = v.velocity(t, c);
    EXPECT_NEAR(q.x, 1.0, 1e-10);
    EXPECT_NEAR(q.y, 0.0, 1e-10);
    EXPECT_NEAR(v.pressure()[t], 1.0 - c.x, 1e-10);
  }
}

TEST(SolveDarcy, ConstantCoefficientScalesVelocity) {
  auto mesh = make_mesh(4);
  const auto v = solve_darcy_rt0(mesh, [](Point2) { return 3.0; });
  for (std::size_t t = 0; t < mesh->triangle_count(); ++t) {
    const Point2 q = v.velocity(t, mesh->centroid(t));
    EXPECT_NEAR(q.x, 3.0, 1e-10);
    EXPECT_NEAR(q.y, 0.0, 1e-10);
  }
}

TEST(SolveDarcy, PropertyMatchesDenseMixedSystem) {
  testing::Gen gen(2);
  for (std::size_t m : {2u, 4u, 8u}) {
    auto mesh = make_mesh(m);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> a(mesh->triangle_count());
      for (double& x : a) x = gen.log_uniform(0.05, 20.0);
      const auto v = solve_darcy_rt0(mesh, a);
      const auto ref = dense_mixed_solution(*mesh, a);
      for (std::size_t e = 0; e < ref.size(); ++e) {
        EXPECT_NEAR(v.edge_values()[e], ref[e], 1e-9 * std::max(1.0, std::abs(ref[e])))
            << "m " << m << " edge " << e;
      }
    }
  }
}

TEST(SolveDarcy, PropertyDivergenceFreeAndConservative) {
  FlowCellConfig config;
  config.level_dims = {10, 20, 40};
  FlowCellModel model(config);
  testing::Gen gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector xi = gen.normal_vector(40);
    const auto v = model.velocity(xi, 3);
    const auto& g = v.mesh();
    ASSERT_EQ(g.cells_per_side(), 16u);
    for (std::size_t t = 0; t < g.triangle_count(); ++t) {
      EXPECT_LE(std::abs(triangle_divergence(v, t)), 1e-10);
    }
    double west = 0.0;
    double east = 0.0;
    for (std::size_t j = 0; j < g.cells_per_side(); ++j) {
      west += v.edge_flux(g.vertical_edge(0, j));
      east += v.edge_flux(g.vertical_edge(g.cells_per_side(), j));
    }
    EXPECT_GT(west, 0.0);
    EXPECT_NEAR(west, east, 1e-10);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      if (g.is_no_flow_edge(e)) EXPECT_EQ(v.edge_values()[e], 0.0);
    }
  }
}

TEST(SolveDarcy, Errors) {
  auto mesh = make_mesh(2);
  EXPECT_THROW(solve_darcy_rt0(mesh, std::vector<double>(3, 1.0)), InvalidArgument);
  std::vector<double> a(mesh->triangle_count(), 1.0);
  a[2] = 0.0;
  EXPECT_THROW(solve_darcy_rt0(mesh, a), ModelEvaluationError);
}

TEST(TraceParticle, HomogeneousTravelTimeOnEveryLevel) {
  for (int level = 1; level <= 6; ++level) {
    auto mesh = make_mesh(static_cast<std::size_t>(std::llround(1.0 / FlowCellModel::mesh_size(level))));
    const auto v1 = solve_darcy_rt0(mesh, [](Point2) { return 1.0; });
    EXPECT_NEAR(trace_particle(v1, {0.0, 0.5}), 1.0, 1e-10) << level;
    const auto v2 = solve_darcy_rt0(mesh, [](Point2) { return 2.0; });
    EXPECT_NEAR(trace_particle(v2, {0.0, 0.5}), 0.5, 1e-10) << level;
  }
}

TEST(TraceParticle, NorthwardSyntheticField) {
  // q = (0, 1): +1 on horizontal edges, 0 on vertical, -1/sqrt 2 on diagonals.
  auto mesh = make_mesh(8);
  std::vector<double> values(mesh->edge_count(), 0.0);
  for (std::size_t j = 0; j <= 8; ++j) {
    for (std::size_t i = 0; i < 8; ++i) values[mesh->horizontal_edge(i, j)] = 1.0;
  }
  for (std::size_t j = 0; j < 8; ++j) {
    for (std::size_t i = 0; i < 8; ++i) values[mesh->diagonal_edge(i, j)] = -1.0 / std::sqrt(2.0);
  }
  DiscreteVelocity v(mesh, values);
  const Point2 q = v.velocity({0.3, 0.4});
  EXPECT_NEAR(q.x, 0.0, 1e-14);
  EXPECT_NEAR(q.y, 1.0, 1e-14);
  EXPECT_NEAR(trace_particle(v, {0.0, 0.5}), 0.5, 1e-12);
}

TEST(TraceParticle, PropertyScalingLaw) {
  FlowCellConfig config;
  config.level_dims = {10, 20, 40};
  FlowCellModel model(config);
  testing::Gen gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector xi = gen.normal_vector(20);
    auto a = model.triangle_coefficients(xi, 2);
    const double c = gen.log_uniform(0.1, 10.0);
    const double t1 = trace_particle(solve_darcy_rt0(model.mesh(2), a), {0.0, 0.5});
    for (double& x : a) x *= c;
    const double t2 = trace_particle(solve_darcy_rt0(model.mesh(2), a), {0.0, 0.5});
    EXPECT_NEAR(t2, t1 / c, 1e-9 * t1);
  }
}

TEST(TraceParticle, Errors) {
  auto mesh = make_mesh(4);
  DiscreteVelocity still(mesh, std::vector<double>(mesh->edge_count(), 0.0));
  EXPECT_THROW(trace_particle(still, {0.0, 0.5}), ModelEvaluationError);
  const auto v = solve_darcy_rt0(mesh, [](Point2) { return 1.0; });
  EXPECT_THROW(trace_particle(v, {-0.1, 0.5}), InvalidArgument);
  TraceOptions few;
  few.max_steps = 3;
  EXPECT_THROW(trace_particle(v, {0.0, 0.5}, few), NonConvergence);
}

TEST(FlowCellModel, ZeroInputIsHomogeneous) {
  FlowCellModel model;
  EXPECT_EQ(model.max_level(), 6);
  for (int level = 1; level <= 4; ++level) {
    const Vector xi = Vector::Zero(static_cast<Eigen::Index>(model.dim(level)));
    EXPECT_NEAR(model.evaluate(xi, level), 0.97, 1e-10);
    EXPECT_EQ(model.mesh(level)->triangle_count(),
              static_cast<std::size_t>(2.0 / std::pow(FlowCellModel::mesh_size(level), 2)));
  }
}

TEST(FlowCellModel, SmallInputsDoNotFail) {
  FlowCellModel model;
  testing::Gen gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    Vector xi = gen.normal_vector(model.dim(2));
    xi *= gen.uniform(0.0, 0.1) / xi.norm();
    EXPECT_GT(model.evaluate(xi, 2), 0.0);
  }
}

TEST(FlowCellModel, PropertyRandomFieldsTrackWithinBand) {
  FlowCellConfig config;
  config.level_dims = {10, 20, 40};
  FlowCellModel model(config);
  testing::Gen gen(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int level = 1 + trial % 3;
    const Vector xi = gen.normal_vector(model.dim(level));
    const double t = model.travel_time(xi, level);
    EXPECT_GT(t, 0.0);
    EXPECT_TRUE(std::isfinite(t));
  }
}

TEST(FlowCellModel, InvalidConfig) {
  FlowCellConfig c;
  c.tau0 = 0.0;
  EXPECT_THROW(FlowCellModel{c}, InvalidArgument);
  c.tau0 = 0.03;
  c.level_dims = {40, 20};
  EXPECT_THROW(FlowCellModel{c}, InvalidArgument);
}

}  // namespace
}  // namespace mlsis
