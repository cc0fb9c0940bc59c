#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mlsis/errors.hpp"
#include "mlsis/fem1d.hpp"
#include "support.hpp"

namespace mlsis {
namespace {

TEST(SolveDiffusion1d, UnitCoefficientIsNodallyExact) {
  const double h = 1.0 / 64.0;
  const auto v = solve_diffusion_1d([](double) { return 1.0; }, h);
  ASSERT_EQ(v.size(), 65u);
  EXPECT_EQ(v[0], 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = static_cast<double>(i) * h;
    EXPECT_NEAR(v[i], x - 0.5 * x * x, 1e-13);
  }
  EXPECT_NEAR(v.back(), 0.5, 1e-14);
}

TEST(SolveDiffusion1d, ConstantCoefficientScales) {
  for (double c : {0.25, 3.0, 17.0}) {
    const auto v = solve_diffusion_1d([c](double) { return c; }, 1.0 / 16.0);
    EXPECT_NEAR(v.back(), 0.5 / c, 1e-14);
  }
}

TEST(SolveDiffusion1d, PropertyPiecewiseConstantOracle) {
  // With a constant per element, a v' = 1 - x holds exactly, so the nodal
  // values are v_i = sum_{e < i} h (1 - x_mid(e)) / a_e.
  testing::Gen gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = gen.size(1, 300);
    const double h = 1.0 / static_cast<double>(m);
    std::vector<double> a(m);
    for (double& v : a) v = gen.log_uniform(0.05, 20.0);
    const auto v = solve_diffusion_1d(a);
    double expected = 0.0;
    double prev = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      expected += h * (1.0 - (static_cast<double>(e) + 0.5) * h) / a[e];
      EXPECT_NEAR(v[e + 1], expected, 1e-9 * std::max(1.0, expected));
      // Non-negative and non-decreasing for positive a.
      EXPECT_GE(v[e + 1], prev);
      prev = v[e + 1];
      // Discrete flux equals 1 - x at the midpoint up to O(h).
      const double flux = a[e] * (v[e + 1] - v[e]) / h;
      EXPECT_LE(std::abs(flux - (1.0 - (static_cast<double>(e) + 0.5) * h)), h);
    }
  }
}

TEST(SolveDiffusion1d, SecondOrderConvergence) {
  auto a = [](double x) { return 1.0 + 0.5 * std::sin(3.0 * x); };
  std::vector<double> end;
  for (int m : {16, 32, 64, 128}) end.push_back(solve_diffusion_1d(a, 1.0 / m).back());
  for (std::size_t i = 0; i + 2 < end.size(); ++i) {
    const double ratio = (end[i] - end[i + 1]) / (end[i + 1] - end[i + 2]);
    EXPECT_NEAR(ratio, 4.0, 0.3);
  }
}

TEST(SolveDiffusion1d, Errors) {
  EXPECT_THROW(solve_diffusion_1d([](double x) { return x - 0.5; }, 0.25), ModelEvaluationError);
  EXPECT_THROW(solve_diffusion_1d([](double) { return 1.0; }, 0.3), InvalidArgument);
  EXPECT_THROW(solve_diffusion_1d(std::vector<double>{}), InvalidArgument);
}

TEST(Diffusion1dModel, ZeroInputGivesAnalyticValueOnEveryLevel) {
  Diffusion1dModel model;
  const double mu = lognormal_params(1.0, 0.1).mean;
  EXPECT_NEAR(std::exp(mu), 0.99504, 1e-5);
  for (int level = 1; level <= model.max_level(); ++level) {
    const Vector xi = Vector::Zero(static_cast<Eigen::Index>(model.dim(level)));
    EXPECT_NEAR(model.evaluate(xi, level), 0.535 - 0.5 / std::exp(mu), 1e-11);
    EXPECT_NEAR(model.evaluate(xi, level), 0.03251, 1e-5);
  }
}

TEST(Diffusion1dModel, MeshHierarchy) {
  Diffusion1dModel model;
  EXPECT_EQ(model.max_level(), 8);
  for (int level = 1; level <= 8; ++level) {
    EXPECT_EQ(Diffusion1dModel::mesh_size(level), std::ldexp(1.0, -level - 1));
  }
  EXPECT_EQ(Diffusion1dModel::mesh_size(8), 1.0 / 512.0);
  EXPECT_EQ(model.dim(1), 10u);
  EXPECT_EQ(model.dim(8), 150u);
}

TEST(Diffusion1dModel, RichardsonRatioForSmoothInput) {
  Diffusion1dConfig config;
  config.level_dims.assign(8, 150);
  Diffusion1dModel model(config);
  Vector xi = Vector::Zero(150);
  xi[0] = 1.5;
  xi[1] = -1.0;
  std::vector<double> v;
  for (int level = 4; level <= 7; ++level) v.push_back(0.535 - model.evaluate(xi, level));
  for (std::size_t i = 0; i + 2 < v.size(); ++i) {
    EXPECT_NEAR((v[i] - v[i + 1]) / (v[i + 1] - v[i + 2]), 4.0, 0.4);
  }
}

TEST(Diffusion1dModel, LevelPrefixConsistency) {
  // Coordinates beyond n_l are ignored by level l: evaluating with the
  // prefix on a level-dependent model equals zero-padding on a fixed one.
  Diffusion1dModel ldd;
  Diffusion1dConfig fixed_config;
  fixed_config.level_dims.assign(8, 150);
  Diffusion1dModel fixed(fixed_config);
  testing::Gen gen(3);
  const Vector xi = gen.normal_vector(150);
  for (int level = 1; level <= 4; ++level) {
    const auto n = static_cast<Eigen::Index>(ldd.dim(level));
    Vector padded = Vector::Zero(150);
    padded.head(n) = xi.head(n);
    EXPECT_NEAR(ldd.evaluate(xi.head(n), level), fixed.evaluate(padded, level), 1e-13);
  }
}

TEST(Diffusion1dModel, InvalidConfig) {
  Diffusion1dConfig c;
  c.level_dims = {20, 10};
  EXPECT_THROW(Diffusion1dModel{c}, InvalidArgument);
  c.level_dims = {};
  EXPECT_THROW(Diffusion1dModel{c}, InvalidArgument);
}

}  // namespace
}  // namespace mlsis
