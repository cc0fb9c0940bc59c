#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mlsis/errors.hpp"
#include "mlsis/harness.hpp"
#include "support.hpp"

namespace mlsis {
namespace {

std::string csv_of(const std::vector<RunRecord>& records, int levels) {
  std::ostringstream out;
  write_csv_header(out, levels);
  for (const auto& r : records) write_csv_row(out, r, levels);
  return out.str();
}

ExperimentConfig linear_config(Method method) {
  ExperimentConfig c;
  c.model = ModelId::Linear;
  c.method = method;
  c.n = 200;
  c.dim = 10;
  c.beta = 2.0;
  c.threads = 1;
  return c;
}

TEST(CostUnits, Examples) {
  auto at = [](int level, int levels) {
    std::vector<std::uint64_t> c(static_cast<std::size_t>(levels), 0);
    c[static_cast<std::size_t>(level - 1)] = 1;
    return c;
  };
  EXPECT_EQ(cost_units(at(8, 8), 8, 1), 1.0);
  EXPECT_EQ(cost_units(at(7, 8), 8, 1), 0.5);
  EXPECT_EQ(cost_units(at(5, 6), 6, 2), 0.25);
  EXPECT_EQ(cost_units(std::vector<std::uint64_t>{}, 3, 1), 0.0);
  EXPECT_EQ(cost_units(std::vector<std::uint64_t>{4, 2, 1}, 3, 1), 1.0 + 1.0 + 1.0);
  EXPECT_THROW(cost_units(at(2, 2), 1, 1), InvalidArgument);
}

TEST(RelRmse, Examples) {
  EXPECT_EQ(rel_rmse(std::vector<double>{2.0, 2.0}, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(rel_rmse(std::vector<double>{0.0, 2.0}, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(rel_rmse(std::vector<double>{1.5}, 1.0), 0.5);
  EXPECT_THROW(rel_rmse(std::vector<double>{1.0}, 0.0), InvalidArgument);
  EXPECT_THROW(rel_rmse(std::vector<double>{}, 1.0), InvalidArgument);
}

TEST(Csv, HeaderIsExact) {
  EXPECT_EQ(csv_header(3),
            "run_id,method,model,N,delta_target,kernel,c,p0,L,level_dims,estimate,cost_units,"
            "n_temper,n_bridge,evals_l1,evals_l2,evals_l3,wall_ms,status");
}

TEST(Csv, ByteIdenticalAcrossThreadCounts) {
  for (Method m : {Method::Sis, Method::Sus}) {
    auto c = linear_config(m);
    c.reps = 100;
    c.threads = 1;
    const auto a = csv_of(run_experiment(c), 1);
    c.threads = 4;
    const auto b = csv_of(run_experiment(c), 1);
    EXPECT_EQ(a, b);
    c.seed = 2;
    EXPECT_NE(a, csv_of(run_experiment(c), 1));
  }
}

TEST(Csv, RowFormat) {
  auto c = linear_config(Method::Sis);
  c.reps = 1;
  const auto records = run_experiment(c);
  const auto text = csv_of(records, 1);
  const auto newline = text.find('\n');
  const std::string row = text.substr(newline + 1);
  EXPECT_EQ(row.rfind("0,sis,linear,200,0.25,vmfn,0.1,,1,ldd,", 0), 0u) << row;
  EXPECT_EQ(row.substr(row.size() - 5), ",,ok\n");
  EXPECT_EQ(records[0].cost_units, static_cast<double>(records[0].evals[0]));
}

TEST(Summary, RecomputedFromRows) {
  auto c = linear_config(Method::Sis);
  c.reps = 10;
  auto records = run_experiment(c);
  records[3].status = "nonconvergence";
  const auto s = summarize(records, 0.02);
  EXPECT_EQ(s.runs, 10u);
  EXPECT_EQ(s.ok, 9u);
  EXPECT_EQ(s.excluded, 1u);
  std::vector<double> est;
  double cost = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i == 3) continue;
    est.push_back(records[i].estimate);
    cost += records[i].cost_units;
  }
  EXPECT_NEAR(s.mean, testing::mean(est), 1e-15);
  EXPECT_NEAR(s.std_dev, testing::sample_std(est), 1e-15);
  EXPECT_NEAR(*s.rel_rmse, rel_rmse(est, 0.02), 1e-15);
  EXPECT_NEAR(s.mean_cost_units, cost / 9.0, 1e-9);
  EXPECT_EQ(summary_header().substr(0, 7), "method,");
}

TEST(RunExperiment, FailedRunsAreFlagged) {
  auto c = linear_config(Method::Sus);
  c.beta = 40.0;
  c.dim = 2;
  c.n = 100;
  c.reps = 2;
  const auto records = run_experiment(c);
  for (const auto& r : records) {
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.status, "nonconvergence");
  }
  const auto s = summarize(records, c.resolved_reference());
  EXPECT_EQ(s.ok, 0u);
  EXPECT_FALSE(s.rel_rmse.has_value());
  const auto text = csv_of(records, 1);
  EXPECT_NE(text.find(",nonconvergence\n"), std::string::npos);
}

TEST(McReference, LinearWithinBinomialBand) {
  auto c = linear_config(Method::Mc);
  c.dim = 1;
  c.n = 10000000;
  c.threads = 0;
  const auto r = mc_reference(c);
  const double p = testing::phi_cdf(-2.0);
  EXPECT_NEAR(r.estimate, p, 3.0 * std::sqrt(p * (1 - p) / 1e7));
  EXPECT_EQ(r.evals[0], 10000000u);
  c.threads = 1;
  c.n = 100000;
  const auto a = mc_reference(c);
  c.threads = 3;
  EXPECT_EQ(a.estimate, mc_reference(c).estimate);
}

TEST(Config, SetAndValidate) {
  ExperimentConfig c;
  c.set("model", "flowcell2d");
  c.set("--method", "mlsis");
  c.set("n", "1000");
  c.set("level-dims", "fixed");
  c.set("levels", "3");
  EXPECT_EQ(c.model, ModelId::FlowCell2d);
  EXPECT_EQ(c.method, Method::Mlsis);
  EXPECT_EQ(c.resolved_levels(), 3);
  EXPECT_EQ(c.level_dims(), (std::vector<std::size_t>{150, 150, 150}));
  c.set("level-dims", "ldd");
  EXPECT_EQ(c.level_dims(), (std::vector<std::size_t>{10, 20, 40}));
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(c.set("c", "abc"), InvalidArgument);
  EXPECT_THROW(c.set("level-dims", "both"), InvalidArgument);
  EXPECT_THROW(c.set("kernel", "hmc"), InvalidArgument);
  EXPECT_THROW(c.set("frobnicate", "1"), InvalidArgument);
  c.set("c", "0.3");
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.set("c", "0.1");
  c.set("ns-frac", "0.0001");
  EXPECT_THROW(c.validate(), InvalidArgument);

  ExperimentConfig d;
  EXPECT_EQ(d.resolved_levels(), 8);
  EXPECT_EQ(d.level_dims(), (std::vector<std::size_t>{10, 20, 40, 80, 150, 150, 150, 150}));
  EXPECT_NEAR(*d.resolved_reference(), 1.524e-4, 1e-7);
  d.model = ModelId::Linear;
  d.levels = 2;
  EXPECT_THROW(d.validate(), InvalidArgument);
}

TEST(Config, TextAndGrid) {
  const auto kv = parse_config_text("# comment\nmodel = linear\n\nn=400 # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"n", "400"}));
  EXPECT_THROW(parse_config_text("novalue\n"), InvalidArgument);

  const auto grid = expand_grid(ExperimentConfig{}, "kernel=acs,vmfn;n=100,200,400");
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_EQ(grid[0].kernel, KernelKind::Acs);
  EXPECT_EQ(grid[0].n, 100u);
  EXPECT_EQ(grid[5].kernel, KernelKind::Vmfn);
  EXPECT_EQ(grid[5].n, 400u);
  EXPECT_THROW(expand_grid(ExperimentConfig{}, "kernel"), InvalidArgument);
}

TEST(Names, RoundTrip) {
  for (Method m : {Method::Mc, Method::Sis, Method::Mlsis, Method::Sus, Method::Mlsus}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  for (ModelId id : {ModelId::Linear, ModelId::Diffusion1d, ModelId::FlowCell2d}) {
    EXPECT_EQ(parse_model(to_string(id)), id);
  }
  EXPECT_THROW(parse_method("nope"), InvalidArgument);
  EXPECT_THROW(parse_model("nope"), InvalidArgument);
}

}  // namespace
}  // namespace mlsis
