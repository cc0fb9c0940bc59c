#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mlsis/errors.hpp"
#include "mlsis/fem1d.hpp"
#include "mlsis/fem2d.hpp"
#include "mlsis/harness.hpp"
#include "mlsis/model.hpp"
#include "mlsis/sis.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kAllFailed = 3;

const char* const kSettingFlags[] = {
    "model", "method", "n",    "delta-target", "kernel",    "c",     "p0",        "burn-in",
    "levels", "level-dims", "ns-frac", "reps", "seed", "level", "beta", "dim", "threshold",
    "tau0",  "reference", "threads"};

struct CommonFlags {
  std::map<std::string, std::string> values;
  std::string config_path;
  std::string out_path;
  std::string summary_path;
  bool timing = false;

  void attach(CLI::App* app) {
    for (const char* name : kSettingFlags) {
      app->add_option(std::string("--") + name, values[name]);
    }
    app->add_option("--config", config_path, "key=value file applied before the flags");
    app->add_option("--out", out_path, "CSV output path (stdout if omitted)");
    app->add_option("--summary", summary_path, "summary CSV output path");
    app->add_flag("--timing", timing, "fill the wall_ms column");
  }

  mlsis::ExperimentConfig resolve(CLI::App* app) const {
    mlsis::ExperimentConfig config;
    if (!config_path.empty()) config = mlsis::load_config_file(config_path, config);
    for (const char* name : kSettingFlags) {
      if (app->count(std::string("--") + name) > 0) config.set(name, values.at(name));
    }
    if (timing) config.timing = true;
    return config;
  }
};

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw mlsis::InvalidArgument("cannot write '" + path + "'");
  return file;
}

// The summary goes to stdout unless stdout already carries the CSV.
void write_summary(const CommonFlags& flags, const std::vector<std::string>& rows) {
  std::ostream& console = flags.out_path.empty() ? std::cerr : std::cout;
  console << mlsis::summary_header() << '\n';
  for (const auto& r : rows) console << r << '\n';
  const std::string& path = flags.summary_path;
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw mlsis::InvalidArgument("cannot write '" + path + "'");
  f << mlsis::summary_header() << '\n';
  for (const auto& r : rows) f << r << '\n';
}

int run_configs(const std::vector<mlsis::ExperimentConfig>& configs, const CommonFlags& flags) {
  for (const auto& c : configs) c.validate();
  int max_level = 1;
  for (const auto& c : configs) max_level = std::max(max_level, c.resolved_levels());
  std::ofstream file;
  std::ostream& out = open_out(flags.out_path, file);
  mlsis::write_csv_header(out, max_level);
  std::vector<std::string> summaries;
  std::size_t ok = 0;
  std::size_t row = 0;
  for (const auto& c : configs) {
    auto records = mlsis::run_experiment(c);
    for (auto& r : records) {
      r.run_id = std::to_string(row++);
      mlsis::write_csv_row(out, r, max_level);
      if (!r.ok()) std::cerr << "run " << r.run_id << ": " << r.status << ": " << r.message << '\n';
    }
    const auto s = mlsis::summarize(records, c.resolved_reference());
    ok += s.ok;
    summaries.push_back(mlsis::summary_row(c, s));
  }
  out.flush();
  write_summary(flags, summaries);
  return ok == 0 ? kAllFailed : 0;
}

int run_mc_reference(const mlsis::ExperimentConfig& config, const CommonFlags& flags) {
  const auto rec = mlsis::mc_reference(config);
  std::ofstream file;
  std::ostream& out = open_out(flags.out_path, file);
  const int max_level = rec.config.resolved_levels();
  mlsis::write_csv_header(out, max_level);
  mlsis::write_csv_row(out, rec, max_level);
  const double p = rec.estimate;
  const double half = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(config.n));
  std::fprintf(stderr, "mc-reference: level %d, N=%zu, %s, estimate %.6g (95%% CI %.6g .. %.6g)\n",
               rec.config.resolved_level(), config.n, rec.message.c_str(), p, p - half, p + half);
  return 0;
}

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

int run_selftest() {
  std::vector<Check> checks;
  auto add = [&](std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  };
  {
    const std::vector<double> a(64, 1.0);
    const double v = mlsis::solve_diffusion_1d(a).back();
    add("fem1d unit coefficient v(1) = 0.5", std::abs(v - 0.5) < 1e-12, std::to_string(v));
  }
  {
    auto mesh = std::make_shared<const mlsis::UnitSquareMesh>(8);
    const auto vel = mlsis::solve_darcy_rt0(mesh, std::vector<double>(mesh->triangle_count(), 1.0));
    const double tau = mlsis::trace_particle(vel, {0.0, 0.5});
    add("flow cell homogeneous travel time = 1", std::abs(tau - 1.0) < 1e-10, std::to_string(tau));
  }
  {
    mlsis::ExperimentConfig c;
    c.model = mlsis::ModelId::Linear;
    c.method = mlsis::Method::Sis;
    c.beta = 3.0;
    c.dim = 10;
    c.n = 500;
    c.reps = 4;
    c.threads = 1;
    const auto recs = mlsis::run_experiment(c);
    const auto s = mlsis::summarize(recs, c.resolved_reference());
    const bool pass = s.ok == c.reps && std::abs(s.mean / *s.reference - 1.0) < 0.5;
    add("linear SIS estimate near the exact value", pass,
        std::to_string(s.mean) + " vs " + std::to_string(*s.reference));
  }
  bool all = true;
  for (const auto& ch : checks) {
    std::printf("%s %s (%s)\n", ch.pass ? "PASS" : "FAIL", ch.name.c_str(), ch.detail.c_str());
    all = all && ch.pass;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rare-event probability estimation with (multilevel) SIS and subset simulation"};
  app.require_subcommand(1);

  CommonFlags estimate_flags;
  auto* estimate = app.add_subcommand("estimate", "repeated runs of one estimator configuration");
  estimate_flags.attach(estimate);

  CommonFlags mc_flags;
  auto* mc = app.add_subcommand("mc-reference", "crude Monte Carlo reference value");
  mc_flags.attach(mc);

  CommonFlags sweep_flags;
  std::string grid;
  auto* sweep = app.add_subcommand("sweep", "cross product of settings");
  sweep_flags.attach(sweep);
  sweep->add_option("--grid", grid, "key=v1,v2;key2=w1,w2")->required();

  app.add_subcommand("selftest", "quick built-in consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (estimate->parsed()) {
      return run_configs({estimate_flags.resolve(estimate)}, estimate_flags);
    }
    if (mc->parsed()) {
      return run_mc_reference(mc_flags.resolve(mc), mc_flags);
    }
    if (sweep->parsed()) {
      return run_configs(mlsis::expand_grid(sweep_flags.resolve(sweep), grid), sweep_flags);
    }
    return run_selftest();
  } catch (const mlsis::InvalidArgument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }
}
