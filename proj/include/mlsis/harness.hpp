#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlsis/mcmc.hpp"
#include "mlsis/model.hpp"

namespace mlsis {

enum class ModelId { Linear, Diffusion1d, FlowCell2d };
enum class Method { Mc, Sis, Mlsis, Sus, Mlsus };

std::string to_string(ModelId id);
std::string to_string(Method method);
ModelId parse_model(const std::string& name);
Method parse_method(const std::string& name);

struct ExperimentConfig {
  ModelId model = ModelId::Diffusion1d;
  Method method = Method::Sis;
  std::size_t n = 2000;
  double delta_target = 0.25;
  KernelKind kernel = KernelKind::Vmfn;
  double c = 0.1;
  double p0 = 0.1;
  std::size_t burn_in = 0;
  /// Number of levels L; 0 selects the model default (1, 8 or 6).
  int levels = 0;
  /// Level-dependent KL dimensions ("ldd") or one dimension for all ("fixed").
  bool level_dependent = true;
  double ns_fraction = 0.1;
  std::size_t reps = 1;
  std::uint64_t seed = 1;
  /// Evaluation level of single-level methods; 0 means the finest.
  int level = 0;

  // Model parameters.
  double beta = 3.5;
  std::size_t dim = 150;
  double threshold = 0.535;
  double tau0 = 0.03;

  /// Reference value for the relative RMSE; defaults to a known value where
  /// one exists.
  std::optional<double> reference;
  /// Worker threads for repetitions; 0 uses the hardware concurrency.
  unsigned threads = 0;
  /// Fill the wall_ms column (makes the CSV timing dependent).
  bool timing = false;

  int resolved_levels() const;
  int resolved_level() const;
  std::vector<std::size_t> level_dims() const;
  std::optional<double> resolved_reference() const;
  bool multilevel() const { return method == Method::Mlsis || method == Method::Mlsus; }

  /// Throws InvalidArgument with an actionable message.
  void validate() const;

  /// Applies one key=value setting (keys as the CLI flags without dashes).
  void set(const std::string& key, const std::string& value);
};

/// Parses a flat key=value file; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

/// Expands "key=v1,v2;key2=w1,w2" into the cross product of settings.
std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base, const std::string& grid);

std::unique_ptr<LimitStateModel> make_model(const ExperimentConfig& config);

/// Sum over levels of count_l 2^{-d (L - l)}; counts[l - 1] is level l.
double cost_units(std::span<const std::uint64_t> counts, int max_level, int cost_dim);

/// sqrt(mean((x - ref)^2)) / ref.
double rel_rmse(std::span<const double> estimates, double reference);

struct RunRecord {
  std::string run_id;
  ExperimentConfig config;
  double estimate = 0.0;
  double cost_units = 0.0;
  std::size_t n_temper = 0;
  std::size_t n_bridge = 0;
  std::vector<std::uint64_t> evals;
  double wall_ms = 0.0;
  std::string status = "ok";
  std::string message;

  bool ok() const { return status == "ok"; }
};

/// One repetition with the given rng seed.
RunRecord run_once(const ExperimentConfig& config, const LimitStateModel& model,
                   std::uint64_t seed);

/// config.reps repetitions; repetition r uses derive_seed(config.seed, r).
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

/// Plain Monte Carlo at config.resolved_level() with config.n samples,
/// split into fixed chunks so the result does not depend on threading.
RunRecord mc_reference(const ExperimentConfig& config);

std::string csv_header(int max_level);
void write_csv_header(std::ostream& out, int max_level);
void write_csv_row(std::ostream& out, const RunRecord& record, int max_level);

struct Summary {
  std::size_t runs = 0;
  std::size_t ok = 0;
  std::size_t excluded = 0;
  double mean = 0.0;
  double std_dev = 0.0;  ///< sample standard deviation (n - 1)
  std::optional<double> reference;
  std::optional<double> rel_rmse;
  double mean_cost_units = 0.0;
};

Summary summarize(std::span<const RunRecord> records, std::optional<double> reference);
std::string summary_header();
std::string summary_row(const ExperimentConfig& config, const Summary& s);

}  // namespace mlsis
