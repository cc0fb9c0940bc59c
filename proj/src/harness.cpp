#include "mlsis/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "mlsis/distributions.hpp"
#include "mlsis/errors.hpp"
#include "mlsis/fem1d.hpp"
#include "mlsis/fem2d.hpp"
#include "mlsis/mlsis.hpp"
#include "mlsis/parallel.hpp"
#include "mlsis/sis.hpp"
#include "mlsis/subset.hpp"

namespace mlsis {

namespace {

constexpr double kDiffusionReference = 1.524e-4;
constexpr std::size_t kMcChunks = 64;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
  key = trim(key);
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("invalid number for " + key + ": '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw InvalidArgument("invalid non-negative integer for " + key + ": '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw InvalidArgument("integer out of range for " + key + ": '" + v + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace

std::string to_string(ModelId id) {
  switch (id) {
    case ModelId::Linear:
      return "linear";
    case ModelId::Diffusion1d:
      return "diffusion1d";
    case ModelId::FlowCell2d:
      return "flowcell2d";
  }
  return "?";
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Mc:
      return "mc";
    case Method::Sis:
      return "sis";
    case Method::Mlsis:
      return "mlsis";
    case Method::Sus:
      return "sus";
    case Method::Mlsus:
      return "mlsus";
  }
  return "?";
}

ModelId parse_model(const std::string& name) {
  if (name == "linear") return ModelId::Linear;
  if (name == "diffusion1d") return ModelId::Diffusion1d;
  if (name == "flowcell2d") return ModelId::FlowCell2d;
  throw InvalidArgument("unknown model '" + name + "' (expected linear, diffusion1d or flowcell2d)");
}

Method parse_method(const std::string& name) {
  if (name == "mc") return Method::Mc;
  if (name == "sis") return Method::Sis;
  if (name == "mlsis") return Method::Mlsis;
  if (name == "sus") return Method::Sus;
  if (name == "mlsus") return Method::Mlsus;
  throw InvalidArgument("unknown method '" + name + "' (expected mc, sis, mlsis, sus or mlsus)");
}

int ExperimentConfig::resolved_levels() const {
  if (model == ModelId::Linear) return 1;
  if (levels > 0) return levels;
  return model == ModelId::Diffusion1d ? 8 : 6;
}

int ExperimentConfig::resolved_level() const { return level > 0 ? level : resolved_levels(); }

std::vector<std::size_t> ExperimentConfig::level_dims() const {
  const int count = resolved_levels();
  if (model == ModelId::Linear) return {dim};
  std::vector<std::size_t> dims(static_cast<std::size_t>(count), dim);
  if (level_dependent) {
    const std::size_t schedule[] = {10, 20, 40, 80};
    for (std::size_t l = 0; l < dims.size() && l < 4; ++l) dims[l] = std::min(schedule[l], dim);
  }
  return dims;
}

std::optional<double> ExperimentConfig::resolved_reference() const {
  if (reference) return reference;
  if (model == ModelId::Linear) return 0.5 * std::erfc(beta / std::sqrt(2.0));
  if (model == ModelId::Diffusion1d && resolved_level() == 8 && threshold == 0.535 &&
      dim == 150) {
    return kDiffusionReference;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (n < 2) throw InvalidArgument("--n must be >= 2");
  if (reps == 0) throw InvalidArgument("--reps must be >= 1");
  if (dim == 0) throw InvalidArgument("--dim must be >= 1");
  if (levels < 0) throw InvalidArgument("--levels must be >= 1");
  if (model == ModelId::Linear && levels > 1) {
    throw InvalidArgument("--levels: the linear model has a single level");
  }
  const int top = resolved_levels();
  if (level < 0 || level > top) {
    throw InvalidArgument("--level must be in [1, " + std::to_string(top) + "]");
  }
  if (model == ModelId::FlowCell2d && top > 8) {
    throw InvalidArgument("--levels: flowcell2d supports at most 8 levels");
  }
  if (model == ModelId::Diffusion1d && top > 16) {
    throw InvalidArgument("--levels: diffusion1d supports at most 16 levels");
  }
  if (!(tau0 > 0.0)) throw InvalidArgument("--tau0 must be > 0");
  if (reference && !(*reference > 0.0)) throw InvalidArgument("--reference must be > 0");
  if (method == Method::Sis || method == Method::Mlsis) {
    SamplerOptions o;
    o.delta_target = delta_target;
    o.c = c;
    o.ns_fraction = ns_fraction;
    o.validate(n);
    if (method == Method::Mlsis && top > 1) {
      const auto ns = std::llround(ns_fraction * static_cast<double>(n));
      if (ns < 1 || ns >= static_cast<long long>(n)) {
        throw InvalidArgument("--ns-frac: ns_frac * N must be in [1, N)");
      }
    }
  }
  if (method == Method::Sus || method == Method::Mlsus) {
    SubsetOptions o;
    o.p0 = p0;
    o.validate(n);
  }
}

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = normalize_key(raw_key);
  const std::string v = trim(raw_value);
  if (key == "model") {
    model = parse_model(v);
  } else if (key == "method") {
    method = parse_method(v);
  } else if (key == "n") {
    n = to_uint(key, v);
  } else if (key == "delta-target") {
    delta_target = to_double(key, v);
  } else if (key == "kernel") {
    kernel = parse_kernel(v);
  } else if (key == "c") {
    c = to_double(key, v);
  } else if (key == "p0") {
    p0 = to_double(key, v);
  } else if (key == "burn-in") {
    burn_in = to_uint(key, v);
  } else if (key == "levels") {
    levels = static_cast<int>(to_uint(key, v));
    if (levels < 1) throw InvalidArgument("--levels must be >= 1");
  } else if (key == "level-dims") {
    if (v == "ldd") {
      level_dependent = true;
    } else if (v == "fixed") {
      level_dependent = false;
    } else {
      throw InvalidArgument("--level-dims must be 'fixed' or 'ldd'");
    }
  } else if (key == "ns-frac") {
    ns_fraction = to_double(key, v);
  } else if (key == "reps") {
    reps = to_uint(key, v);
  } else if (key == "seed") {
    seed = to_uint(key, v);
  } else if (key == "level") {
    level = static_cast<int>(to_uint(key, v));
  } else if (key == "beta") {
    beta = to_double(key, v);
  } else if (key == "dim") {
    dim = to_uint(key, v);
  } else if (key == "threshold") {
    threshold = to_double(key, v);
  } else if (key == "tau0") {
    tau0 = to_double(key, v);
  } else if (key == "reference") {
    reference = to_double(key, v);
  } else if (key == "threads") {
    threads = static_cast<unsigned>(to_uint(key, v));
  } else if (key == "timing") {
    if (v == "true" || v == "1") {
      timing = true;
    } else if (v == "false" || v == "0") {
      timing = false;
    } else {
      throw InvalidArgument("--timing must be true or false");
    }
  } else {
    throw InvalidArgument("unknown setting '" + raw_key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(number) + ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  for (const auto& [k, v] : parse_config_text(buf.str())) base.set(k, v);
  return base;
}

std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base, const std::string& grid) {
  std::vector<ExperimentConfig> configs{base};
  for (const auto& axis : split(grid, ';')) {
    if (axis.empty()) continue;
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--grid: expected key=v1,v2 in '" + axis + "'");
    const std::string key = axis.substr(0, eq);
    const auto values = split(axis.substr(eq + 1), ',');
    if (values.empty()) throw InvalidArgument("--grid: no values for '" + key + "'");
    std::vector<ExperimentConfig> next;
    for (const auto& c : configs) {
      for (const auto& v : values) {
        ExperimentConfig copy = c;
        copy.set(key, v);
        next.push_back(std::move(copy));
      }
    }
    configs = std::move(next);
  }
  return configs;
}

std::unique_ptr<LimitStateModel> make_model(const ExperimentConfig& config) {
  switch (config.model) {
    case ModelId::Linear:
      return std::make_unique<LinearModel>(config.beta, config.dim);
    case ModelId::Diffusion1d: {
      Diffusion1dConfig c;
      c.threshold = config.threshold;
      c.level_dims = config.level_dims();
      return std::make_unique<Diffusion1dModel>(c);
    }
    case ModelId::FlowCell2d: {
      FlowCellConfig c;
      c.tau0 = config.tau0;
      c.level_dims = config.level_dims();
      return std::make_unique<FlowCellModel>(c);
    }
  }
  throw InternalError("make_model: unknown model");
}

double cost_units(std::span<const std::uint64_t> counts, int max_level, int cost_dim) {
  if (static_cast<int>(counts.size()) > max_level) {
    throw InvalidArgument("cost_units: counts for levels above L");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const int level = static_cast<int>(i) + 1;
    total += static_cast<double>(counts[i]) * std::ldexp(1.0, -cost_dim * (max_level - level));
  }
  return total;
}

double rel_rmse(std::span<const double> estimates, double reference) {
  if (!(reference > 0.0)) throw InvalidArgument("rel_rmse: reference must be > 0");
  if (estimates.empty()) throw InvalidArgument("rel_rmse: no estimates");
  double ss = 0.0;
  for (double e : estimates) ss += (e - reference) * (e - reference);
  return std::sqrt(ss / static_cast<double>(estimates.size())) / reference;
}

RunRecord run_once(const ExperimentConfig& config, const LimitStateModel& model,
                   std::uint64_t seed) {
  RunRecord rec;
  rec.config = config;
  rec.evals.assign(static_cast<std::size_t>(model.max_level()), 0);
  Rng rng(seed);
  const auto start = std::chrono::steady_clock::now();
  try {
    SamplerOptions so;
    so.delta_target = config.delta_target;
    so.kernel = config.kernel;
    so.c = config.c;
    so.burn_in = config.burn_in;
    so.ns_fraction = config.ns_fraction;
    SubsetOptions uo;
    uo.p0 = config.p0;
    uo.burn_in = config.burn_in;
    switch (config.method) {
      case Method::Mc: {
        EvalCounter counter(model.max_level());
        rec.estimate = mc_estimate(model, config.resolved_level(), config.n, rng, counter);
        rec.evals = counter.counts();
        break;
      }
      case Method::Sis: {
        const auto r = sis_estimate(model, config.resolved_level(), config.n, so, rng);
        rec.estimate = r.estimate;
        rec.evals = r.evals;
        rec.n_temper = r.trace.count(StepKind::Tempering);
        break;
      }
      case Method::Mlsis: {
        const auto r = mlsis_estimate(model, config.n, so, rng);
        rec.estimate = r.estimate;
        rec.evals = r.evals;
        rec.n_temper = r.trace.count(StepKind::Tempering);
        rec.n_bridge = r.trace.count(StepKind::Bridging);
        break;
      }
      case Method::Sus: {
        const auto r = sus_estimate(model, config.resolved_level(), config.n, uo, rng);
        rec.estimate = r.estimate;
        rec.evals = r.evals;
        break;
      }
      case Method::Mlsus: {
        const auto r = mlsus_estimate(model, config.n, uo, rng);
        rec.estimate = r.estimate;
        rec.evals = r.evals;
        break;
      }
    }
  } catch (const NonConvergence& e) {
    rec.status = "nonconvergence";
    rec.message = e.what();
  } catch (const DegenerateWeights& e) {
    rec.status = "degenerate_weights";
    rec.message = e.what();
  } catch (const ModelEvaluationError& e) {
    rec.status = "model_error";
    rec.message = e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  if (rec.ok()) rec.cost_units = cost_units(rec.evals, model.max_level(), model.cost_dim());
  return rec;
}

namespace {
unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}
}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto model = make_model(config);
  std::vector<RunRecord> records(config.reps);
  parallel_for(config.reps, worker_count(config.threads), [&](std::size_t r) {
    records[r] = run_once(config, *model, derive_seed(config.seed, r));
    records[r].run_id = std::to_string(r);
  });
  return records;
}

RunRecord mc_reference(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.method = Method::Mc;
  c.validate();
  const auto model = make_model(c);
  const int level = c.resolved_level();
  const std::size_t chunks = std::min<std::size_t>(kMcChunks, c.n);
  std::vector<std::uint64_t> failures(chunks, 0);
  std::vector<std::vector<std::uint64_t>> evals(chunks);
  const auto start = std::chrono::steady_clock::now();
  parallel_for(chunks, worker_count(c.threads), [&](std::size_t k) {
    const std::size_t lo = c.n * k / chunks;
    const std::size_t hi = c.n * (k + 1) / chunks;
    Rng rng = Rng::substream(c.seed, k);
    EvalCounter counter(model->max_level());
    const std::size_t dim = model->dim(level);
    for (std::size_t i = lo; i < hi; ++i) {
      const Vector u = sample_std_normal(dim, rng);
      if (is_failure(model->evaluate(u, level, counter))) ++failures[k];
    }
    evals[k] = counter.counts();
  });
  RunRecord rec;
  rec.run_id = "0";
  rec.config = c;
  rec.evals.assign(static_cast<std::size_t>(model->max_level()), 0);
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < chunks; ++k) {
    total += failures[k];
    for (std::size_t l = 0; l < rec.evals.size(); ++l) rec.evals[l] += evals[k][l];
  }
  rec.estimate = static_cast<double>(total) / static_cast<double>(c.n);
  rec.cost_units = cost_units(rec.evals, model->max_level(), model->cost_dim());
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  rec.message = std::to_string(total) + " failures";
  return rec;
}

std::string csv_header(int max_level) {
  std::string h = "run_id,method,model,N,delta_target,kernel,c,p0,L,level_dims,estimate,cost_units,"
                  "n_temper,n_bridge";
  for (int l = 1; l <= max_level; ++l) h += ",evals_l" + std::to_string(l);
  h += ",wall_ms,status";
  return h;
}

void write_csv_header(std::ostream& out, int max_level) { out << csv_header(max_level) << '\n'; }

void write_csv_row(std::ostream& out, const RunRecord& r, int max_level) {
  const ExperimentConfig& c = r.config;
  const bool is_sis = c.method == Method::Sis || c.method == Method::Mlsis;
  const bool is_sus = c.method == Method::Sus || c.method == Method::Mlsus;
  out << r.run_id << ',' << to_string(c.method) << ',' << to_string(c.model) << ',' << c.n << ','
      << (is_sis ? fmt("%g", c.delta_target) : "") << ','
      << (is_sis ? to_string(c.kernel) : (is_sus ? "acs" : "")) << ','
      << (is_sis ? fmt("%g", c.c) : "") << ',' << (is_sus ? fmt("%g", c.p0) : "") << ','
      << c.resolved_levels() << ',' << (c.level_dependent ? "ldd" : "fixed") << ','
      << (r.ok() ? fmt("%.12g", r.estimate) : "") << ','
      << (r.ok() ? fmt("%.12g", r.cost_units) : "") << ','
      << (is_sis && r.ok() ? std::to_string(r.n_temper) : "") << ','
      << (c.method == Method::Mlsis && r.ok() ? std::to_string(r.n_bridge) : "");
  for (int l = 1; l <= max_level; ++l) {
    out << ',';
    const auto i = static_cast<std::size_t>(l - 1);
    if (r.ok() && i < r.evals.size()) out << r.evals[i];
  }
  out << ',' << (c.timing ? fmt("%.3f", r.wall_ms) : "") << ',' << r.status << '\n';
}

Summary summarize(std::span<const RunRecord> records, std::optional<double> reference) {
  Summary s;
  s.runs = records.size();
  s.reference = reference;
  std::vector<double> est;
  double cost = 0.0;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    est.push_back(r.estimate);
    cost += r.cost_units;
  }
  s.ok = est.size();
  s.excluded = s.runs - s.ok;
  if (est.empty()) return s;
  double sum = 0.0;
  for (double e : est) sum += e;
  s.mean = sum / static_cast<double>(est.size());
  if (est.size() > 1) {
    double ss = 0.0;
    for (double e : est) ss += (e - s.mean) * (e - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(est.size() - 1));
  }
  s.mean_cost_units = cost / static_cast<double>(est.size());
  if (reference) s.rel_rmse = rel_rmse(est, *reference);
  return s;
}

std::string summary_header() {
  return "method,model,N,delta_target,kernel,c,p0,L,level_dims,runs,ok,excluded,mean,std,"
         "reference,rel_rmse,mean_cost_units";
}

std::string summary_row(const ExperimentConfig& c, const Summary& s) {
  const bool is_sis = c.method == Method::Sis || c.method == Method::Mlsis;
  const bool is_sus = c.method == Method::Sus || c.method == Method::Mlsus;
  std::ostringstream out;
  out << to_string(c.method) << ',' << to_string(c.model) << ',' << c.n << ','
      << (is_sis ? fmt("%g", c.delta_target) : "") << ','
      << (is_sis ? to_string(c.kernel) : (is_sus ? "acs" : "")) << ','
      << (is_sis ? fmt("%g", c.c) : "") << ',' << (is_sus ? fmt("%g", c.p0) : "") << ','
      << c.resolved_levels() << ',' << (c.level_dependent ? "ldd" : "fixed") << ',' << s.runs
      << ',' << s.ok << ',' << s.excluded << ',' << (s.ok ? fmt("%.12g", s.mean) : "") << ','
      << (s.ok > 1 ? fmt("%.12g", s.std_dev) : "") << ','
      << (s.reference ? fmt("%.12g", *s.reference) : "") << ','
      << (s.rel_rmse ? fmt("%.12g", *s.rel_rmse) : "") << ','
      << (s.ok ? fmt("%.12g", s.mean_cost_units) : "");
  return out.str();
}

}  // namespace mlsis
