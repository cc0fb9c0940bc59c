#include "mlsis/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mlsis/errors.hpp"
#include "mlsis/parallel.hpp"

namespace mlsis {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double cov_of_weights(std::span<const double> weights) {
  if (weights.empty()) throw InvalidArgument("cov_of_weights: no weights");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("cov_of_weights: weights must be finite and non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw DegenerateWeights("cov_of_weights: all weights are zero");
  const double n = static_cast<double>(weights.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double w : weights) ss += (w - mean) * (w - mean);
  return std::sqrt(ss / n) / mean;
}

double cov_of_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) throw InvalidArgument("cov_of_log_weights: no weights");
  double top = -kInf;
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == kInf) throw DegenerateWeights("cov_of_log_weights: bad weight");
    top = std::max(top, lw);
  }
  if (top == -kInf) throw DegenerateWeights("cov_of_log_weights: all weights are zero");
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - top);
  return cov_of_weights(w);
}

double log_mean_exp(std::span<const double> log_weights) {
  if (log_weights.empty()) throw InvalidArgument("log_mean_exp: no weights");
  double top = -kInf;
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == kInf) throw DegenerateWeights("log_mean_exp: bad weight");
    top = std::max(top, lw);
  }
  if (top == -kInf) return -kInf;
  double sum = 0.0;
  for (double lw : log_weights) sum += std::exp(lw - top);
  return top + std::log(sum / static_cast<double>(log_weights.size()));
}

std::vector<std::size_t> resample_multinomial(std::span<const double> weights, std::size_t count,
                                              Rng& rng) {
  if (count == 0) throw InvalidArgument("resample_multinomial: count must be >= 1");
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] >= 0.0) || !std::isfinite(weights[k])) {
      throw InvalidArgument("resample_multinomial: weights must be finite and non-negative");
    }
    total += weights[k];
    cumulative[k] = total;
  }
  if (!(total > 0.0)) throw DegenerateWeights("resample_multinomial: all weights are zero");
  std::vector<std::size_t> out(count);
  for (auto& idx : out) {
    const double x = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    idx = static_cast<std::size_t>(it - cumulative.begin());
    // Never land on a trailing zero-weight entry because of rounding in x.
    if (idx >= weights.size()) idx = weights.size() - 1;
    while (weights[idx] == 0.0) --idx;
  }
  return out;
}

SmoothedTarget SmoothedTarget::tempering(const LimitStateModel& model, int level, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("tempering target: sigma must be > 0");
  SmoothedTarget t;
  t.model_ = &model;
  t.kind_ = Kind::Tempering;
  t.level_ = level;
  t.sigma_ = sigma;
  return t;
}

SmoothedTarget SmoothedTarget::bridging(const LimitStateModel& model, int coarse_level,
                                        double sigma, double beta) {
  if (!(sigma > 0.0)) throw InvalidArgument("bridging target: sigma must be > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("bridging target: beta not in [0,1]");
  if (coarse_level < 1 || coarse_level >= model.max_level()) {
    throw InvalidArgument("bridging target: no finer level to bridge to");
  }
  SmoothedTarget t;
  t.model_ = &model;
  t.kind_ = Kind::Bridging;
  t.level_ = coarse_level + 1;
  t.companion_level_ = coarse_level;
  t.sigma_ = sigma;
  t.beta_ = beta;
  return t;
}

SmoothedTarget SmoothedTarget::indicator(const LimitStateModel& model, int level,
                                         double threshold, int companion_level) {
  if (companion_level < 0 || companion_level > model.max_level() ||
      (companion_level > 0 && model.dim(companion_level) > model.dim(level))) {
    throw InvalidArgument("indicator target: invalid companion level");
  }
  SmoothedTarget t;
  t.model_ = &model;
  t.kind_ = Kind::Indicator;
  t.level_ = level;
  t.companion_level_ = companion_level;
  t.threshold_ = threshold;
  return t;
}

std::size_t SmoothedTarget::dim() const { return model_->dim(level_); }

double SmoothedTarget::log_factor(double g, double g_alt) const {
  switch (kind_) {
    case Kind::Tempering:
      return std_normal_log_cdf(-g / sigma_);
    case Kind::Bridging: {
      double out = 0.0;
      if (beta_ > 0.0) out += beta_ * std_normal_log_cdf(-g / sigma_);
      if (beta_ < 1.0) out += (1.0 - beta_) * std_normal_log_cdf(-g_alt / sigma_);
      return out;
    }
    case Kind::Indicator:
      return g <= threshold_ ? 0.0 : -kInf;
  }
  throw InternalError("SmoothedTarget: unknown kind");
}

ChainPoint SmoothedTarget::evaluate(Vector u, EvalCounter& counter) const {
  ChainPoint p;
  p.g = model_->evaluate(u, level_, counter);
  if (companion_level_ > 0) {
    const auto n = static_cast<Eigen::Index>(model_->dim(companion_level_));
    p.g_alt = model_->evaluate(u.head(n), companion_level_, counter);
  }
  p.u = std::move(u);
  return p;
}

void MarkovKernel::fit(const Eigen::MatrixXd&, std::span<const double>) {}
void MarkovKernel::prepare(const Eigen::MatrixXd&, const SmoothedTarget&) {}
void MarkovKernel::adapt(double, std::size_t) {}

AcsKernel::AcsKernel(double adaptation_fraction) : adaptation_fraction_(adaptation_fraction) {
  if (!(adaptation_fraction > 0.0 && adaptation_fraction <= 1.0)) {
    throw InvalidArgument("AcsKernel: adaptation fraction must be in (0, 1]");
  }
}

void AcsKernel::prepare(const Eigen::MatrixXd& seeds, const SmoothedTarget&) {
  if (seeds.cols() == 0) throw InvalidArgument("AcsKernel: no seeds");
  const Vector mean = seeds.rowwise().mean();
  seed_std_ = ((seeds.colwise() - mean).array().square().rowwise().sum() /
               static_cast<double>(seeds.cols()))
                  .sqrt();
  if (!fixed_) update_rho();
}

std::size_t AcsKernel::batch_size(std::size_t n_chains) const {
  const auto b = static_cast<std::size_t>(
      std::floor(adaptation_fraction_ * static_cast<double>(n_chains)));
  return std::max<std::size_t>(1, b);
}

void AcsKernel::adapt(double acceptance_rate, std::size_t batch_index) {
  if (fixed_) return;
  scale_ *= std::exp((acceptance_rate - kTargetAcceptance) /
                     std::sqrt(static_cast<double>(batch_index)));
  update_rho();
}

void AcsKernel::update_rho() {
  rho_.resize(seed_std_.size());
  for (Eigen::Index d = 0; d < seed_std_.size(); ++d) {
    const double s = std::min(scale_ * seed_std_[d], 1.0);
    rho_[d] = std::clamp(std::sqrt(1.0 - s * s), kMinRho, kMaxRho);
  }
}

void AcsKernel::set_fixed_rho(double rho) {
  if (!(rho >= kMinRho && rho <= kMaxRho)) throw InvalidArgument("AcsKernel: rho out of range");
  fixed_ = true;
  rho_ = Vector::Constant(std::max<Eigen::Index>(seed_std_.size(), 1), rho);
}

Vector AcsKernel::propose(const Vector& current, Rng& rng) const {
  Vector out(current.size());
  const bool scalar = fixed_ && rho_.size() != current.size();
  if (!scalar && rho_.size() != current.size()) {
    throw InvalidArgument("AcsKernel: prepare() was not called for this dimension");
  }
  for (Eigen::Index d = 0; d < current.size(); ++d) {
    const double r = scalar ? rho_[0] : rho_[d];
    out[d] = r * current[d] + std::sqrt(1.0 - r * r) * rng.normal();
  }
  return out;
}

VmfnKernel::VmfnKernel(VmfnParams params) { set_params(std::move(params)); }

void VmfnKernel::set_params(VmfnParams params) {
  params.validate();
  params_ = std::move(params);
  log_normalizer_ = vmf_log_normalizer(params_.dim(), params_.kappa);
  fitted_ = true;
}

void VmfnKernel::fit(const Eigen::MatrixXd& samples, std::span<const double> weights) {
  set_params(fit_vmfn(samples, weights));
}

double VmfnKernel::log_density(const Vector& u) const {
  const double r = u.norm();
  if (!(r > 0.0)) return -kInf;
  return nakagami_log_density(r, params_.shape, params_.spread) + log_normalizer_ +
         params_.kappa * params_.nu.dot(u) / r - static_cast<double>(u.size() - 1) * std::log(r);
}

Vector VmfnKernel::propose(const Vector&, Rng& rng) const {
  if (!fitted_) throw InvalidArgument("VmfnKernel: not fitted");
  return sample_vmfn(params_, rng);
}

double VmfnKernel::log_correction(const Vector& current, const Vector& proposal) const {
  return (std_normal_log_density(proposal) - log_density(proposal)) -
         (std_normal_log_density(current) - log_density(current));
}

std::unique_ptr<MarkovKernel> make_kernel(KernelKind kind) {
  if (kind == KernelKind::Acs) return std::make_unique<AcsKernel>();
  return std::make_unique<VmfnKernel>();
}

KernelKind parse_kernel(const std::string& name) {
  if (name == "acs") return KernelKind::Acs;
  if (name == "vmfn") return KernelKind::Vmfn;
  throw InvalidArgument("unknown kernel '" + name + "' (expected acs or vmfn)");
}

std::string to_string(KernelKind kind) { return kind == KernelKind::Acs ? "acs" : "vmfn"; }

std::vector<ChainPoint> mh_chain(const ChainPoint& seed, const MarkovKernel& kernel,
                                 const SmoothedTarget& target, std::size_t length,
                                 std::size_t burn_in, Rng& rng, EvalCounter& counter,
                                 KernelStats* stats) {
  std::vector<ChainPoint> out;
  out.reserve(length);
  ChainPoint current = seed;
  double current_log = target.log_factor(current);
  for (std::size_t i = 0; i < burn_in + length; ++i) {
    ChainPoint proposal = target.evaluate(kernel.propose(current.u, rng), counter);
    const double proposal_log = target.log_factor(proposal);
    const double log_alpha =
        proposal_log - current_log + kernel.log_correction(current.u, proposal.u);
    const double log_u = std::log(rng.uniform());
    if (stats) ++stats->proposals;
    if (proposal_log > -kInf && !std::isnan(log_alpha) && log_u < log_alpha) {
      current = std::move(proposal);
      current_log = proposal_log;
      if (stats) ++stats->accepted;
    }
    if (i >= burn_in) out.push_back(current);
  }
  return out;
}

std::vector<ChainPoint> run_chains(const std::vector<ChainPoint>& seeds, MarkovKernel& kernel,
                                   const SmoothedTarget& target, const ChainOptions& options,
                                   std::uint64_t stream_seed, EvalCounter& counter,
                                   KernelStats* stats) {
  if (seeds.empty()) throw InvalidArgument("run_chains: no seeds");
  if (options.length == 0) throw InvalidArgument("run_chains: chain length must be >= 1");
  kernel.prepare(as_matrix(seeds), target);
  const std::size_t n_chains = seeds.size();
  const std::size_t batch = kernel.batch_size(n_chains);
  std::vector<std::vector<ChainPoint>> chains(n_chains);
  std::vector<KernelStats> chain_stats(n_chains);
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < n_chains; start += batch) {
    const std::size_t stop = std::min(n_chains, start + batch);
    parallel_for(stop - start, options.threads, [&](std::size_t i) {
      const std::size_t k = start + i;
      Rng rng = Rng::substream(stream_seed, k);
      chains[k] = mh_chain(seeds[k], kernel, target, options.length, options.burn_in, rng,
                           counter, &chain_stats[k]);
    });
    KernelStats batch_stats;
    for (std::size_t k = start; k < stop; ++k) {
      batch_stats.proposals += chain_stats[k].proposals;
      batch_stats.accepted += chain_stats[k].accepted;
    }
    kernel.adapt(batch_stats.acceptance_rate(), ++batch_index);
  }
  std::vector<ChainPoint> out;
  out.reserve(n_chains * options.length);
  for (auto& chain : chains) {
    for (auto& p : chain) out.push_back(std::move(p));
  }
  if (stats) {
    for (const auto& s : chain_stats) {
      stats->proposals += s.proposals;
      stats->accepted += s.accepted;
    }
  }
  return out;
}

Eigen::MatrixXd as_matrix(const std::vector<ChainPoint>& points) {
  if (points.empty()) return {};
  Eigen::MatrixXd m(points.front().u.size(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].u.size() != m.rows()) throw InvalidArgument("as_matrix: ragged samples");
    m.col(static_cast<Eigen::Index>(k)) = points[k].u;
  }
  return m;
}

void extend_dimension(std::vector<ChainPoint>& points, std::size_t delta_n, Rng& rng) {
  if (delta_n == 0) return;
  for (auto& p : points) {
    const Eigen::Index old = p.u.size();
    p.u.conservativeResize(old + static_cast<Eigen::Index>(delta_n));
    for (Eigen::Index d = old; d < p.u.size(); ++d) p.u[d] = rng.normal();
  }
}

Eigen::MatrixXd extend_dimension(const Eigen::MatrixXd& samples, std::size_t delta_n, Rng& rng) {
  Eigen::MatrixXd out(samples.rows() + static_cast<Eigen::Index>(delta_n), samples.cols());
  out.topRows(samples.rows()) = samples;
  for (Eigen::Index k = 0; k < samples.cols(); ++k) {
    for (Eigen::Index d = samples.rows(); d < out.rows(); ++d) out(d, k) = rng.normal();
  }
  return out;
}

}  // namespace mlsis
