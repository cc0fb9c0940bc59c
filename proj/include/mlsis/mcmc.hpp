#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlsis/distributions.hpp"
#include "mlsis/model.hpp"
#include "mlsis/rng.hpp"

namespace mlsis {

/// Population standard deviation over mean.
double cov_of_weights(std::span<const double> weights);

/// Same for weights given as logs; invariant to a common shift. -inf entries
/// are zero weights.
double cov_of_log_weights(std::span<const double> log_weights);

/// log of the mean of exp(log_weights), computed without overflow.
double log_mean_exp(std::span<const double> log_weights);

/// `count` i.i.d. categorical draws proportional to the weights.
std::vector<std::size_t> resample_multinomial(std::span<const double> weights, std::size_t count,
                                              Rng& rng);

/// A state in the sampler with its cached limit-state values. `g` belongs to
/// the level the state lives on; `g_alt` to the companion (previous) level
/// when a target needs both.
struct ChainPoint {
  Vector u;
  double g = 0.0;
  double g_alt = 0.0;
};

/// Target density up to a constant, written as factor(u) * phi_n(u).
class SmoothedTarget {
 public:
  enum class Kind { Tempering, Bridging, Indicator };

  /// Phi(-G_l / sigma) phi_n.
  static SmoothedTarget tempering(const LimitStateModel& model, int level, double sigma);

  /// Phi(-G_{l+1}/sigma)^beta Phi(-G_l/sigma)^(1-beta) phi_n on R^{n_{l+1}}.
  /// `g` caches G_{l+1}, `g_alt` caches G_l.
  static SmoothedTarget bridging(const LimitStateModel& model, int coarse_level, double sigma,
                                 double beta);

  /// I(G_l <= threshold) phi_n. With companion_level > 0, G at that level is
  /// also evaluated and stored in `g_alt`.
  static SmoothedTarget indicator(const LimitStateModel& model, int level, double threshold,
                                  int companion_level = 0);

  Kind kind() const { return kind_; }
  int level() const { return level_; }
  int companion_level() const { return companion_level_; }
  std::size_t dim() const;
  double sigma() const { return sigma_; }
  double beta() const { return beta_; }
  double threshold() const { return threshold_; }

  /// log factor from cached values; -inf outside an indicator domain.
  double log_factor(double g, double g_alt) const;
  double log_factor(const ChainPoint& p) const { return log_factor(p.g, p.g_alt); }

  /// Evaluates the model(s) at u.
  ChainPoint evaluate(Vector u, EvalCounter& counter) const;

 private:
  SmoothedTarget() = default;

  const LimitStateModel* model_ = nullptr;
  Kind kind_ = Kind::Tempering;
  int level_ = 1;
  int companion_level_ = 0;
  double sigma_ = 1.0;
  double beta_ = 1.0;
  double threshold_ = 0.0;
};

struct KernelStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

/// Proposal mechanism for Metropolis-Hastings. A kernel is prepared once per
/// move and then shared read-only by all chains of an adaptation batch.
class MarkovKernel {
 public:
  virtual ~MarkovKernel() = default;

  virtual std::string name() const = 0;

  /// Weighted ensemble before resampling; columns are samples.
  virtual void fit(const Eigen::MatrixXd& samples, std::span<const double> weights);
  /// The seeds and the chain target, before any chain runs.
  virtual void prepare(const Eigen::MatrixXd& seeds, const SmoothedTarget& target);
  /// Number of chains per adaptation batch.
  virtual std::size_t batch_size(std::size_t n_chains) const { return n_chains; }
  /// Called after each batch with its acceptance rate; batch_index is 1-based.
  virtual void adapt(double acceptance_rate, std::size_t batch_index);

  virtual Vector propose(const Vector& current, Rng& rng) const = 0;
  /// log q(current | proposal) - log q(proposal | current) plus the log ratio
  /// phi_n(proposal) / phi_n(current).
  virtual double log_correction(const Vector& current, const Vector& proposal) const = 0;
};

/// Adaptive conditional sampling: component-wise pCN proposals with
/// correlations derived from the seed spread and a scale adapted towards
/// 44% acceptance.
class AcsKernel final : public MarkovKernel {
 public:
  static constexpr double kTargetAcceptance = 0.44;
  static constexpr double kInitialScale = 0.6;
  static constexpr double kMinRho = 0.001;
  static constexpr double kMaxRho = 0.999;

  explicit AcsKernel(double adaptation_fraction = 0.1);

  std::string name() const override { return "acs"; }
  void prepare(const Eigen::MatrixXd& seeds, const SmoothedTarget& target) override;
  std::size_t batch_size(std::size_t n_chains) const override;
  void adapt(double acceptance_rate, std::size_t batch_index) override;
  Vector propose(const Vector& current, Rng& rng) const override;
  double log_correction(const Vector&, const Vector&) const override { return 0.0; }

  double scale() const { return scale_; }
  const Vector& rho() const { return rho_; }
  /// Fixes rho for every coordinate and disables adaptation.
  void set_fixed_rho(double rho);

 private:
  void update_rho();

  double adaptation_fraction_;
  double scale_ = kInitialScale;
  bool fixed_ = false;
  Vector seed_std_;
  Vector rho_;
};

/// Independent proposals from a vMFN law fitted to the weighted ensemble.
class VmfnKernel final : public MarkovKernel {
 public:
  VmfnKernel() = default;
  explicit VmfnKernel(VmfnParams params);

  std::string name() const override { return "vmfn"; }
  void fit(const Eigen::MatrixXd& samples, std::span<const double> weights) override;
  Vector propose(const Vector& current, Rng& rng) const override;
  double log_correction(const Vector& current, const Vector& proposal) const override;

  const VmfnParams& params() const { return params_; }
  double log_density(const Vector& u) const;

 private:
  void set_params(VmfnParams params);

  VmfnParams params_;
  double log_normalizer_ = 0.0;
  bool fitted_ = false;
};

enum class KernelKind { Acs, Vmfn };

std::unique_ptr<MarkovKernel> make_kernel(KernelKind kind);
KernelKind parse_kernel(const std::string& name);
std::string to_string(KernelKind kind);

/// One Metropolis-Hastings chain. Simulates burn_in + length steps from the
/// seed and returns the last `length` states. Only proposals are evaluated.
std::vector<ChainPoint> mh_chain(const ChainPoint& seed, const MarkovKernel& kernel,
                                 const SmoothedTarget& target, std::size_t length,
                                 std::size_t burn_in, Rng& rng, EvalCounter& counter,
                                 KernelStats* stats = nullptr);

struct ChainOptions {
  std::size_t length = 1;
  std::size_t burn_in = 0;
  unsigned threads = 1;
};

/// Runs one chain per seed, in adaptation batches, and concatenates the
/// chains in seed order. Chain k draws from Rng::substream(stream_seed, k).
std::vector<ChainPoint> run_chains(const std::vector<ChainPoint>& seeds, MarkovKernel& kernel,
                                   const SmoothedTarget& target, const ChainOptions& options,
                                   std::uint64_t stream_seed, EvalCounter& counter,
                                   KernelStats* stats = nullptr);

/// Samples as matrix columns.
Eigen::MatrixXd as_matrix(const std::vector<ChainPoint>& points);

/// Appends delta_n fresh N(0,1) coordinates to every sample.
void extend_dimension(std::vector<ChainPoint>& points, std::size_t delta_n, Rng& rng);
Eigen::MatrixXd extend_dimension(const Eigen::MatrixXd& samples, std::size_t delta_n, Rng& rng);

}  // namespace mlsis
