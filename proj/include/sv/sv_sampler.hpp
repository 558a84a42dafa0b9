#ifndef SV_SV_SAMPLER_HPP
#define SV_SV_SAMPLER_HPP

#include <memory>

#include <Eigen/Dense>

#include "sv/design.hpp"
#include "sv/mixture.hpp"
#include "sv/prior_spec.hpp"
#include "sv/rng.hpp"
#include "sv/sv_kernel.hpp"
#include "sv/sv_types.hpp"

namespace sv {

/// Single-chain Gibbs state machine for the sv/svt/svl/svtl family.
/// Leverage machinery is engaged only when rho is not fixed at zero.
class SvSampler {
 public:
  SvSampler(Eigen::VectorXd y, Eigen::MatrixXd X, ModelKind kind, PriorSpec priors, double offset = 1e-8,
            int asis_passes = 1);
  SvSampler(const SvSampler&) = delete;
  SvSampler& operator=(const SvSampler&) = delete;

  /// Default start values (OLS beta, conjugate mu, prior means elsewhere).
  void initialize();
  void set_state(const SvParams& p, const LatentPath& path, const Eigen::VectorXd& tau);
  /// Replaces the response, keeping the current state (used by the Geweke harness).
  void set_response(const Eigen::VectorXd& y);
  void set_mask(const StepMask& mask);

  void sweep(RngStream& rng, bool adapt);

  const SvParams& params() const { return params_; }
  const LatentPath& latent() const { return path_; }
  const Eigen::VectorXd& tau() const { return tau_; }
  const Eigen::VectorXd& response() const { return y_; }
  const Eigen::MatrixXd& design() const { return X_; }
  const PriorSpec& priors() const { return priors_; }
  ModelKind kind() const { return kind_; }
  bool leverage_active() const { return leverage_; }
  /// Standardized residual at the last time point.
  double eps_last() const;

  AcceptanceStats centered_stats() const;
  AcceptanceStats noncentered_stats() const;
  const AcceptanceStats& nu_stats() const { return nu_stats_; }
  double nu_step() const { return nu_step_; }

 private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd X_;
  ModelKind kind_;
  PriorSpec priors_;
  double offset_;
  int asis_passes_;
  bool leverage_;
  bool t_errors_;
  StepMask mask_;
  SvParams params_;
  LatentPath path_;
  Eigen::VectorXd tau_;
  std::unique_ptr<LeverageUpdater> updater_;
  double nu_step_ = 0.5;
  AcceptanceStats nu_stats_;
  AcceptanceStats nu_window_;
};

/// Runs burnin + draws sweeps per chain and stores thinned output.
/// Chains use stream ids 0..chains-1 and are spread over config.threads threads.
SvDraws run_sampler(const Design& design, ModelKind kind, const PriorSpec& priors, const SamplerConfig& config);

/// Validates the sampler configuration; throws ConfigError.
void validate(const SamplerConfig& config);

}  // namespace sv

#endif  // SV_SV_SAMPLER_HPP
