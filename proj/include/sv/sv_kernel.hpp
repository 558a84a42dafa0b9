#ifndef SV_SV_KERNEL_HPP
#define SV_SV_KERNEL_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sv/mixture.hpp"
#include "sv/prior_spec.hpp"
#include "sv/rng.hpp"
#include "sv/sv_types.hpp"

namespace sv {

/// Symmetric tridiagonal precision (diag, off) and linear term of the
/// conditionally Gaussian posterior of (h0, h_1, ..., h_n).
struct LatentSystem {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;
  Eigen::VectorXd linear;
};

/// Prior variance of h0.
double latent0_variance(const SvParams& p, const Latent0Variance& spec);

std::pair<SvParams, LatentPath> init_start_values(const Eigen::Ref<const Eigen::VectorXd>& y,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                                  const PriorSpec& priors, double offset = 1e-8);

LatentSystem build_latent_system(const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                                 const SvParams& p, const Latent0Variance& latent0, const MixtureTable& table);

LatentPath draw_latent_awol(const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                            const SvParams& p, const Latent0Variance& latent0, const MixtureTable& table,
                            RngStream& rng);

/// Leverage variant: `sign` holds the sign of each standardized residual.
LatentSystem build_leverage_system(const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                                   const Eigen::Ref<const Eigen::VectorXd>& sign, const SvParams& p,
                                   const Latent0Variance& latent0, const MixtureTable& table);

LatentPath draw_latent_leverage(const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                                const Eigen::Ref<const Eigen::VectorXd>& sign, const SvParams& p,
                                const Latent0Variance& latent0, const MixtureTable& table, RngStream& rng);

/// Indicators under leverage: the weights also carry the density of h_{t+1}
/// given h_t and the component.
Eigen::VectorXi draw_indicators_leverage(const Eigen::Ref<const Eigen::VectorXd>& ystar,
                                         const Eigen::Ref<const Eigen::VectorXd>& sign, const LatentPath& path,
                                         const SvParams& p, const MixtureTable& table, RngStream& rng);

/// Centered update of (mu, phi, sigma) given the path.
void draw_params_centered(const LatentPath& path, SvParams& p, const PriorSpec& priors, RngStream& rng,
                          const StepMask& mask = {});

/// Noncentered update of (mu, sigma) given the standardized path; rewrites the path.
void draw_params_noncentered(LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& ystar,
                             const Eigen::VectorXi& s, SvParams& p, const PriorSpec& priors,
                             const MixtureTable& table, RngStream& rng, const StepMask& mask = {});

/// Centered draw followed by a noncentered redraw (interweaving).
void draw_sv_params_asis(LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                         SvParams& p, const PriorSpec& priors, const MixtureTable& table, RngStream& rng,
                         const StepMask& mask = {});

/// tau_t from InverseGamma((nu+1)/2, (nu-2+e_t^2)/2), e_t = resid_t exp(-h_t/2).
Eigen::VectorXd draw_tail_latents(const Eigen::Ref<const Eigen::VectorXd>& resid,
                                  const Eigen::Ref<const Eigen::VectorXd>& h, const SvParams& p, RngStream& rng);

/// Leverage variant: the no-leverage conditional serves as an independence proposal.
Eigen::VectorXd draw_tail_latents_leverage(const Eigen::Ref<const Eigen::VectorXd>& resid, const LatentPath& path,
                                           const Eigen::Ref<const Eigen::VectorXd>& tau, const SvParams& p,
                                           RngStream& rng);

/// Log of p(nu | tau) up to a constant.
double nu_log_posterior(const Eigen::Ref<const Eigen::VectorXd>& tau, double nu, const PriorSpec& priors);

/// Random walk on log(nu - 2) with step `log_step`.
double draw_nu(const Eigen::Ref<const Eigen::VectorXd>& tau, double nu, const PriorSpec& priors, double log_step,
               RngStream& rng, bool* accepted = nullptr);

/// Conjugate regression draw; uses the leverage-adjusted response when p.rho != 0.
Eigen::VectorXd draw_beta(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& tau, const SvParams& p,
                          const dist::MultivariateNormal& prior, RngStream& rng);

/// Exact log p(h, y | zeta) + log prior in the centered parameterization.
double leverage_log_target_centered(const LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& eps,
                                    const SvParams& p, const PriorSpec& priors);

/// Exact log p(y, htilde | zeta) + log prior in the noncentered parameterization;
/// `scaled_resid` is resid / sqrt(tau).
double leverage_log_target_noncentered(double htilde0, const Eigen::Ref<const Eigen::VectorXd>& htilde,
                                       const Eigen::Ref<const Eigen::VectorXd>& scaled_resid, const SvParams& p,
                                       const PriorSpec& priors);

/// Adaptive random-walk Metropolis on the unconstrained free coordinates of
/// (mu, atanh phi, log sigma, atanh rho). Adaptation runs only when requested.
class LeverageUpdater {
 public:
  explicit LeverageUpdater(const PriorSpec& priors, const StepMask& mask = {});

  /// One centered step and one noncentered step per pass.
  void update(LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& resid,
              const Eigen::Ref<const Eigen::VectorXd>& tau, SvParams& p, RngStream& rng, bool adapt, int passes = 1);

  const AcceptanceStats& centered_stats() const { return centered_.stats; }
  const AcceptanceStats& noncentered_stats() const { return noncentered_.stats; }
  int dimension() const { return static_cast<int>(free_.size()); }

 private:
  struct Walker {
    Eigen::MatrixXd chol;
    double log_scale = 0.0;
    long steps = 0;
    Eigen::VectorXd sum;
    Eigen::MatrixXd sum_sq;
    long samples = 0;
    AcceptanceStats stats;
  };

  Eigen::VectorXd to_free(const SvParams& p) const;
  void from_free(const Eigen::VectorXd& u, SvParams& p) const;
  double log_jacobian(const SvParams& p) const;
  void step(Walker& w, SvParams& p, RngStream& rng, bool adapt, const std::function<double(const SvParams&)>& target);
  void adapt_walker(Walker& w, const Eigen::VectorXd& u, double accept_prob);

  const PriorSpec* priors_;
  std::vector<int> free_;
  bool phi_unbounded_ = false;
  Walker centered_;
  Walker noncentered_;
};

}  // namespace sv

#endif  // SV_SV_KERNEL_HPP
