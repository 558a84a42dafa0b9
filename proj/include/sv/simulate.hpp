#ifndef SV_SIMULATE_HPP
#define SV_SIMULATE_HPP

#include <Eigen/Dense>

#include "sv/prior_spec.hpp"
#include "sv/rng.hpp"
#include "sv/sv_types.hpp"

namespace sv {

struct SimulatedSeries {
  Eigen::VectorXd y;
  LatentPath latent;
  Eigen::VectorXd tau;
};

/// Draws (h0, h, tau, y) from the model with the given parameters. X may have
/// zero columns; otherwise it needs n rows. nu = +infinity gives Gaussian errors.
SimulatedSeries simulate_sv(const SvParams& p, Eigen::Index n, const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Latent0Variance& latent0, RngStream& rng);

/// Draws y given the full latent state: for t < n the error is correlated
/// with the innovation that moves h_t to h_{t+1}.
Eigen::VectorXd simulate_response(const LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& tau,
                                  const SvParams& p, const Eigen::Ref<const Eigen::MatrixXd>& X, RngStream& rng);

/// Draws parameters and latent state from the prior (beta has X.cols() entries).
SvParams draw_prior_params(const PriorSpec& priors, Eigen::Index k, RngStream& rng);

}  // namespace sv

#endif  // SV_SIMULATE_HPP
