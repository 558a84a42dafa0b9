#include "sv/simulate.hpp"

#include <cmath>

#include "sv/distribution.hpp"
#include "sv/errors.hpp"
#include "sv/sv_kernel.hpp"

namespace sv {

SimulatedSeries simulate_sv(const SvParams& p, Eigen::Index n, const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Latent0Variance& latent0, RngStream& rng) {
  if (X.cols() > 0 && X.rows() != n) throw DimensionError("design rows do not match n");
  if (X.cols() != p.beta.size()) throw DimensionError("beta length does not match design columns");
  SimulatedSeries out;
  out.latent.h0 = rng.normal(p.mu, std::sqrt(latent0_variance(p, latent0)));
  out.latent.h.resize(n);
  out.tau = Eigen::VectorXd::Ones(n);
  if (std::isfinite(p.nu)) {
    for (Eigen::Index t = 0; t < n; ++t) out.tau(t) = rng.inverse_gamma(0.5 * p.nu, 0.5 * (p.nu - 2.0));
  }
  double prev = out.latent.h0;
  for (Eigen::Index t = 0; t < n; ++t) {
    out.latent.h(t) = p.mu + p.phi * (prev - p.mu) + p.sigma * rng.normal();
    prev = out.latent.h(t);
  }
  out.y = simulate_response(out.latent, out.tau, p, X, rng);
  return out;
}

Eigen::VectorXd simulate_response(const LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& tau,
                                  const SvParams& p, const Eigen::Ref<const Eigen::MatrixXd>& X, RngStream& rng) {
  const Eigen::Index n = path.h.size();
  Eigen::VectorXd y(n);
  const double cond_sd = std::sqrt(1.0 - p.rho * p.rho);
  for (Eigen::Index t = 0; t < n; ++t) {
    double eps = rng.normal();
    if (p.rho != 0.0 && t + 1 < n) {
      const double eta = (path.h(t + 1) - p.mu - p.phi * (path.h(t) - p.mu)) / p.sigma;
      eps = p.rho * eta + cond_sd * eps;
    }
    y(t) = std::exp(0.5 * path.h(t)) * std::sqrt(tau(t)) * eps;
    if (X.cols() > 0) y(t) += X.row(t).dot(p.beta);
  }
  return y;
}

SvParams draw_prior_params(const PriorSpec& priors, Eigen::Index k, RngStream& rng) {
  SvParams p;
  p.mu = draw(priors.mu, rng);
  p.phi = draw(priors.phi, rng);
  p.sigma = std::sqrt(draw(priors.sigma2, rng));
  p.nu = is_infinity(priors.nu) ? std::numeric_limits<double>::infinity()
         : is_constant(priors.nu) ? constant_value(priors.nu)
                                  : 2.0 + draw(priors.nu, rng);
  p.rho = draw(priors.rho, rng);
  p.beta = k > 0 ? draw(priors.beta.resized(k), rng) : Eigen::VectorXd(0);
  return p;
}

}  // namespace sv
