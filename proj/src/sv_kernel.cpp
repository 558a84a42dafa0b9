#include "sv/sv_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "sv/errors.hpp"
#include "sv/tridiag.hpp"

namespace sv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_normal(double x, double mean, double var) {
  const double r = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * r * r / var;
}

bool is_free(const Distribution& d) { return !is_constant(d); }

double prior_term(const Distribution& d, double x) { return is_constant(d) ? 0.0 : log_density(d, x); }

// Full path (h0, h_1, ..., h_n) as one vector.
Eigen::VectorXd stacked(const LatentPath& path) {
  Eigen::VectorXd H(path.h.size() + 1);
  H(0) = path.h0;
  H.tail(path.h.size()) = path.h;
  return H;
}

void unstack(const Eigen::VectorXd& H, LatentPath& path) {
  path.h0 = H(0);
  path.h = H.tail(H.size() - 1);
}

bool phi_admissible(double phi, const PriorSpec& priors) {
  if (!std::isfinite(phi)) return false;
  if (priors.latent0_variance.stationary || std::holds_alternative<dist::TranslatedBeta>(priors.phi)) {
    return std::abs(phi) < 1.0;
  }
  return true;
}

// log N(h0; mu, V0) in the centered parameterization.
double h0_term(double h0, const SvParams& p, const Latent0Variance& spec) {
  return log_normal(h0, p.mu, latent0_variance(p, spec));
}

// Log density of sigma extended symmetrically to the real line.
double sigma_ext_log_prior(const Distribution& sigma2, double sigma) {
  return log_density(sigma2, sigma * sigma) + std::log(std::abs(sigma));
}

bool half_normal_sigma(const Distribution& sigma2, double* b_sigma) {
  if (const auto* g = std::get_if<dist::Gamma>(&sigma2); g && g->shape == 0.5) {
    *b_sigma = 0.5 / g->rate;
    return true;
  }
  return false;
}

Eigen::VectorXd mvn_draw(const Eigen::MatrixXd& precision, const Eigen::VectorXd& linear, RngStream& rng,
                         Eigen::VectorXd* mean_out = nullptr) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericError("posterior precision is not positive definite");
  Eigen::VectorXd mean = llt.solve(linear);
  Eigen::VectorXd z(linear.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  if (mean_out) *mean_out = mean;
  return mean + llt.matrixU().solve(z);
}

}  // namespace

double latent0_variance(const SvParams& p, const Latent0Variance& spec) {
  if (!spec.stationary) return spec.value;
  return p.sigma * p.sigma / (1.0 - p.phi * p.phi);
}

std::pair<SvParams, LatentPath> init_start_values(const Eigen::Ref<const Eigen::VectorXd>& y,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                                  const PriorSpec& priors, double offset) {
  const Eigen::Index n = y.size();
  if (n == 0) throw DataError("cannot initialize from empty data");
  if (X.rows() != n) throw DimensionError("design matrix rows do not match observations");
  SvParams p;
  p.beta = Eigen::VectorXd::Zero(X.cols());
  if (X.cols() > 0) {
    if (n < X.cols()) throw DataError("fewer observations than regressors");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) throw DataError("design matrix is rank deficient");
    p.beta = qr.solve(y);
  }
  const Eigen::VectorXd z = ((y - X * p.beta).array().square() + offset).log();
  if (is_constant(priors.mu)) {
    p.mu = constant_value(priors.mu);
  } else {
    const auto& mu = std::get<dist::Normal>(priors.mu);
    constexpr double xi_mean = -1.27, xi_var = 4.934;
    const double prec = static_cast<double>(n) / xi_var + 1.0 / (mu.sd * mu.sd);
    p.mu = ((z.array() - xi_mean).sum() / xi_var + mu.mean / (mu.sd * mu.sd)) / prec;
  }
  p.phi = mean(priors.phi);
  if (priors.latent0_variance.stationary && std::abs(p.phi) >= 1.0) p.phi = std::copysign(0.95, p.phi);
  p.sigma = prior_mean_sigma(priors.sigma2);
  p.nu = prior_mean_nu(priors.nu);
  p.rho = mean(priors.rho);
  LatentPath path;
  path.h0 = p.mu;
  path.h = Eigen::VectorXd::Constant(n, p.mu);
  return {p, path};
}

LatentSystem build_latent_system(const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                                 const SvParams& p, const Latent0Variance& latent0, const MixtureTable& table) {
  const Eigen::Index n = ystar.size();
  if (s.size() != n) throw DimensionError("indicator and observation lengths differ");
  LatentSystem sys{Eigen::VectorXd::Zero(n + 1), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n + 1)};
  const double v0 = latent0_variance(p, latent0);
  sys.diag(0) += 1.0 / v0;
  sys.linear(0) += p.mu / v0;
  const double inv = 1.0 / (p.sigma * p.sigma);
  const double c = p.mu * (1.0 - p.phi);
  for (Eigen::Index t = 1; t <= n; ++t) {
    sys.diag(t) += inv;
    sys.diag(t - 1) += p.phi * p.phi * inv;
    sys.off(t - 1) -= p.phi * inv;
    sys.linear(t) += c * inv;
    sys.linear(t - 1) -= p.phi * c * inv;
    const int j = s(t - 1);
    sys.diag(t) += 1.0 / table.variances(j);
    sys.linear(t) += (ystar(t - 1) - table.means(j)) / table.variances(j);
  }
  return sys;
}

LatentPath draw_latent_awol(const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                            const SvParams& p, const Latent0Variance& latent0, const MixtureTable& table,
                            RngStream& rng) {
  const auto sys = build_latent_system(ystar, s, p, latent0, table);
  LatentPath out;
  unstack(sample_tridiagonal(sys.diag, sys.off, sys.linear, rng), out);
  return out;
}

LatentSystem build_leverage_system(const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                                   const Eigen::Ref<const Eigen::VectorXd>& sign, const SvParams& p,
                                   const Latent0Variance& latent0, const MixtureTable& table) {
  const Eigen::Index n = ystar.size();
  if (s.size() != n || sign.size() != n) throw DimensionError("leverage inputs have inconsistent lengths");
  LatentSystem sys{Eigen::VectorXd::Zero(n + 1), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n + 1)};
  const double v0 = latent0_variance(p, latent0);
  sys.diag(0) += 1.0 / v0;
  sys.linear(0) += p.mu / v0;
  const double base = p.mu * (1.0 - p.phi);
  const double cond_var = p.sigma * p.sigma * (1.0 - p.rho * p.rho);
  for (Eigen::Index t = 0; t < n; ++t) {
    // Transition from h_t (index t) to h_{t+1} (index t+1).
    double k = p.phi, c = base, var = p.sigma * p.sigma;
    if (t >= 1) {
      const int j = s(t - 1);
      const double scale = p.sigma * p.rho * sign(t - 1) * std::exp(0.5 * table.means(j));
      k = p.phi - scale * table.b(j);
      c = base + scale * (table.a(j) + table.b(j) * (ystar(t - 1) - table.means(j)));
      var = cond_var;
    }
    sys.diag(t + 1) += 1.0 / var;
    sys.diag(t) += k * k / var;
    sys.off(t) -= k / var;
    sys.linear(t + 1) += c / var;
    sys.linear(t) -= k * c / var;
    const int j = s(t);
    sys.diag(t + 1) += 1.0 / table.variances(j);
    sys.linear(t + 1) += (ystar(t) - table.means(j)) / table.variances(j);
  }
  return sys;
}

LatentPath draw_latent_leverage(const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                                const Eigen::Ref<const Eigen::VectorXd>& sign, const SvParams& p,
                                const Latent0Variance& latent0, const MixtureTable& table, RngStream& rng) {
  const auto sys = build_leverage_system(ystar, s, sign, p, latent0, table);
  LatentPath out;
  unstack(sample_tridiagonal(sys.diag, sys.off, sys.linear, rng), out);
  return out;
}

Eigen::VectorXi draw_indicators_leverage(const Eigen::Ref<const Eigen::VectorXd>& ystar,
                                         const Eigen::Ref<const Eigen::VectorXd>& sign, const LatentPath& path,
                                         const SvParams& p, const MixtureTable& table, RngStream& rng) {
  const Eigen::Index n = ystar.size();
  const Eigen::Index k = table.size();
  const double base = p.mu * (1.0 - p.phi);
  const double cond_var = p.sigma * p.sigma * (1.0 - p.rho * p.rho);
  Eigen::VectorXi s(n);
  Eigen::ArrayXd lw(k);
  for (Eigen::Index t = 0; t < n; ++t) {
    if (!std::isfinite(ystar(t))) {
      throw NumericError("non-finite linearized observation at index " + std::to_string(t) + " (offset underflow)");
    }
    const double h = path.h(t);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double r = ystar(t) - h - table.means(j);
      lw(j) = std::log(table.probs(j)) - 0.5 * std::log(table.variances(j)) - 0.5 * r * r / table.variances(j);
      if (t + 1 < n) {
        const double scale = p.sigma * p.rho * sign(t) * std::exp(0.5 * table.means(j));
        const double mean_next = base + p.phi * h + scale * (table.a(j) + table.b(j) * r);
        const double e = path.h(t + 1) - mean_next;
        lw(j) -= 0.5 * e * e / cond_var;
      }
    }
    lw = (lw - lw.maxCoeff()).exp();
    double u = rng.uniform() * lw.sum();
    Eigen::Index j = 0;
    while (j < k - 1 && (u -= lw(j)) > 0.0) ++j;
    s(t) = static_cast<int>(j);
  }
  return s;
}

void draw_params_centered(const LatentPath& path, SvParams& p, const PriorSpec& priors, RngStream& rng,
                          const StepMask& mask) {
  const Eigen::VectorXd H = stacked(path);
  const Eigen::Index n = H.size() - 1;
  if (n < 1) return;
  const auto x = H.head(n).array();
  const auto yv = H.tail(n).array();
  const bool mu_free = mask.mu && is_free(priors.mu);
  const bool phi_free = mask.phi && is_free(priors.phi);
  const bool sigma_free = mask.sigma && is_free(priors.sigma2);
  const auto& l0 = priors.latent0_variance;

  if (sigma_free) {
    const double S = (yv - p.mu * (1.0 - p.phi) - p.phi * x).square().sum();
    const double proposal = rng.inverse_gamma(0.5 * static_cast<double>(n), 0.5 * S);
    const auto weight = [&](double s2) {
      SvParams q = p;
      q.sigma = std::sqrt(s2);
      return log_density(priors.sigma2, s2) + h0_term(H(0), q, l0) + std::log(s2);
    };
    if (std::log(rng.uniform()) < weight(proposal) - weight(p.sigma * p.sigma)) p.sigma = std::sqrt(proposal);
  }

  const double s2 = p.sigma * p.sigma;
  if (mu_free && phi_free) {
    // Independence proposal from the AR(1) regression h_t = gamma + phi h_{t-1}.
    Eigen::Matrix2d ztz;
    ztz << static_cast<double>(n), x.sum(), x.sum(), x.square().sum();
    Eigen::Vector2d zty(yv.sum(), (x * yv).sum());
    Eigen::Matrix2d prec = ztz / s2;
    Eigen::LLT<Eigen::Matrix2d> llt(prec);
    double ridge = 1e-8;
    while (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() < 1e-6) {
      prec = ztz / s2 + ridge * Eigen::Matrix2d::Identity();
      llt.compute(prec);
      ridge *= 100.0;
    }
    const Eigen::Vector2d center = llt.solve(zty / s2);
    const Eigen::Vector2d z(rng.normal(), rng.normal());
    const Eigen::Vector2d prop = center + llt.matrixU().solve(z);
    const auto log_q = [&](const Eigen::Vector2d& v) {
      const Eigen::Vector2d r = llt.matrixU() * (v - center);
      return -0.5 * r.squaredNorm();
    };
    const auto log_target = [&](double gamma, double phi) {
      if (!phi_admissible(phi, priors) || std::abs(1.0 - phi) < 1e-12) return kNegInf;
      SvParams q = p;
      q.phi = phi;
      q.mu = gamma / (1.0 - phi);
      const double lp_phi = log_density(priors.phi, phi);
      if (!std::isfinite(lp_phi)) return kNegInf;
      const double ss = (yv - gamma - phi * x).square().sum();
      return -0.5 * ss / s2 + log_density(priors.mu, q.mu) + lp_phi + h0_term(H(0), q, l0) -
             std::log(std::abs(1.0 - phi));
    };
    const Eigen::Vector2d cur(p.mu * (1.0 - p.phi), p.phi);
    const double lt_new = log_target(prop(0), prop(1));
    if (std::isfinite(lt_new)) {
      const double log_alpha = lt_new - log_target(cur(0), cur(1)) - log_q(prop) + log_q(cur);
      if (std::log(rng.uniform()) < log_alpha) {
        p.phi = prop(1);
        p.mu = prop(0) / (1.0 - prop(1));
      }
    }
  } else if (phi_free) {
    const auto xc = x - p.mu;
    const auto yc = yv - p.mu;
    const double sxx = xc.square().sum();
    if (sxx > 0.0) {
      const double center = (xc * yc).sum() / sxx;
      const double sd = std::sqrt(s2 / sxx);
      const double prop = rng.normal(center, sd);
      const auto log_target = [&](double phi) {
        if (!phi_admissible(phi, priors)) return kNegInf;
        SvParams q = p;
        q.phi = phi;
        const double lp = log_density(priors.phi, phi);
        if (!std::isfinite(lp)) return kNegInf;
        return -0.5 * (yc - phi * xc).square().sum() / s2 + lp + h0_term(H(0), q, l0);
      };
      const auto log_q = [&](double v) { return -0.5 * (v - center) * (v - center) / (sd * sd); };
      const double lt_new = log_target(prop);
      if (std::isfinite(lt_new) &&
          std::log(rng.uniform()) < lt_new - log_target(p.phi) - log_q(prop) + log_q(p.phi)) {
        p.phi = prop;
      }
    }
  } else if (mu_free) {
    const auto& prior = std::get<dist::Normal>(priors.mu);
    const double v0 = latent0_variance(p, l0);
    const double one_m = 1.0 - p.phi;
    const double prec = static_cast<double>(n) * one_m * one_m / s2 + 1.0 / v0 + 1.0 / (prior.sd * prior.sd);
    const double lin = one_m * (yv - p.phi * x).sum() / s2 + H(0) / v0 + prior.mean / (prior.sd * prior.sd);
    p.mu = rng.normal(lin / prec, 1.0 / std::sqrt(prec));
  }
}

void draw_params_noncentered(LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& ystar,
                             const Eigen::VectorXi& s, SvParams& p, const PriorSpec& priors,
                             const MixtureTable& table, RngStream& rng, const StepMask& mask) {
  const bool mu_free = mask.mu && is_free(priors.mu);
  const bool sigma_free = mask.sigma && is_free(priors.sigma2);
  if (!mu_free && !sigma_free) return;
  const Eigen::Index n = ystar.size();
  const auto& l0 = priors.latent0_variance;
  const double h0_tilde = (path.h0 - p.mu) / p.sigma;
  const Eigen::ArrayXd ht = (path.h.array() - p.mu) / p.sigma;
  Eigen::ArrayXd u(n), w(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    u(t) = ystar(t) - table.means(s(t));
    w(t) = 1.0 / table.variances(s(t));
  }

  double b_sigma = 0.0;
  const bool gaussian_sigma = half_normal_sigma(priors.sigma2, &b_sigma);
  // Extra sigma-dependent density of htilde0 when h0 has a fixed prior variance.
  const double h0_quad = l0.stationary ? 0.0 : h0_tilde * h0_tilde / l0.value;
  const auto correction = [&](double sigma) {
    double out = l0.stationary ? 0.0 : std::log(std::abs(sigma));
    if (!gaussian_sigma) out += sigma_ext_log_prior(priors.sigma2, sigma);
    return out;
  };
  const double sigma_prior_prec = (gaussian_sigma ? 1.0 / b_sigma : 0.0) + h0_quad;

  double new_mu = p.mu, new_sigma = p.sigma;
  if (mu_free && sigma_free) {
    const auto& mp = std::get<dist::Normal>(priors.mu);
    Eigen::Matrix2d prec;
    prec << w.sum() + 1.0 / (mp.sd * mp.sd), (w * ht).sum(), (w * ht).sum(), (w * ht.square()).sum() + sigma_prior_prec;
    const Eigen::Vector2d lin((w * u).sum() + mp.mean / (mp.sd * mp.sd), (w * ht * u).sum());
    const Eigen::VectorXd draw = mvn_draw(prec, lin, rng);
    new_mu = draw(0);
    new_sigma = draw(1);
  } else if (mu_free) {
    const auto& mp = std::get<dist::Normal>(priors.mu);
    const double prec = w.sum() + 1.0 / (mp.sd * mp.sd);
    const double lin = (w * (u - p.sigma * ht)).sum() + mp.mean / (mp.sd * mp.sd);
    new_mu = rng.normal(lin / prec, 1.0 / std::sqrt(prec));
  } else {
    const double prec = (w * ht.square()).sum() + sigma_prior_prec;
    if (!(prec > 0.0)) return;
    const double lin = (w * ht * (u - p.mu)).sum();
    new_sigma = rng.normal(lin / prec, 1.0 / std::sqrt(prec));
  }
  if (sigma_free) {
    const double log_alpha = correction(new_sigma) - correction(p.sigma);
    if (!(std::log(rng.uniform()) < log_alpha)) {
      // On rejection mu is refreshed from its exact conditional given the old sigma.
      if (mu_free) {
        const auto& mp = std::get<dist::Normal>(priors.mu);
        const double prec = w.sum() + 1.0 / (mp.sd * mp.sd);
        const double lin = (w * (u - p.sigma * ht)).sum() + mp.mean / (mp.sd * mp.sd);
        new_mu = rng.normal(lin / prec, 1.0 / std::sqrt(prec));
      }
      new_sigma = p.sigma;
    }
  }
  double sign = 1.0;
  if (new_sigma < 0.0) {
    new_sigma = -new_sigma;
    sign = -1.0;
  }
  if (new_sigma == 0.0) return;
  p.mu = new_mu;
  p.sigma = new_sigma;
  path.h0 = p.mu + sign * p.sigma * h0_tilde;
  path.h = (p.mu + sign * p.sigma * ht).matrix();
}

void draw_sv_params_asis(LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& ystar, const Eigen::VectorXi& s,
                         SvParams& p, const PriorSpec& priors, const MixtureTable& table, RngStream& rng,
                         const StepMask& mask) {
  draw_params_centered(path, p, priors, rng, mask);
  draw_params_noncentered(path, ystar, s, p, priors, table, rng, mask);
}

Eigen::VectorXd draw_tail_latents(const Eigen::Ref<const Eigen::VectorXd>& resid,
                                  const Eigen::Ref<const Eigen::VectorXd>& h, const SvParams& p, RngStream& rng) {
  const Eigen::Index n = resid.size();
  if (!std::isfinite(p.nu)) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd tau(n);
  const double shape = 0.5 * (p.nu + 1.0);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double e2 = resid(t) * resid(t) * std::exp(-h(t));
    tau(t) = rng.inverse_gamma(shape, 0.5 * (p.nu - 2.0 + e2));
  }
  return tau;
}

Eigen::VectorXd draw_tail_latents_leverage(const Eigen::Ref<const Eigen::VectorXd>& resid, const LatentPath& path,
                                           const Eigen::Ref<const Eigen::VectorXd>& tau, const SvParams& p,
                                           RngStream& rng) {
  const Eigen::Index n = resid.size();
  if (!std::isfinite(p.nu)) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd out = tau;
  const double shape = 0.5 * (p.nu + 1.0);
  const double cond_var = 1.0 - p.rho * p.rho;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double h = path.h(t);
    const double e2 = resid(t) * resid(t) * std::exp(-h);
    const double prop = rng.inverse_gamma(shape, 0.5 * (p.nu - 2.0 + e2));
    if (t + 1 == n) {
      out(t) = prop;
      continue;
    }
    const double eta = (path.h(t + 1) - p.mu - p.phi * (h - p.mu)) / p.sigma;
    const double scaled = resid(t) * std::exp(-0.5 * h);
    const auto weight = [&](double tv) {
      const double eps = scaled / std::sqrt(tv);
      const double r = eps - p.rho * eta;
      return -0.5 * r * r / cond_var + 0.5 * eps * eps;
    };
    if (std::log(rng.uniform()) < weight(prop) - weight(out(t))) out(t) = prop;
  }
  return out;
}

double nu_log_posterior(const Eigen::Ref<const Eigen::VectorXd>& tau, double nu, const PriorSpec& priors) {
  if (!(nu > 2.0)) return kNegInf;
  const double a = 0.5 * nu;
  const double b = 0.5 * (nu - 2.0);
  const double n = static_cast<double>(tau.size());
  return nu_log_prior(priors, nu) + n * (a * std::log(b) - boost::math::lgamma(a)) -
         (a + 1.0) * tau.array().log().sum() - b * tau.array().inverse().sum();
}

double draw_nu(const Eigen::Ref<const Eigen::VectorXd>& tau, double nu, const PriorSpec& priors, double log_step,
               RngStream& rng, bool* accepted) {
  const double x = std::log(nu - 2.0);
  const double x_new = x + log_step * rng.normal();
  const double nu_new = 2.0 + std::exp(x_new);
  const double log_alpha =
      nu_log_posterior(tau, nu_new, priors) - nu_log_posterior(tau, nu, priors) + (x_new - x);
  const bool ok = std::isfinite(nu_new) && std::log(rng.uniform()) < log_alpha;
  if (accepted) *accepted = ok;
  return ok ? nu_new : nu;
}

Eigen::VectorXd draw_beta(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& tau, const SvParams& p,
                          const dist::MultivariateNormal& prior, RngStream& rng) {
  const Eigen::Index K = X.cols();
  if (K == 0) return Eigen::VectorXd(0);
  const Eigen::Index n = y.size();
  const auto pr = prior.resized(K);
  Eigen::VectorXd resp = y;
  Eigen::VectorXd w = ((-path.h.array()).exp() / tau.array()).matrix();
  if (p.rho != 0.0) {
    for (Eigen::Index t = 0; t + 1 < n; ++t) {
      const double eta = (path.h(t + 1) - p.mu - p.phi * (path.h(t) - p.mu)) / p.sigma;
      resp(t) -= std::exp(0.5 * path.h(t)) * std::sqrt(tau(t)) * p.rho * eta;
      w(t) /= 1.0 - p.rho * p.rho;
    }
  }
  const Eigen::MatrixXd prec = pr.precision + X.transpose() * w.asDiagonal() * X;
  const Eigen::VectorXd lin = pr.precision * pr.mean + X.transpose() * (w.array() * resp.array()).matrix();
  return mvn_draw(prec, lin, rng);
}

double leverage_log_target_centered(const LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& eps,
                                    const SvParams& p, const PriorSpec& priors) {
  const Eigen::Index n = path.h.size();
  const double s2 = p.sigma * p.sigma;
  const double cond_var = 1.0 - p.rho * p.rho;
  double lp = h0_term(path.h0, p, priors.latent0_variance);
  if (n >= 1) lp += log_normal(path.h(0), p.mu + p.phi * (path.h0 - p.mu), s2);
  for (Eigen::Index t = 0; t + 1 < n; ++t) {
    const double mean_next = p.mu + p.phi * (path.h(t) - p.mu);
    const double eta = (path.h(t + 1) - mean_next) / p.sigma;
    lp += log_normal(path.h(t + 1), mean_next, s2) + log_normal(eps(t), p.rho * eta, cond_var);
  }
  return lp + prior_term(priors.mu, p.mu) + prior_term(priors.phi, p.phi) +
         prior_term(priors.sigma2, s2) + prior_term(priors.rho, p.rho);
}

double leverage_log_target_noncentered(double htilde0, const Eigen::Ref<const Eigen::VectorXd>& htilde,
                                       const Eigen::Ref<const Eigen::VectorXd>& scaled_resid, const SvParams& p,
                                       const PriorSpec& priors) {
  const Eigen::Index n = htilde.size();
  const auto& l0 = priors.latent0_variance;
  double lp = l0.stationary ? log_normal(htilde0, 0.0, 1.0 / (1.0 - p.phi * p.phi))
                            : log_normal(htilde0, 0.0, l0.value / (p.sigma * p.sigma));
  double prev = htilde0;
  for (Eigen::Index t = 0; t < n; ++t) {
    lp += log_normal(htilde(t), p.phi * prev, 1.0);
    prev = htilde(t);
  }
  const double cond_var = 1.0 - p.rho * p.rho;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double h = p.mu + p.sigma * htilde(t);
    const double eps = scaled_resid(t) * std::exp(-0.5 * h);
    lp -= 0.5 * h;
    if (t + 1 < n) {
      lp += log_normal(eps, p.rho * (htilde(t + 1) - p.phi * htilde(t)), cond_var);
    } else {
      lp += log_normal(eps, 0.0, 1.0);
    }
  }
  return lp + prior_term(priors.mu, p.mu) + prior_term(priors.phi, p.phi) +
         prior_term(priors.sigma2, p.sigma * p.sigma) + prior_term(priors.rho, p.rho);
}

LeverageUpdater::LeverageUpdater(const PriorSpec& priors, const StepMask& mask) : priors_(&priors) {
  if (mask.mu && is_free(priors.mu)) free_.push_back(kMu);
  if (mask.phi && is_free(priors.phi)) free_.push_back(kPhi);
  if (mask.sigma && is_free(priors.sigma2)) free_.push_back(kSigma);
  if (mask.rho && is_free(priors.rho)) free_.push_back(kRho);
  phi_unbounded_ = std::holds_alternative<dist::Normal>(priors.phi) && !priors.latent0_variance.stationary;
  const auto d = static_cast<Eigen::Index>(free_.size());
  for (Walker* w : {&centered_, &noncentered_}) {
    w->chol = 0.1 * Eigen::MatrixXd::Identity(d, d);
    w->sum = Eigen::VectorXd::Zero(d);
    w->sum_sq = Eigen::MatrixXd::Zero(d, d);
  }
}

Eigen::VectorXd LeverageUpdater::to_free(const SvParams& p) const {
  Eigen::VectorXd u(free_.size());
  for (std::size_t i = 0; i < free_.size(); ++i) {
    switch (free_[i]) {
      case kMu: u(i) = p.mu; break;
      case kPhi: u(i) = phi_unbounded_ ? p.phi : std::atanh(p.phi); break;
      case kSigma: u(i) = std::log(p.sigma); break;
      case kRho: u(i) = std::atanh(p.rho); break;
      default: break;
    }
  }
  return u;
}

void LeverageUpdater::from_free(const Eigen::VectorXd& u, SvParams& p) const {
  for (std::size_t i = 0; i < free_.size(); ++i) {
    switch (free_[i]) {
      case kMu: p.mu = u(i); break;
      case kPhi: p.phi = phi_unbounded_ ? u(i) : std::tanh(u(i)); break;
      case kSigma: p.sigma = std::exp(u(i)); break;
      case kRho: p.rho = std::tanh(u(i)); break;
      default: break;
    }
  }
}

double LeverageUpdater::log_jacobian(const SvParams& p) const {
  double out = 0.0;
  for (int idx : free_) {
    if (idx == kPhi && !phi_unbounded_) out += std::log1p(-p.phi * p.phi);
    if (idx == kSigma) out += std::log(2.0 * p.sigma * p.sigma);
    if (idx == kRho) out += std::log1p(-p.rho * p.rho);
  }
  return out;
}

void LeverageUpdater::adapt_walker(Walker& w, const Eigen::VectorXd& u, double accept_prob) {
  ++w.steps;
  w.log_scale += (accept_prob - 0.234) / std::pow(static_cast<double>(w.steps), 0.6);
  w.log_scale = std::clamp(w.log_scale, -10.0, 5.0);
  w.sum += u;
  w.sum_sq += u * u.transpose();
  ++w.samples;
  if (w.samples >= 200 && w.samples % 100 == 0) {
    const auto d = static_cast<double>(u.size());
    const Eigen::VectorXd m = w.sum / static_cast<double>(w.samples);
    Eigen::MatrixXd cov = w.sum_sq / static_cast<double>(w.samples) - m * m.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    cov *= 2.38 * 2.38 / d;
    cov.diagonal().array() += 1e-8;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) w.chol = llt.matrixL();
  }
}

void LeverageUpdater::step(Walker& w, SvParams& p, RngStream& rng, bool adapt,
                           const std::function<double(const SvParams&)>& target) {
  if (free_.empty()) return;
  const Eigen::VectorXd u = to_free(p);
  Eigen::VectorXd z(u.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  const Eigen::VectorXd u_new = u + std::exp(w.log_scale) * (w.chol * z);
  SvParams q = p;
  from_free(u_new, q);
  double log_alpha = kNegInf;
  const bool inside = std::abs(q.phi) < 1.0 || phi_unbounded_;
  if (inside && std::abs(q.rho) < 1.0 && q.sigma > 0.0 && std::isfinite(q.sigma)) {
    const double lt_new = target(q);
    if (std::isfinite(lt_new)) log_alpha = lt_new + log_jacobian(q) - target(p) - log_jacobian(p);
  }
  ++w.stats.proposals;
  const bool accept = std::log(rng.uniform()) < log_alpha;
  if (accept) {
    ++w.stats.accepted;
    p = q;
  }
  if (adapt) adapt_walker(w, accept ? u_new : u, std::isfinite(log_alpha) ? std::min(1.0, std::exp(log_alpha)) : 0.0);
}

void LeverageUpdater::update(LatentPath& path, const Eigen::Ref<const Eigen::VectorXd>& resid,
                             const Eigen::Ref<const Eigen::VectorXd>& tau, SvParams& p, RngStream& rng, bool adapt,
                             int passes) {
  const Eigen::VectorXd scaled = (resid.array() / tau.array().sqrt()).matrix();
  for (int pass = 0; pass < passes; ++pass) {
    const Eigen::VectorXd eps = (scaled.array() * (-0.5 * path.h.array()).exp()).matrix();
    step(centered_, p, rng, adapt,
         [&](const SvParams& q) { return leverage_log_target_centered(path, eps, q, *priors_); });

    const double ht0 = (path.h0 - p.mu) / p.sigma;
    const Eigen::VectorXd ht = ((path.h.array() - p.mu) / p.sigma).matrix();
    step(noncentered_, p, rng, adapt,
         [&](const SvParams& q) { return leverage_log_target_noncentered(ht0, ht, scaled, q, *priors_); });
    path.h0 = p.mu + p.sigma * ht0;
    path.h = (p.mu + p.sigma * ht.array()).matrix();
  }
}

}  // namespace sv
