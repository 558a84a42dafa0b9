#include "sv/geweke.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sv/errors.hpp"
#include "sv/rng.hpp"
#include "sv/simulate.hpp"
#include "sv/sv_sampler.hpp"

namespace sv {

namespace {

double to_normal_score(double u) {
  // Keeps exact 0/1 CDF values finite.
  constexpr double kEdge = 1e-15;
  return standard_normal_quantile(std::clamp(u, kEdge, 1.0 - kEdge));
}

void require_proper(const Distribution& d, const std::string& name) {
  if (is_constant(d)) return;
  if (!std::isfinite(variance(d))) {
    throw InconsistentSpec("the Geweke test needs a proper prior for " + name);
  }
}

}  // namespace

std::pair<std::vector<std::string>, Eigen::MatrixXd> geweke_transform(const PriorSpec& priors, ModelKind kind,
                                                                      const Eigen::MatrixXd& para,
                                                                      const Eigen::MatrixXd& beta) {
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  auto add = [&](const std::string& name, const Distribution& prior, auto&& value) {
    if (is_constant(prior) || is_infinity(prior)) return;
    Eigen::VectorXd z(para.rows());
    for (Eigen::Index i = 0; i < para.rows(); ++i) z(i) = to_normal_score(cdf(prior, value(i)));
    names.push_back(name);
    cols.push_back(std::move(z));
  };
  add("mu", priors.mu, [&](Eigen::Index i) { return para(i, kMu); });
  add("phi", priors.phi, [&](Eigen::Index i) { return para(i, kPhi); });
  add("sigma", priors.sigma2, [&](Eigen::Index i) { return para(i, kSigma) * para(i, kSigma); });
  if (has_t_errors(kind)) add("nu", priors.nu, [&](Eigen::Index i) { return para(i, kNu) - 2.0; });
  if (has_leverage(kind)) add("rho", priors.rho, [&](Eigen::Index i) { return para(i, kRho); });
  if (beta.cols() > 0) {
    const dist::MultivariateNormal prior = priors.beta.resized(beta.cols());
    const Eigen::MatrixXd cov = prior.precision.inverse();
    for (Eigen::Index j = 0; j < beta.cols(); ++j) {
      const Distribution marginal = dist::Normal{prior.mean(j), std::sqrt(cov(j, j))};
      add("beta_" + std::to_string(j), marginal, [&](Eigen::Index i) { return beta(i, j); });
    }
  }
  Eigen::MatrixXd out(para.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = cols[c];
  return {names, out};
}

GewekeReport geweke_validate(ModelKind kind, const PriorSpec& priors, const GewekeConfig& config) {
  validate(priors, kind);
  if (config.n_data < 2) throw ConfigError("Geweke test needs n_data >= 2");
  if (config.kept < 8 || config.thin < 1 || config.burnin < 0) throw ConfigError("invalid Geweke sweep counts");
  require_proper(priors.mu, "mu");
  require_proper(priors.phi, "phi");
  require_proper(priors.sigma2, "sigma2");
  if (has_t_errors(kind)) require_proper(priors.nu, "nu");
  if (has_leverage(kind)) require_proper(priors.rho, "rho");
  const Eigen::Index k = config.X.cols();
  if (k > 0) {
    if (config.X.rows() != config.n_data) throw DimensionError("Geweke design needs n_data rows");
    if (!priors.beta.resized(k).precision.allFinite() || priors.beta.resized(k).precision.diagonal().minCoeff() <= 0.0) {
      throw InconsistentSpec("the Geweke test needs a proper prior for beta");
    }
  }

  RngStream rng(config.seed, 0);
  const SvParams start = draw_prior_params(priors, k, rng);
  const SimulatedSeries sim = simulate_sv(start, config.n_data, config.X, priors.latent0_variance, rng);

  const PriorSpec& fit_priors = config.sampler_priors ? *config.sampler_priors : priors;
  validate(fit_priors, kind);
  SvSampler sampler(sim.y, config.X, kind, fit_priors, config.offset);
  sampler.set_mask(config.mask);
  sampler.set_state(start, sim.latent, sim.tau);

  Eigen::MatrixXd para(config.kept, kParamColumns);
  Eigen::MatrixXd beta(config.kept, k);
  const long total = static_cast<long>(config.burnin) + static_cast<long>(config.kept) * config.thin;
  int kept = 0;
  for (long i = 0; i < total; ++i) {
    try {
      sampler.sweep(rng, i < config.burnin);
    } catch (const Error& e) {
      rethrow_with_context(e, "Geweke sweep " + std::to_string(i));
    }
    sampler.set_response(simulate_response(sampler.latent(), sampler.tau(), sampler.params(), config.X, rng));
    if (i < config.burnin) continue;
    if ((i - config.burnin + 1) % config.thin == 0) {
      const SvParams& p = sampler.params();
      para.row(kept) << p.mu, p.phi, p.sigma, p.nu, p.rho;
      if (k > 0) beta.row(kept) = p.beta.transpose();
      ++kept;
    }
  }

  GewekeReport report;
  report.kind = kind;
  report.config = config;
  auto [names, z] = geweke_transform(priors, kind, para, beta);
  report.transformed = std::move(z);
  report.pass = true;
  for (std::size_t c = 0; c < names.size(); ++c) {
    GewekeParameter gp;
    gp.name = names[c];
    gp.test = normality_test(report.transformed.col(static_cast<Eigen::Index>(c)));
    gp.pass = gp.test.p_value >= config.alpha;
    report.pass = report.pass && gp.pass;
    report.parameters.push_back(std::move(gp));
  }
  return report;
}

nlohmann::ordered_json to_json(const GewekeReport& report) {
  nlohmann::ordered_json out;
  out["model"] = to_string(report.kind);
  out["n_data"] = report.config.n_data;
  out["kept"] = report.config.kept;
  out["thin"] = report.config.thin;
  out["burnin"] = report.config.burnin;
  out["seed"] = report.config.seed;
  out["alpha"] = report.config.alpha;
  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  for (const auto& p : report.parameters) {
    params.push_back({{"name", p.name},
                      {"test", p.test.method},
                      {"statistic", p.test.statistic},
                      {"p_value", p.test.p_value},
                      {"pass", p.pass}});
  }
  out["parameters"] = params;
  out["pass"] = report.pass;
  return out;
}

}  // namespace sv
