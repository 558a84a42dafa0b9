#include <doctest.h>

#include <cmath>

#include "sv/errors.hpp"
#include "sv/mixture.hpp"
#include "sv/prior_spec.hpp"
#include "sv/sv_types.hpp"

using namespace sv;

TEST_CASE("default priors carry the documented hyperparameters") {
  const PriorSpec sv = default_priors(ModelKind::sv);
  CHECK(sv.mu == Distribution(dist::Normal{0.0, 100.0}));
  CHECK(sv.phi == Distribution(dist::TranslatedBeta{5.0, 1.5}));
  CHECK(sv.sigma2 == Distribution(dist::Gamma{0.5, 0.5}));
  CHECK(is_infinity(sv.nu));
  CHECK(sv.rho == Distribution(dist::Constant{0.0}));
  CHECK(sv.beta.mean(0) == 0.0);
  CHECK(sv.beta.precision(0, 0) == doctest::Approx(1.0 / (10000.0 * 10000.0)));
  CHECK(sv.latent0_variance.stationary);

  CHECK(default_priors(ModelKind::svt).nu == Distribution(dist::Exponential{0.1}));
  CHECK(default_priors(ModelKind::svl).rho == Distribution(dist::TranslatedBeta{4.0, 4.0}));
  const PriorSpec svtl = default_priors(ModelKind::svtl);
  CHECK(svtl.nu == Distribution(dist::Exponential{0.1}));
  CHECK(svtl.rho == Distribution(dist::TranslatedBeta{4.0, 4.0}));
}

TEST_CASE("sampler defaults depend on leverage") {
  CHECK(SamplerConfig::defaults(ModelKind::sv).draws == 10000);
  CHECK(SamplerConfig::defaults(ModelKind::sv).burnin == 1000);
  CHECK(SamplerConfig::defaults(ModelKind::svt).draws == 10000);
  CHECK(SamplerConfig::defaults(ModelKind::svl).draws == 20000);
  CHECK(SamplerConfig::defaults(ModelKind::svl).burnin == 2000);
  CHECK(SamplerConfig::defaults(ModelKind::svtl).draws == 20000);
}

TEST_CASE("half-normal sigma prior maps to a gamma on sigma squared") {
  const Distribution d = sigma2_from_half_normal(1.0);
  CHECK(d == Distribution(dist::Gamma{0.5, 0.5}));
  CHECK(mean(d) == doctest::Approx(1.0));
  CHECK(prior_mean_sigma(d) == doctest::Approx(std::sqrt(2.0 / M_PI)));
}

TEST_CASE("prior validation rejects specs inconsistent with the model") {
  PriorSpec p = default_priors(ModelKind::sv);
  p.nu = dist::Exponential{0.1};
  CHECK_THROWS_AS(validate(p, ModelKind::sv), InconsistentSpec);
  p = default_priors(ModelKind::sv);
  p.rho = dist::TranslatedBeta{4.0, 4.0};
  CHECK_THROWS_AS(validate(p, ModelKind::sv), InconsistentSpec);
  p = default_priors(ModelKind::sv);
  p.phi = dist::Constant{1.0};
  CHECK_THROWS_AS(validate(p, ModelKind::sv), InconsistentSpec);
  p = default_priors(ModelKind::svt);
  p.nu = dist::Constant{2.0};
  CHECK_THROWS_AS(validate(p, ModelKind::svt), InconsistentSpec);
  p = default_priors(ModelKind::sv);
  p.mu = dist::Gamma{1.0, 1.0};
  CHECK_THROWS_AS(validate(p, ModelKind::sv), InconsistentSpec);
  for (ModelKind k : {ModelKind::sv, ModelKind::svt, ModelKind::svl, ModelKind::svtl}) {
    CHECK_NOTHROW(validate(default_priors(k), k));
  }
}

TEST_CASE("prior overrides parse field by field") {
  PriorSpec p = default_priors(ModelKind::sv);
  apply_prior_override(p, "mu", "normal(-10, 1)");
  apply_prior_override(p, "phi", "beta(20, 1.5)");
  apply_prior_override(p, "sigma", "0.1");
  apply_prior_override(p, "latent0_variance", "constant(4)");
  CHECK(p.mu == Distribution(dist::Normal{-10.0, 1.0}));
  CHECK(p.phi == Distribution(dist::TranslatedBeta{20.0, 1.5}));
  CHECK(p.sigma2 == Distribution(dist::Gamma{0.5, 5.0}));
  CHECK_FALSE(p.latent0_variance.stationary);
  CHECK(p.latent0_variance.value == 4.0);
  CHECK_THROWS_AS(apply_prior_override(p, "omega", "normal(0,1)"), ConfigError);
  CHECK_THROWS_AS(apply_prior_override(p, "sigma", "-1"), ConfigError);
}

TEST_CASE("mixture tables are normalized") {
  for (MixtureKind k : {MixtureKind::no_leverage, MixtureKind::leverage}) {
    const MixtureTable& t = mixture_table(k);
    CHECK(t.size() == 10);
    CHECK(t.probs.sum() == doctest::Approx(1.0).epsilon(1e-4));
    CHECK((t.variances.array() > 0.0).all());
    CHECK((t.probs.array() > 0.0).all());
  }
}

TEST_CASE("mixture approximates log chi-square moments and cdf") {
  const MixtureTable& t = mixture_table(MixtureKind::no_leverage);
  const double exact_mean = -1.2703628454614782;  // digamma(1/2) + log 2
  const double exact_var = M_PI * M_PI / 2.0;
  CHECK(std::abs(t.mean() - exact_mean) < 1e-3);
  CHECK(std::abs(t.variance() - exact_var) < 5e-3);
  double ks = 0.0;
  for (double z = -30.0; z <= 6.0; z += 1e-3) ks = std::max(ks, std::abs(t.cdf(z) - log_chisq1_cdf(z)));
  CHECK(ks < 0.01);
}

TEST_CASE("linearization adds the offset before the log") {
  Eigen::VectorXd r(3);
  r << 0.0, 1.0, -2.0;
  const Eigen::VectorXd z = linearize(r, 1e-8);
  CHECK(z(0) == doctest::Approx(std::log(1e-8)));
  CHECK(z(1) == doctest::Approx(std::log(1.0 + 1e-8)));
  CHECK(z(2) == doctest::Approx(std::log(4.0 + 1e-8)));
}

TEST_CASE("indicator probabilities are a normalized posterior over components") {
  const MixtureTable& t = mixture_table(MixtureKind::no_leverage);
  const Eigen::VectorXd p = indicator_probabilities(-1.0, 0.3, t);
  CHECK(p.sum() == doctest::Approx(1.0));
  Eigen::VectorXd w(t.size());
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    const double z = (-1.0 - 0.3 - t.means(j)) / std::sqrt(t.variances(j));
    w(j) = t.probs(j) * std::exp(-0.5 * z * z) / std::sqrt(t.variances(j));
  }
  CHECK((p - w / w.sum()).cwiseAbs().maxCoeff() < 1e-12);
}
