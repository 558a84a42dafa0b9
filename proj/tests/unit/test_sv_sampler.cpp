#include <doctest.h>

#include <cmath>

#include "sv/design.hpp"
#include "sv/errors.hpp"
#include "sv/mixture.hpp"
#include "sv/simulate.hpp"
#include "sv/sv_kernel.hpp"
#include "sv/sv_sampler.hpp"
#include "support/oracles.hpp"

using namespace sv;

namespace {

SvParams vanilla(double mu, double phi, double sigma) {
  SvParams p;
  p.mu = mu;
  p.phi = phi;
  p.sigma = sigma;
  p.beta = Eigen::VectorXd(0);
  return p;
}

SvDraws fit(const Eigen::VectorXd& y, ModelKind kind, const PriorSpec& priors, SamplerConfig c) {
  return run_sampler(make_design(y, DesignSpec::none()), kind, priors, c);
}

SamplerConfig small_config(int draws, int burnin, std::uint64_t seed) {
  SamplerConfig c;
  c.draws = draws;
  c.burnin = burnin;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("awol draws reproduce the Kalman smoother marginals") {
  RngStream rng(21, 0);
  const MixtureTable& table = mixture_table(MixtureKind::no_leverage);
  for (int inst = 0; inst < 4; ++inst) {
    const Eigen::Index n = 3 + inst * 2;
    const SvParams p = vanilla(rng.normal(), 0.5 + 0.45 * rng.uniform(), 0.2 + rng.uniform());
    Eigen::VectorXd ystar(n);
    Eigen::VectorXi s(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      ystar(t) = rng.normal(-1.0, 2.0);
      s(t) = static_cast<int>(rng.uniform() * 10.0);
    }
    const Latent0Variance l0 = Latent0Variance::make_stationary();
    const auto oracle = testing::kalman_smoother(ystar, s, p, latent0_variance(p, l0), table);
    const int draws = 40000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n + 1), sum2 = Eigen::VectorXd::Zero(n + 1);
    for (int k = 0; k < draws; ++k) {
      const LatentPath path = draw_latent_awol(ystar, s, p, l0, table, rng);
      Eigen::VectorXd x(n + 1);
      x << path.h0, path.h;
      sum += x;
      sum2 += x.cwiseAbs2();
    }
    const Eigen::VectorXd m = sum / draws;
    const Eigen::VectorXd v = sum2 / draws - m.cwiseAbs2();
    for (Eigen::Index t = 0; t <= n; ++t) {
      CHECK(std::abs(m(t) - oracle.mean(t)) < 4.0 * std::sqrt(oracle.var(t) / draws));
      CHECK(std::abs(v(t) - oracle.var(t)) < 4.0 * oracle.var(t) * std::sqrt(2.0 / draws));
    }
  }
}

TEST_CASE("tail latents follow the unit-variance t conditional") {
  RngStream rng(2, 0);
  SvParams p = vanilla(0.0, 0.9, 0.2);
  p.nu = 7.0;
  const int n = 200000;
  const Eigen::VectorXd resid = Eigen::VectorXd::Constant(n, 1.5);
  const Eigen::VectorXd h = Eigen::VectorXd::Constant(n, 0.4);
  const Eigen::VectorXd tau = draw_tail_latents(resid, h, p, rng);
  const double a = 0.5 * (p.nu + 1.0);
  const double b = 0.5 * (p.nu - 2.0 + 2.25 * std::exp(-0.4));
  CHECK(tau.mean() == doctest::Approx(b / (a - 1.0)).epsilon(0.01));
  p.nu = std::numeric_limits<double>::infinity();
  CHECK(draw_tail_latents(resid.head(5), h.head(5), p, rng) == Eigen::VectorXd::Ones(5));
}

TEST_CASE("simulated t errors have unit variance") {
  RngStream rng(9, 0);
  SvParams p = vanilla(0.0, 0.0, 1e-6);
  p.nu = 5.0;
  const auto sim = simulate_sv(p, 200000, Eigen::MatrixXd(200000, 0), Latent0Variance::make_stationary(), rng);
  const Eigen::VectorXd e = sim.y.array() * (-0.5 * sim.latent.h.array()).exp();
  CHECK(e.squaredNorm() / e.size() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("leverage model with rho fixed at zero runs the vanilla sampler exactly") {
  RngStream rng(4, 0);
  const auto sim = simulate_sv(vanilla(-9.0, 0.95, 0.3), 300, Eigen::MatrixXd(300, 0), {}, rng);
  PriorSpec lev = default_priors(ModelKind::svl);
  lev.rho = dist::Constant{0.0};
  const SvDraws a = fit(sim.y, ModelKind::sv, default_priors(ModelKind::sv), small_config(300, 100, 8));
  const SvDraws b = fit(sim.y, ModelKind::svl, lev, small_config(300, 100, 8));
  CHECK(a.para() == b.para());
  CHECK(a.latent() == b.latent());
}

TEST_CASE("chains are reproducible and independent of the thread count") {
  RngStream rng(6, 0);
  const auto sim = simulate_sv(vanilla(-9.0, 0.95, 0.3), 200, Eigen::MatrixXd(200, 0), {}, rng);
  SamplerConfig c = small_config(200, 50, 17);
  c.chains = 3;
  c.threads = 1;
  const SvDraws a = fit(sim.y, ModelKind::svt, default_priors(ModelKind::svt), c);
  c.threads = 3;
  const SvDraws b = fit(sim.y, ModelKind::svt, default_priors(ModelKind::svt), c);
  CHECK(a.para() == b.para());
  CHECK(a.latent() == b.latent());
  CHECK(a.chains[0].para != a.chains[1].para);
}

TEST_CASE("thinning and keeptime control storage") {
  RngStream rng(8, 0);
  const auto sim = simulate_sv(vanilla(-9.0, 0.95, 0.3), 150, Eigen::MatrixXd(150, 0), {}, rng);
  SamplerConfig c = small_config(100, 20, 1);
  c.thinpara = 3;
  c.thinlatent = 10;
  const SvDraws d = fit(sim.y, ModelKind::sv, default_priors(ModelKind::sv), c);
  CHECK(d.chains[0].para.rows() == 34);
  CHECK(d.chains[0].latent.rows() == 10);
  CHECK(d.chains[0].latent.cols() == 150);
  c.keeptime = KeepTime::last;
  const SvDraws e = fit(sim.y, ModelKind::sv, default_priors(ModelKind::sv), c);
  CHECK(e.chains[0].latent.cols() == 1);
  CHECK(e.chains[0].h_last.size() == 34);
  CHECK(std::isinf(d.chains[0].para(0, kNu)));
  CHECK(d.chains[0].para.col(kRho).isZero());
}

TEST_CASE("invalid sampler configurations are rejected") {
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 0.01);
  SamplerConfig c = small_config(0, 10, 1);
  CHECK_THROWS_AS(fit(y, ModelKind::sv, default_priors(ModelKind::sv), c), ConfigError);
  c = small_config(10, 10, 1);
  c.thinpara = 0;
  CHECK_THROWS_AS(fit(y, ModelKind::sv, default_priors(ModelKind::sv), c), ConfigError);
  c = small_config(10, 10, 1);
  CHECK_THROWS_AS(fit(y, ModelKind::sv, default_priors(ModelKind::svt), c), InconsistentSpec);
}

TEST_CASE("designs build intercept, lag and covariate regressors") {
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  const Design ar = make_design(y, DesignSpec::ar(1));
  CHECK(ar.n() == 4);
  CHECK(ar.k() == 2);
  CHECK(ar.X.col(0).isOnes());
  CHECK(ar.X(0, 1) == 1.0);
  CHECK(ar.y(0) == 2.0);
  const Design a0 = make_design(y, DesignSpec::ar(0));
  CHECK(a0.n() == 5);
  CHECK(a0.k() == 1);
  CHECK(parse_design("ar2") == DesignSpec::ar(2));
  Eigen::MatrixXd X(5, 2);
  X << 1, 1, 1, 1, 1, 1, 1, 1, 1, 1;
  const Design cov = make_design(y, DesignSpec::covariates(), X);
  CHECK_THROWS_AS(init_start_values(cov.y, cov.X, default_priors(ModelKind::sv)), DataError);
}

TEST_CASE("posterior concentrates near the simulating parameters") {
  RngStream rng(31, 0);
  const auto sim = simulate_sv(vanilla(-10.0, 0.97, 0.3), 1500, Eigen::MatrixXd(1500, 0), {}, rng);
  const SvDraws d = fit(sim.y, ModelKind::sv, default_priors(ModelKind::sv), small_config(3000, 1000, 5));
  const Eigen::MatrixXd para = d.para();
  CHECK(std::abs(para.col(kMu).mean() + 10.0) < 0.6);
  CHECK(std::abs(para.col(kPhi).mean() - 0.97) < 0.03);
  CHECK(std::abs(para.col(kSigma).mean() - 0.3) < 0.12);
}

TEST_CASE("leverage sampler recovers the sign of rho") {
  RngStream rng(12, 0);
  SvParams p = vanilla(-9.0, 0.97, 0.3);
  p.rho = -0.6;
  const auto sim = simulate_sv(p, 1500, Eigen::MatrixXd(1500, 0), {}, rng);
  const SvDraws d = fit(sim.y, ModelKind::svl, default_priors(ModelKind::svl), small_config(4000, 1000, 3));
  CHECK(d.para().col(kRho).mean() < -0.3);
  CHECK(d.chains[0].centered.rate() > 0.1);
}
