#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sv/errors.hpp"
#include "sv/factor_sv.hpp"
#include "sv/static_factor.hpp"

using namespace sv;

namespace {

FsvSimulation two_factor_data(Eigen::Index n, std::uint64_t seed) {
  FsvTruth t;
  t.loadings.resize(4, 2);
  t.loadings << 1.0, 0.0, 0.8, 0.0, 0.0, 1.0, 0.0, 0.7;
  t.mu = Eigen::VectorXd::Constant(6, -1.0);
  t.phi = Eigen::VectorXd::Constant(6, 0.9);
  t.sigma = Eigen::VectorXd::Constant(6, 0.2);
  RngStream rng(seed, 0);
  return simulate_fsv(t, n, rng);
}

FsvDraws small_fit(KeepTime keep, int runningstorethin) {
  FsvConfig c;
  c.factors = 2;
  c.draws = 150;
  c.burnin = 50;
  c.keeptime = keep;
  c.restrict = RestrictKind::upper;
  c.runningstorethin = runningstorethin;
  c.seed = 4;
  return fsv_sample(two_factor_data(150, 1).y, c);
}

double normal_density(double y, double var) {
  return std::exp(-0.5 * y * y / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace

TEST_CASE("free element counts") {
  CHECK(free_elements(100) == 5050);
  CHECK(free_elements(1000) == 500500);
  CHECK(free_elements(100, 4) == 494);
  CHECK(free_elements(1000, 4) == 4994);
  CHECK(free_elements(5, 0) == 5);
  CHECK_THROWS_AS(free_elements(0), InvalidParameter);
  CHECK_THROWS_AS(free_elements(4, 4), InvalidParameter);
}

TEST_CASE("covariance assembly") {
  Eigen::MatrixXd L(2, 1);
  L << 0.5, -1.5;
  Eigen::VectorXd h(3);
  h << 0.1, -0.2, 0.3;
  const Eigen::MatrixXd S = assemble_covariance(L, h, 2);
  CHECK(S(0, 1) == doctest::Approx(0.5 * -1.5 * std::exp(0.3)));
  CHECK(S(1, 0) == doctest::Approx(S(0, 1)));
  CHECK(S(0, 0) == doctest::Approx(0.25 * std::exp(0.3) + std::exp(0.1)));
  const Eigen::MatrixXd D = assemble_covariance(Eigen::MatrixXd::Zero(2, 1), h, 2);
  CHECK(D(0, 1) == 0.0);
  CHECK(D(1, 1) == doctest::Approx(std::exp(-0.2)));
  const Eigen::MatrixXd C = covariance_to_correlation(S);
  CHECK(C(0, 0) == doctest::Approx(1.0));
  CHECK(C(0, 1) == doctest::Approx(S(0, 1) / std::sqrt(S(0, 0) * S(1, 1))));
}

TEST_CASE("fitted draws respect the restriction and ranges") {
  const FsvDraws d = small_fit(KeepTime::all, 1);
  CHECK(d.kept() == 150);
  CHECK(d.restriction(0, 1));
  CHECK_FALSE(d.restriction(1, 1));
  for (const auto& L : d.loadings) CHECK(L(0, 1) == 0.0);
  CHECK((d.mu.rightCols(2).array() == 0.0).all());
  CHECK((d.phi.array().abs() < 1.0).all());
  CHECK((d.sigma.array() > 0.0).all());
  const Eigen::MatrixXd comm = d.running.mean(d.running.communality);
  CHECK((comm.array() >= 0.0).all());
  CHECK((comm.array() <= 1.0).all());
  CHECK(d.stored_times().size() == 150);
}

TEST_CASE("running moments equal plain averages of stored draws") {
  const FsvDraws d = small_fit(KeepTime::all, 1);
  CHECK(d.running.count == d.kept());
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d.m + d.r, d.n);
  Eigen::MatrixXd fmean = Eigen::MatrixXd::Zero(d.r, d.n);
  for (Eigen::Index k = 0; k < d.kept(); ++k) {
    mean += d.logvar[static_cast<std::size_t>(k)];
    fmean += d.factors[static_cast<std::size_t>(k)];
  }
  mean /= static_cast<double>(d.kept());
  fmean /= static_cast<double>(d.kept());
  CHECK((d.running.mean(d.running.logvar) - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((d.running.mean(d.running.factors) - fmean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((d.running.sd(d.running.logvar).array() >= 0.0).all());
}

TEST_CASE("covariance draws are symmetric and positive definite") {
  const FsvDraws d = small_fit(KeepTime::last, 10);
  CHECK(d.stored_times() == std::vector<Eigen::Index>{150});
  const Eigen::Tensor<double, 4> cov = covmat(d);
  CHECK(cov.dimension(0) == 4);
  CHECK(cov.dimension(2) == d.kept());
  CHECK(cov.dimension(3) == 1);
  for (Eigen::Index k = 0; k < d.kept(); k += 10) {
    Eigen::MatrixXd S(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) S(i, j) = cov(i, j, k, 0);
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff() > 0.0);
  }
  CHECK_THROWS_AS(covmat(d, {10}), DataError);
  CHECK(d.running.count == 15);
}

TEST_CASE("evdiag of known loadings") {
  FsvDraws d;
  d.m = 3;
  d.r = 2;
  Eigen::MatrixXd L(3, 2);
  L << 2.0, 0.0, 0.0, 1.0, 0.0, 0.0;
  d.loadings = {L};
  const Eigen::VectorXd ev = evdiag(d);
  CHECK(ev(0) == doctest::Approx(4.0));
  CHECK(ev(1) == doctest::Approx(1.0));

  Eigen::MatrixXd M(3, 2);
  M << 0.3, -1.2, 0.8, 0.4, -0.5, 2.0;
  d.loadings = {L, M};
  const Eigen::VectorXd dense = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M.transpose() * M).eigenvalues();
  const Eigen::VectorXd ev2 = evdiag(d);
  CHECK(ev2(0) == doctest::Approx(0.5 * (4.0 + dense(1))));
  CHECK(ev2(1) == doctest::Approx(0.5 * (1.0 + dense(0))));

  d.r = 1;
  d.loadings = {Eigen::Vector3d(1.0, 2.0, 3.0)};
  CHECK(evdiag(d)(0) == doctest::Approx(14.0));
}

TEST_CASE("restricted shrinkage latents come from the prior") {
  Eigen::MatrixXd L(2, 1);
  L << 0.0, 0.7;
  BoolMatrix R(2, 1);
  R << true, false;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(2, 1, 1.0);
  RngStream rng(5, 0);
  const double l2 = 4.0, c = 1.0, d = 1.0;
  const int reps = 100000;
  double tau_restricted = 0.0, tau_free = 0.0, ratio = 0.0;
  for (int i = 0; i < reps; ++i) {
    Eigen::MatrixXd tau2;
    Eigen::VectorXd lambda2 = Eigen::VectorXd::Constant(2, l2);
    draw_shrinkage_latents(L, R, FacloadPrior::rowwise_ng, a, c, d, tau2, lambda2, rng);
    tau_restricted += tau2(0, 0);
    tau_free += tau2(1, 0);
    ratio += lambda2(1) * (d + 0.5 * tau2(1, 0)) / (c + 1.0);
  }
  // Gamma(a, a l2 / 2) has mean 2 / l2.
  CHECK(tau_restricted / reps == doctest::Approx(2.0 / l2).epsilon(0.02));
  // GIG(1/2, chi, psi) is the reciprocal of an inverse Gaussian.
  const double chi = 0.49, psi = l2;
  CHECK(tau_free / reps == doctest::Approx(std::sqrt(chi / psi) + 1.0 / psi).epsilon(0.02));
  CHECK(ratio / reps == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("column-wise shrinkage has one scale per factor") {
  const Eigen::MatrixXd L = Eigen::MatrixXd::Constant(3, 2, 0.5);
  const BoolMatrix R = BoolMatrix::Constant(3, 2, false);
  RngStream rng(6, 0);
  Eigen::MatrixXd tau2;
  Eigen::VectorXd lambda2 = Eigen::VectorXd::Ones(2);
  draw_shrinkage_latents(L, R, FacloadPrior::colwise_ng, Eigen::MatrixXd::Constant(3, 2, 0.1), 1.0, 1.0, tau2,
                         lambda2, rng);
  CHECK(tau2.rows() == 3);
  CHECK((tau2.array() > 0.0).all());
  CHECK((lambda2.array() > 0.0).all());
  Eigen::VectorXd wrong = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(draw_shrinkage_latents(L, R, FacloadPrior::colwise_ng, Eigen::MatrixXd::Ones(3, 2), 1.0, 1.0, tau2,
                                         wrong, rng),
                  DimensionError);
}

TEST_CASE("series ordering and automatic restriction") {
  Eigen::MatrixXd L(4, 2);
  L << 0.2, 0.1, 0.9, 0.05, 0.1, 0.8, 0.6, 0.5;
  CHECK(preorder_from_loadings(L) == std::vector<int>{2, 3, 1, 4});
  const BoolMatrix R = find_restrict_from_loadings(L);
  CHECK(R.rows() == 4);
  CHECK(R.count() == 1);
  CHECK(R(1, 1));

  const FsvSimulation sim = two_factor_data(600, 7);
  const Eigen::MatrixXd S = static_factor_loadings(sim.y, 2);
  CHECK(S.rows() == 4);
  CHECK(S.cols() == 2);
  const BoolMatrix auto_r = find_restrict(sim.y, 2);
  CHECK(auto_r.count() == 1);
  CHECK((auto_r.col(0).array() == false).all());
}

TEST_CASE("predictive correlation has a unit diagonal") {
  const FsvDraws d = small_fit(KeepTime::last, 10);
  RngStream rng(8, 0);
  const Eigen::Tensor<double, 4> c = predcor(d, {1, 3}, 2, rng);
  CHECK(c.dimension(2) == 2 * d.kept());
  CHECK(c.dimension(3) == 2);
  for (Eigen::Index s = 0; s < c.dimension(2); s += 7)
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(c(i, i, s, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(predcov(d, {0}, 1, rng), InvalidParameter);
  CHECK_THROWS_AS(predloglik(d, Eigen::MatrixXd::Zero(2, 4), {1}, 1, rng), DimensionError);
}

TEST_CASE("single series without loadings reduces to univariate prediction") {
  FsvDraws d;
  d.m = 1;
  d.r = 1;
  d.loadings = {Eigen::MatrixXd::Zero(1, 1)};
  d.logvar_last = Eigen::RowVector2d(0.4, 0.0);
  d.mu = Eigen::RowVector2d(-0.5, 0.0);
  d.phi = Eigen::RowVector2d(0.9, 0.5);
  d.sigma = Eigen::RowVector2d(0.3, 0.1);
  d.beta = Eigen::MatrixXd::Zero(1, 1);
  const double y = 0.8;
  const double mean = -0.5 + 0.9 * 0.9, sd = 0.3;
  double integral = 0.0;
  const int grid = 4000;
  const double lo = mean - 10.0 * sd, step = 20.0 * sd / grid;
  for (int i = 0; i <= grid; ++i) {
    const double h = lo + step * i;
    const double w = (i == 0 || i == grid) ? 0.5 : 1.0;
    integral += w * step * normal_density(h - mean, sd * sd) * normal_density(y, std::exp(h));
  }
  RngStream rng(9, 0);
  const Eigen::VectorXd ll = predloglik(d, Eigen::MatrixXd::Constant(1, 1, y), {1}, 200000, rng);
  CHECK(ll(0) == doctest::Approx(std::log(integral)).epsilon(0.005));
}

TEST_CASE("unchecked sampler runs with one series and a zero loading") {
  RngStream rng(10, 0);
  Eigen::MatrixXd Y(100, 1);
  for (auto& v : Y.reshaped()) v = rng.normal();
  FsvConfig c;
  c.factors = 1;
  c.restrict = RestrictKind::matrix;
  c.restrict_matrix = BoolMatrix::Constant(1, 1, true);
  CHECK_THROWS_AS(FsvSampler(Y, c, {}), ConfigError);
  FsvSampler s(Y, c, {}, FsvSampler::Unchecked{});
  s.initialize(rng);
  for (int i = 0; i < 50; ++i) s.sweep(rng);
  CHECK(s.loadings()(0, 0) == 0.0);
  CHECK(s.logvar().rows() == 2);
  CHECK(std::isfinite(s.process_params(0).mu));
}

TEST_CASE("configuration validation") {
  FsvConfig c;
  c.factors = 3;
  CHECK_THROWS_AS(validate(c, 3, 100), ConfigError);
  c.factors = 1;
  c.runningstore = 7;
  CHECK_THROWS_AS(validate(c, 3, 100), ConfigError);
  c.runningstore = 6;
  c.runningstoremoments = 3;
  CHECK_THROWS_AS(validate(c, 3, 100), ConfigError);
  c.runningstoremoments = 2;
  c.restrict = RestrictKind::matrix;
  c.restrict_matrix = BoolMatrix::Constant(3, 1, true);
  CHECK_THROWS(validate(c, 3, 100));
  c.restrict_matrix = BoolMatrix::Constant(2, 1, false);
  CHECK_THROWS(validate(c, 3, 100));
  c.restrict = RestrictKind::none;
  c.samplefac = false;
  CHECK_THROWS(validate(c, 3, 100));
  CHECK(parse_restrict("upper") == RestrictKind::upper);
  CHECK(parse_facload_prior("colwiseng") == FacloadPrior::colwise_ng);
  CHECK_THROWS_AS(parse_facload_prior("horseshoe"), ConfigError);
}
