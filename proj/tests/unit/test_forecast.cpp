#include <doctest.h>

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "sv/design.hpp"
#include "sv/empirical.hpp"
#include "sv/errors.hpp"
#include "sv/forecast.hpp"
#include "sv/simulate.hpp"
#include "sv/sv_sampler.hpp"

using namespace sv;

namespace {

SvDraws short_fit(const Eigen::VectorXd& y, const DesignSpec& spec, const Eigen::MatrixXd& X = {}) {
  SamplerConfig c;
  c.draws = 400;
  c.burnin = 100;
  c.seed = 3;
  return run_sampler(make_design(y, spec, X), ModelKind::sv, default_priors(ModelKind::sv), c);
}

Eigen::VectorXd simulated(Eigen::Index n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  SvParams p;
  p.mu = -9.0;
  p.phi = 0.95;
  p.sigma = 0.3;
  p.beta = Eigen::VectorXd(0);
  return simulate_sv(p, n, Eigen::MatrixXd(n, 0), {}, rng).y;
}

}  // namespace

TEST_CASE("first window width and scored indices") {
  CHECK(first_window_width(1000, 30, 1) == 970);
  CHECK(first_window_width(1000, 30, 3) == 968);
  const WindowBounds first = window_bounds(1000, 30, 1, RefitWindow::moving, 1);
  CHECK(first.start == 1);
  CHECK(first.end == 970);
  CHECK(first.target == 971);
  const WindowBounds last = window_bounds(1000, 30, 1, RefitWindow::moving, 30);
  CHECK(last.start == 30);
  CHECK(last.end == 999);
  CHECK(last.target == 1000);
  const WindowBounds grow = window_bounds(1000, 30, 1, RefitWindow::expanding, 30);
  CHECK(grow.start == 1);
  CHECK(grow.end == 999);
  CHECK(window_bounds(1000, 30, 1, RefitWindow::expanding, 1).end == first.end);
  CHECK_THROWS_AS(first_window_width(31, 30, 1), DataError);
  CHECK(parse_refit_window("expanding") == RefitWindow::expanding);
  CHECK_THROWS_AS(parse_refit_window("sliding"), ConfigError);
}

TEST_CASE("observation density is normal or unit-variance t") {
  const double x = 0.5, loc = 0.1, h = 0.2;
  const double normal = -0.5 * std::log(2.0 * M_PI) - 0.5 * h - 0.5 * (x - loc) * (x - loc) / std::exp(h);
  CHECK(log_observation_density(x, loc, h, std::numeric_limits<double>::infinity()) == doctest::Approx(normal));
  const double nu = 6.0;
  const double scale = std::exp(0.5 * h) * std::sqrt((nu - 2.0) / nu);
  const double t = std::log(boost::math::pdf(boost::math::students_t(nu), (x - loc) / scale) / scale);
  CHECK(log_observation_density(x, loc, h, nu) == doctest::Approx(t));
}

TEST_CASE("predictive likelihood averages conditional densities") {
  PredictiveDraws pd;
  pd.h_future.resize(2, 1);
  pd.h_future << 0.0, std::log(4.0);
  pd.location = Eigen::MatrixXd::Zero(2, 1);
  pd.y_future = Eigen::MatrixXd::Zero(2, 1);
  pd.nu = Eigen::VectorXd::Constant(2, std::numeric_limits<double>::infinity());
  const double x = 1.0;
  const double d1 = std::exp(-0.5) / std::sqrt(2.0 * M_PI);
  const double d2 = std::exp(-0.125) / std::sqrt(8.0 * M_PI);
  const PredictiveLikelihood pl = predictive_likelihood(pd, x, 1);
  CHECK(pl.value == doctest::Approx(0.5 * (d1 + d2)));
  CHECK(pl.log_value == doctest::Approx(std::log(0.5 * (d1 + d2))));
}

TEST_CASE("prediction shapes and argument errors") {
  const Eigen::VectorXd y = simulated(200, 1);
  const SvDraws d = short_fit(y, DesignSpec::none());
  RngStream rng(1, 9);
  const PredictiveDraws pd = predict(d, 5, {}, rng);
  CHECK(pd.draws() == 400);
  CHECK(pd.horizon() == 5);
  CHECK(pd.y_future.allFinite());
  CHECK_THROWS_AS(predict(d, 0, {}, rng), InvalidParameter);
  const Eigen::VectorXd q = predictive_quantile(pd, {0.05, 0.5, 0.95}, 3);
  CHECK(q(0) < q(1));
  CHECK(q(1) < q(2));
  CHECK_THROWS_AS(predictive_quantile(pd, {1.5}, 1), InvalidParameter);

  Eigen::MatrixXd X(200, 1);
  for (Eigen::Index i = 0; i < 200; ++i) X(i, 0) = std::sin(0.1 * static_cast<double>(i));
  const SvDraws dx = short_fit(y, DesignSpec::covariates(), X);
  CHECK_THROWS_AS(predict(dx, 3, {}, rng), DataError);
  CHECK_THROWS_AS(predict(dx, 3, Eigen::MatrixXd::Zero(3, 2), rng), DimensionError);
  CHECK_NOTHROW(predict(dx, 3, Eigen::MatrixXd::Zero(3, 1), rng));
}

TEST_CASE("ar designs feed simulated values forward") {
  const Eigen::VectorXd y = simulated(200, 2);
  const SvDraws d = short_fit(y, DesignSpec::ar(1));
  RngStream rng(2, 9);
  const PredictiveDraws pd = predict(d, 4, {}, rng);
  const Eigen::MatrixXd beta = d.beta();
  for (Eigen::Index k = 0; k < 5; ++k) {
    CHECK(pd.location(k, 0) == doctest::Approx(beta(k, 0) + beta(k, 1) * y(199)));
    CHECK(pd.location(k, 1) == doctest::Approx(beta(k, 0) + beta(k, 1) * pd.y_future(k, 0)));
  }
}

TEST_CASE("expanding and moving windows agree on the first window") {
  const Eigen::VectorXd y = simulated(130, 3);
  SamplerConfig c;
  c.draws = 300;
  c.burnin = 100;
  c.seed = 10;
  RollingConfig rc;
  rc.forecast_length = 3;
  rc.refit_window = RefitWindow::moving;
  const RollingResult mov = rolling_estimate(y, {}, ModelKind::sv, default_priors(ModelKind::sv), rc, c);
  rc.refit_window = RefitWindow::expanding;
  const RollingResult exp = rolling_estimate(y, {}, ModelKind::sv, default_priors(ModelKind::sv), rc, c);
  REQUIRE(mov.windows.size() == 3);
  CHECK(mov.first_width == 127);
  CHECK(mov.windows[0].para == exp.windows[0].para);
  CHECK(mov.windows[0].log_predlik == exp.windows[0].log_predlik);
  CHECK(mov.windows[0].quantiles == exp.windows[0].quantiles);
  CHECK(mov.windows[2].bounds.start == 3);
  CHECK(exp.windows[2].bounds.start == 1);
  for (int j = 0; j < 3; ++j) {
    CHECK(mov.windows[static_cast<std::size_t>(j)].bounds.target == 128 + j);
    CHECK(mov.windows[static_cast<std::size_t>(j)].observed == y(127 + j));
  }
}

TEST_CASE("empirical quantiles use linear interpolation") {
  Eigen::VectorXd x(4);
  x << 4, 1, 3, 2;
  const Eigen::VectorXd q = quantiles(x, {0.25, 0.5, 1.0 / 3.0});
  CHECK(q(0) == doctest::Approx(1.75));
  CHECK(q(1) == doctest::Approx(2.5));
  CHECK(q(2) == doctest::Approx(2.0));
  Eigen::VectorXd big(3);
  big << 1000.0, 1000.0, 1000.0;
  CHECK(log_mean_exp(big) == doctest::Approx(1000.0));
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(3.0)));
}
