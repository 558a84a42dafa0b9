#include <doctest.h>

#include <cmath>
#include <vector>

#include "sv/distribution.hpp"
#include "sv/errors.hpp"
#include "sv/gig.hpp"
#include "sv/rng.hpp"
#include "sv/tridiag.hpp"
#include "support/oracles.hpp"

using namespace sv;

namespace {

template <typename Draw>
std::pair<double, double> sample_moments(int n, Draw&& draw) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  return {m, s2 / n - m * m};
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  std::vector<double> xa, xb, xc, xd;
  for (int i = 0; i < 100; ++i) {
    xa.push_back(a.uniform());
    xb.push_back(b.uniform());
    xc.push_back(c.uniform());
    xd.push_back(d.uniform());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
  for (double u : xa) CHECK((u > 0.0 && u < 1.0));
}

TEST_CASE("variate generators match their moments") {
  RngStream rng(7, 0);
  const int n = 200000;
  auto [mn, vn] = sample_moments(n, [&] { return rng.normal(1.0, 2.0); });
  CHECK(std::abs(mn - 1.0) < 4.0 * 2.0 / std::sqrt(n));
  CHECK(vn == doctest::Approx(4.0).epsilon(0.02));
  auto [mg, vg] = sample_moments(n, [&] { return rng.gamma(2.5, 3.0); });
  CHECK(std::abs(mg - 2.5 / 3.0) < 4.0 * std::sqrt(2.5) / 3.0 / std::sqrt(n));
  CHECK(vg == doctest::Approx(2.5 / 9.0).epsilon(0.02));
  auto [mb, vb] = sample_moments(n, [&] { return rng.beta(2.0, 5.0); });
  CHECK(mb == doctest::Approx(2.0 / 7.0).epsilon(0.01));
  CHECK(vb == doctest::Approx(10.0 / (49.0 * 8.0)).epsilon(0.03));
}

TEST_CASE("quantile inverts cdf for every continuous family") {
  const std::vector<Distribution> laws{dist::Normal{0.0, 100.0}, dist::Beta{5.0, 1.5},
                                       dist::TranslatedBeta{5.0, 1.5}, dist::Gamma{0.5, 0.5},
                                       dist::InverseGamma{2.5, 0.025}, dist::Exponential{0.1}};
  for (const auto& d : laws) {
    for (double p : {0.001, 0.05, 0.3, 0.5, 0.77, 0.999}) {
      CHECK(cdf(d, quantile(d, p)) == doctest::Approx(p).epsilon(1e-9));
    }
  }
}

TEST_CASE("distribution draws agree with the analytic mean and variance") {
  RngStream rng(11, 0);
  const std::vector<Distribution> laws{dist::Normal{-1.0, 3.0}, dist::TranslatedBeta{5.0, 1.5}, dist::Gamma{0.5, 0.5},
                                       dist::InverseGamma{5.0, 2.0}, dist::Exponential{0.1}};
  const int n = 200000;
  for (const auto& d : laws) {
    auto [m, v] = sample_moments(n, [&] { return draw(d, rng); });
    CHECK(std::abs(m - mean(d)) < 5.0 * std::sqrt(variance(d) / n));
    CHECK(v == doctest::Approx(variance(d)).epsilon(0.05));
  }
}

TEST_CASE("translated beta has the documented support and mean") {
  const Distribution d = dist::TranslatedBeta{5.0, 1.5};
  CHECK(mean(d) == doctest::Approx(2.0 * 5.0 / 6.5 - 1.0));
  CHECK(support(d).first == -1.0);
  CHECK(support(d).second == 1.0);
  CHECK(cdf(d, -1.0) == 0.0);
}

TEST_CASE("invalid distribution parameters are rejected") {
  CHECK_THROWS_AS(validate(Distribution(dist::Normal{0.0, -1.0})), InvalidParameter);
  CHECK_THROWS_AS(validate(Distribution(dist::Gamma{0.0, 1.0})), InvalidParameter);
  CHECK_THROWS_AS(parse_distribution("normal(0)"), ConfigError);
  CHECK_THROWS_AS(parse_distribution("weibull(1,2)"), ConfigError);
}

TEST_CASE("distribution text round-trips through the config format") {
  for (const char* text : {"normal(0, 100)", "gamma(0.5, 0.5)", "exponential(0.1)", "constant(0)"}) {
    const Distribution d = parse_distribution(text);
    CHECK(parse_distribution(to_config_string(d)) == d);
  }
}

TEST_CASE("gig sampler matches its mean across regimes") {
  RngStream rng(3, 0);
  const std::vector<Gig> cases{{0.5, 1.0, 2.0}, {-0.4, 0.3, 0.02}, {2.0, 0.5, 4.0},
                               {-1.5, 2.0, 0.5}, {0.6, 0.0, 2.0}, {-3.5, 3.0, 0.0}};
  const int n = 100000;
  for (const auto& g : cases) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += draw(g, rng);
    CHECK(s / n == doctest::Approx(mean(g)).epsilon(0.03));
  }
  CHECK_THROWS_AS(validate(Gig{-0.5, 0.0, 1.0}), InvalidParameter);
}

TEST_CASE("gig draws follow the density") {
  RngStream rng(5, 0);
  const Gig g{-0.4, 0.3, 0.8};
  std::vector<double> x(20000);
  for (auto& v : x) v = draw(g, rng);
  // cdf by quadrature of the log density on a log grid
  const int grid = 20000;
  std::vector<double> z(grid), c(grid);
  const double lo = std::log(1e-8), hi = std::log(200.0), h = (hi - lo) / (grid - 1);
  double acc = 0.0;
  for (int i = 0; i < grid; ++i) {
    z[static_cast<std::size_t>(i)] = std::exp(lo + h * i);
    acc += std::exp(log_density(g, z[static_cast<std::size_t>(i)])) * z[static_cast<std::size_t>(i)] * h;
    c[static_cast<std::size_t>(i)] = acc;
  }
  for (auto& v : c) v /= acc;
  auto cdf_at = [&](double v) {
    const auto it = std::lower_bound(z.begin(), z.end(), v);
    if (it == z.end()) return 1.0;
    return c[static_cast<std::size_t>(it - z.begin())];
  };
  const double d = testing::ks_distance(x, cdf_at);
  CHECK(testing::ks_p_value(d, x.size()) > 1e-3);
}

TEST_CASE("tridiagonal solver and sampler match dense algebra") {
  const Eigen::Index n = 8;
  RngStream rng(1, 0);
  Eigen::VectorXd diag(n), off(n - 1), lin(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    diag(i) = 3.0 + rng.uniform();
    lin(i) = rng.normal();
  }
  for (Eigen::Index i = 0; i < n - 1; ++i) off(i) = -1.0 + 0.5 * rng.uniform();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  P.diagonal() = diag;
  for (Eigen::Index i = 0; i < n - 1; ++i) P(i, i + 1) = P(i + 1, i) = off(i);
  const Eigen::VectorXd dense = P.ldlt().solve(lin);
  CHECK((tridiagonal_mean(diag, off, lin) - dense).cwiseAbs().maxCoeff() < 1e-12);

  const int draws = 100000;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < draws; ++k) {
    const Eigen::VectorXd x = sample_tridiagonal(diag, off, lin, rng) - dense;
    s += x;
    ss += x * x.transpose();
  }
  const Eigen::MatrixXd cov = P.inverse();
  CHECK((s / draws).cwiseAbs().maxCoeff() < 5.0 * std::sqrt(cov.diagonal().maxCoeff() / draws));
  CHECK(((ss / draws) - cov).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("tridiagonal factorization rejects bad shapes") {
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(4), off = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(factor_tridiagonal(diag, off), DimensionError);
}
