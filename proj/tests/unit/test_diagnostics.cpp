#include <doctest.h>

#include <cmath>
#include <vector>

#include "sv/diagnostics.hpp"
#include "sv/errors.hpp"
#include "sv/geweke.hpp"
#include "sv/normality.hpp"
#include "sv/rng.hpp"
#include "sv/simulate.hpp"
#include "support/oracles.hpp"

using namespace sv;

namespace {

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd ar1(Eigen::Index n, double phi, std::uint64_t seed) {
  RngStream rng(seed, 0);
  Eigen::VectorXd x(n);
  double v = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v = phi * v + rng.normal();
    x(i) = v;
  }
  return x;
}

}  // namespace

TEST_CASE("ess of iid and autocorrelated chains") {
  const Eigen::Index n = 100000;
  const EssResult iid = effective_sample_size(ar1(n, 0.0, 1));
  CHECK(iid.ess == doctest::Approx(static_cast<double>(n)).epsilon(0.1));
  const double phi = 0.9;
  const EssResult ac = effective_sample_size(ar1(n, phi, 2));
  CHECK(ac.ess == doctest::Approx(n * (1.0 - phi) / (1.0 + phi)).epsilon(0.2));
  CHECK_FALSE(ac.degenerate);
}

TEST_CASE("ess is invariant under affine maps") {
  const Eigen::VectorXd x = ar1(5000, 0.7, 3);
  const double a = effective_sample_size(x).ess;
  const double b = effective_sample_size((3.5 * x.array() - 100.0).matrix()).ess;
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("constant chains are flagged") {
  const EssResult e = effective_sample_size(Eigen::VectorXd::Constant(100, 2.5));
  CHECK(e.degenerate);
  CHECK(e.ess == 0.0);
  CHECK_THROWS_AS(effective_sample_size(Eigen::VectorXd::Constant(1, 0.0)), InvalidParameter);
}

TEST_CASE("autocorrelation of an ar1 chain") {
  const Eigen::VectorXd rho = autocorrelation(ar1(200000, 0.6, 4), 3);
  CHECK(rho(0) == doctest::Approx(1.0));
  CHECK(rho(1) == doctest::Approx(0.6).epsilon(0.02));
  CHECK(rho(2) == doctest::Approx(0.36).epsilon(0.04));
}

TEST_CASE("summary of identical draws") {
  const SummaryRow r = summarize_values("x", {Eigen::VectorXd::Constant(50, 1.25)}, {0.05, 0.5, 0.95});
  CHECK(r.mean == 1.25);
  CHECK(r.sd == 0.0);
  CHECK((r.quantiles.array() == 1.25).all());
  CHECK(r.ess_degenerate);
}

TEST_CASE("summary pools chains and sums ess") {
  const Eigen::VectorXd a = ar1(2000, 0.0, 5), b = ar1(2000, 0.0, 6);
  const SummaryRow r = summarize_values("x", {a, b}, {0.5});
  CHECK(r.ess == doctest::Approx(effective_sample_size(a).ess + effective_sample_size(b).ess));
  Eigen::VectorXd all(4000);
  all << a, b;
  CHECK(r.mean == doctest::Approx(all.mean()));
}

TEST_CASE("summary json rounds to four significant digits") {
  SummaryTable t;
  t.quantiles = {0.5};
  SummaryRow r;
  r.name = "mu";
  r.mean = -9.876543;
  r.sd = 0.0123456;
  r.quantiles = Eigen::VectorXd::Constant(1, 1.23456);
  r.ess = 1234.56;
  t.rows.push_back(r);
  const auto j = to_json(t);
  CHECK(j["rows"][0]["mean"].get<double>() == -9.877);
  CHECK(j["rows"][0]["sd"].get<double>() == 0.01235);
  CHECK(j["rows"][0]["quantiles"]["0.5"].get<double>() == 1.235);
  CHECK(j["rows"][0]["ess"].get<double>() == 1235.0);
  CHECK(to_text(t).find("mu") != std::string::npos);
}

TEST_CASE("shapiro-wilk matches reference values") {
  struct Case {
    std::vector<double> x;
    double w, p;
  };
  const std::vector<Case> cases{
      {{148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236}, 0.7888146948631716, 0.006703814061898823},
      {{2.1, -0.3, 1.7}, 0.8709677419354838, 0.2982758521542357},
      {{0.3456, 0.8216, 0.3304, -1.3032, 0.9054, 0.4464, -0.537, 0.5811, 0.3646, 0.2941, 0.0284, 0.5467, -0.7365, -0.1629,
        -0.4821, 0.5988, 0.0397, -0.2925, -0.7819, -0.2572, 0.0081, -0.2756, 1.2941, 1.0067, -2.7112, -1.889, -0.1748,
        -0.4222, 0.2136, 0.2173, 2.1178, -1.112, -0.3776, 2.0428, 0.6467, 0.6631, -0.514, -1.6481, 0.1675, 0.109},
       0.965084706645354, 0.24888858936832015},
      {{3.7561, 0.8013, 0.5656, 0.6062, 1.1665, 0.529, 0.2684, 1.0267, 1.4422, 0.8103, 2.2411, 0.1489, 0.3447, 0.1251,
        0.0265, 0.6173, 0.8733, 2.0987, 0.7027, 0.216, 0.0071, 0.2683, 0.5196, 1.2441, 0.2768},
       0.7913689073735461, 0.00016376052662622035},
      {{0.1, 0.4, 0.5, 0.9, 1.3, 2.0, 2.2, 3.5}, 0.9257419438028522, 0.47815874654701934}};
  for (const auto& c : cases) {
    const NormalityResult r = shapiro_wilk(vec(c.x));
    CHECK(r.statistic == doctest::Approx(c.w).epsilon(1e-4));
    CHECK(r.p_value == doctest::Approx(c.p).epsilon(2e-3));
  }
  CHECK_THROWS_AS(shapiro_wilk(vec({1.0, 2.0})), InvalidParameter);
}

TEST_CASE("anderson-darling matches reference values") {
  const std::vector<double> x1{-0.4667, 0.2355, 0.7595, -1.6488, 0.2544, 1.2246, -0.2975, -0.8108, 0.7522, 0.2534,
                               0.8959,  -0.3452, -1.4818, -0.11, -0.4458, 0.7753, 0.1936, -1.6308, -1.1952, 0.8838,
                               0.6798,  -0.6402, -0.001, 0.4456, 0.4684, 0.8762, 0.2565, -0.0948, -0.2588, 1.0557};
  const NormalityResult r1 = anderson_darling(vec(x1));
  CHECK(r1.statistic == doctest::Approx(0.5331249420023987).epsilon(1e-6));
  CHECK(r1.p_value == doctest::Approx(0.15875843647780064).epsilon(1e-6));
  const std::vector<double> x2{
      -2.7253, -1.3957, 1.0377,  1.1688, -0.8975, -0.7314, 0.9513,  -0.6614, 0.4235,  -2.1532, -2.3588, -1.2298,
      0.7371,  -0.3149, -1.0744, -0.71,  -0.0491, -0.2154, -0.9326, -1.9515, 3.6275,  -2.4258, -0.371,  0.6003,
      0.3211,  -0.0782, 0.2644,  0.4335, 0.179,   -1.9521, -1.6337, 0.9414,  0.1334,  0.1508,  1.0023,  0.5995,
      -0.7252, -0.2706, -0.3614, -1.6503, -0.3687, 0.9999, -0.9835, 1.1292,  0.3417,  -1.9067, -1.163,  -1.2224,
      0.6413,  -1.7972, -0.3486, -0.0607, 0.9735,  0.072,  -0.7522, -1.1478, 0.0326,  -1.4312, -1.0181, -0.5811};
  const NormalityResult r2 = anderson_darling(vec(x2));
  CHECK(r2.statistic == doctest::Approx(0.2824236861481282).epsilon(1e-6));
  CHECK(r2.p_value == doctest::Approx(0.6246599815447963).epsilon(1e-6));
}

TEST_CASE("normality test switches family with sample size") {
  RngStream rng(1, 0);
  Eigen::VectorXd x(6000);
  for (auto& v : x) v = rng.normal();
  CHECK(normality_test(x).method == "anderson-darling");
  CHECK(normality_test(x.head(5000)).method == "shapiro-wilk");
  CHECK(standard_normal_quantile(standard_normal_cdf(1.3)) == doctest::Approx(1.3));
}

TEST_CASE("transformed prior draws give uniform p-values") {
  const PriorSpec priors = default_priors(ModelKind::svtl);
  RngStream rng(77, 0);
  std::vector<double> pvals;
  for (int rep = 0; rep < 150; ++rep) {
    Eigen::MatrixXd para(300, kParamColumns);
    for (Eigen::Index k = 0; k < para.rows(); ++k) {
      const SvParams p = draw_prior_params(priors, 0, rng);
      para.row(k) << p.mu, p.phi, p.sigma, p.nu, p.rho;
    }
    const auto [names, z] = geweke_transform(priors, ModelKind::svtl, para, Eigen::MatrixXd(300, 0));
    CHECK(names.size() == 5);
    pvals.push_back(normality_test(z.col(static_cast<Eigen::Index>(rep % 5))).p_value);
  }
  const double d = testing::ks_distance(pvals, [](double u) { return std::clamp(u, 0.0, 1.0); });
  CHECK(testing::ks_p_value(d, pvals.size()) > 0.001);
}

TEST_CASE("geweke harness rejects priors without finite variance") {
  PriorSpec p = default_priors(ModelKind::sv);
  p.sigma2 = dist::InverseGamma{1.5, 1.0};
  GewekeConfig g;
  g.kept = 10;
  CHECK_THROWS_AS(geweke_validate(ModelKind::sv, p, g), InconsistentSpec);
}

TEST_CASE("short geweke run produces a report per free parameter") {
  PriorSpec p = default_priors(ModelKind::sv);
  p.mu = dist::Normal{0.0, 1.0};
  GewekeConfig g;
  g.kept = 500;
  g.thin = 10;
  g.burnin = 200;
  g.seed = 3;
  const GewekeReport r = geweke_validate(ModelKind::sv, p, g);
  REQUIRE(r.parameters.size() == 3);
  CHECK(r.transformed.rows() == 500);
  CHECK(r.parameters[0].name == "mu");
  const auto j = to_json(r);
  CHECK(j["parameters"].size() == 3);
}
