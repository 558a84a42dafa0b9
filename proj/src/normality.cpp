#include "sv/normality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "sv/empirical.hpp"
#include "sv/errors.hpp"

namespace sv {

namespace {

double poly(const double* c, int n, double x) {
  double r = 0.0;
  for (int i = n - 1; i >= 0; --i) r = r * x + c[i];
  return r;
}

}  // namespace

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw InvalidParameter("probability must lie in [0, 1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

NormalityResult shapiro_wilk(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  if (n < 3 || n > 5000) throw InvalidParameter("Shapiro-Wilk needs 3 to 5000 observations");
  if (!x.allFinite()) throw DataError("normality test needs finite data");
  const Eigen::VectorXd s = sorted_copy(x);
  const double ss = (s.array() - s.mean()).square().sum();
  NormalityResult out{"shapiro-wilk", 1.0, 1.0};
  if (ss <= 0.0) {
    out.p_value = 0.0;
    return out;
  }

  const double dn = static_cast<double>(n);
  Eigen::VectorXd a(n);
  if (n == 3) {
    a << -std::sqrt(0.5), 0.0, std::sqrt(0.5);
  } else {
    Eigen::VectorXd m(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      m(i) = standard_normal_quantile((static_cast<double>(i + 1) - 0.375) / (dn + 0.25));
    }
    const double mm = m.squaredNorm();
    const double u = 1.0 / std::sqrt(dn);
    static const double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static const double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    const double an = m(n - 1) / std::sqrt(mm) + poly(c1, 6, u);
    a = m;
    if (n > 5) {
      const double an1 = m(n - 2) / std::sqrt(mm) + poly(c2, 6, u);
      const double eps = (mm - 2.0 * m(n - 1) * m(n - 1) - 2.0 * m(n - 2) * m(n - 2)) /
                         (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
      a /= std::sqrt(eps);
      a(n - 1) = an;
      a(n - 2) = an1;
      a(0) = -an;
      a(1) = -an1;
    } else {
      const double eps = (mm - 2.0 * m(n - 1) * m(n - 1)) / (1.0 - 2.0 * an * an);
      a /= std::sqrt(eps);
      a(n - 1) = an;
      a(0) = -an;
    }
  }

  const double w = std::min(1.0, std::pow(a.dot(s), 2) / ss);
  out.statistic = w;
  if (n == 3) {
    out.p_value = std::max(0.0, 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::asin(std::sqrt(0.75))));
    return out;
  }
  double z;
  if (n <= 11) {
    const double gamma = -2.273 + 0.459 * dn;
    const double mu = 0.5440 - 0.39978 * dn + 0.025054 * dn * dn - 0.0006714 * dn * dn * dn;
    const double sigma = std::exp(1.3822 - 0.77857 * dn + 0.062767 * dn * dn - 0.0020322 * dn * dn * dn);
    const double lw = std::log1p(-w);
    if (gamma - lw <= 0.0) {
      out.p_value = 0.0;
      return out;
    }
    z = (-std::log(gamma - lw) - mu) / sigma;
  } else {
    const double ln = std::log(dn);
    const double mu = -1.5861 - 0.31082 * ln - 0.083751 * ln * ln + 0.0038915 * ln * ln * ln;
    const double sigma = std::exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln * ln);
    z = (std::log1p(-w) - mu) / sigma;
  }
  out.p_value = 1.0 - standard_normal_cdf(z);
  return out;
}

NormalityResult anderson_darling(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  if (n < 8) throw InvalidParameter("Anderson-Darling needs at least 8 observations");
  if (!x.allFinite()) throw DataError("normality test needs finite data");
  const Eigen::VectorXd s = sorted_copy(x);
  const double mean = s.mean();
  const double sd = std::sqrt((s.array() - mean).square().sum() / static_cast<double>(n - 1));
  NormalityResult out{"anderson-darling", std::numeric_limits<double>::infinity(), 0.0};
  if (!(sd > 0.0)) return out;

  const double dn = static_cast<double>(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = (s(i) - mean) / sd;
    const double hi = (s(n - 1 - i) - mean) / sd;
    // log Phi(lo) + log(1 - Phi(hi)), both via erfc for tail accuracy
    const double term = std::log(0.5 * std::erfc(-lo / std::numbers::sqrt2)) +
                        std::log(0.5 * std::erfc(hi / std::numbers::sqrt2));
    acc += (2.0 * static_cast<double>(i) + 1.0) * term;
  }
  const double a2 = -dn - acc / dn;
  const double a = a2 * (1.0 + 0.75 / dn + 2.25 / (dn * dn));
  double p;
  if (a < 0.2) {
    p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  } else if (a < 0.34) {
    p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  } else if (a < 0.6) {
    p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  } else if (a < 10.0) {
    p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  } else {
    p = 0.0;
  }
  out.statistic = a2;
  out.p_value = std::clamp(p, 0.0, 1.0);
  return out;
}

NormalityResult normality_test(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return x.size() <= 5000 ? shapiro_wilk(x) : anderson_darling(x);
}

}  // namespace sv
