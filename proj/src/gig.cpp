#include "sv/gig.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "sv/errors.hpp"
#include "sv/format.hpp"

namespace sv {

namespace {

constexpr double kTiny = 10.0 * std::numeric_limits<double>::epsilon();

double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Standardized form: density proportional to x^(lambda-1) exp(-omega/2 (x + 1/x)),
// lambda >= 0.
double rou_noshift(double lambda, double omega, RngStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

double rou_shift(double lambda, double omega, RngStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Roots of the cubic y^3 + a y^2 + b y + c = 0 bound the shifted region.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Constant hat on the log-concave part, valid for 0 <= lambda < 1, omega <= 1.
double new_approach(double lambda, double omega, RngStream& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  const double a0 = k0 * x0;
  double k1 = 0.0, a1 = 0.0, k2 = 0.0, a2 = 0.0;
  if (x0 >= 2.0 / omega) {
    k2 = std::pow(x0, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    a1 = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                       : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = a0 + a1 + a2;

  for (;;) {
    double v = total * rng.uniform();
    double x = 0.0, hx = 0.0;
    if (v <= a0) {
      x = x0 * v / a0;
      hx = k0;
    } else if ((v -= a0) <= a1) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= a1;
      const double lo = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

void validate(const Gig& g) {
  const bool ok = std::isfinite(g.lambda) && std::isfinite(g.chi) && std::isfinite(g.psi) && g.chi >= 0.0 &&
                  g.psi >= 0.0 && !(g.chi == 0.0 && g.lambda <= 0.0) && !(g.psi == 0.0 && g.lambda >= 0.0);
  if (!ok) {
    throw InvalidParameter("invalid GIG parameters lambda=" + format_double(g.lambda) +
                           ", chi=" + format_double(g.chi) + ", psi=" + format_double(g.psi));
  }
}

double draw(const Gig& g, RngStream& rng) {
  validate(g);
  if (g.chi < kTiny && g.lambda > 0.0) return rng.gamma(g.lambda, g.psi / 2.0);
  if (g.psi < kTiny && g.lambda < 0.0) return 1.0 / rng.gamma(-g.lambda, g.chi / 2.0);
  const double lambda = std::abs(g.lambda);
  const double alpha = std::sqrt(g.chi / g.psi);
  const double omega = std::sqrt(g.psi * g.chi);
  double x = 0.0;
  if (lambda > 2.0 || omega > 3.0) {
    x = rou_shift(lambda, omega, rng);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = rou_noshift(lambda, omega, rng);
  } else {
    x = new_approach(lambda, omega, rng);
  }
  return g.lambda < 0.0 ? alpha / x : alpha * x;
}

double log_density(const Gig& g, double x) {
  validate(g);
  if (!(x > 0.0) || !std::isfinite(x)) return -std::numeric_limits<double>::infinity();
  double log_norm = 0.0;
  if (g.psi == 0.0) {
    log_norm = -g.lambda * std::log(0.5 * g.chi) - boost::math::lgamma(-g.lambda);
  } else if (g.chi == 0.0) {
    log_norm = g.lambda * std::log(0.5 * g.psi) - boost::math::lgamma(g.lambda);
  } else {
    const double omega = std::sqrt(g.psi * g.chi);
    log_norm = 0.5 * g.lambda * std::log(g.psi / g.chi) - std::numbers::ln2 -
               std::log(boost::math::cyl_bessel_k(std::abs(g.lambda), omega));
  }
  return log_norm + (g.lambda - 1.0) * std::log(x) - 0.5 * (g.chi / x + g.psi * x);
}

double mean(const Gig& g) {
  validate(g);
  if (g.psi == 0.0) return g.lambda < -1.0 ? 0.5 * g.chi / (-g.lambda - 1.0) : std::numeric_limits<double>::infinity();
  if (g.chi == 0.0) return 2.0 * g.lambda / g.psi;
  const double omega = std::sqrt(g.psi * g.chi);
  return std::sqrt(g.chi / g.psi) * boost::math::cyl_bessel_k(g.lambda + 1.0, omega) /
         boost::math::cyl_bessel_k(g.lambda, omega);
}

}  // namespace sv
