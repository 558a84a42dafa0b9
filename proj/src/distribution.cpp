#include "sv/distribution.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "sv/errors.hpp"
#include "sv/format.hpp"

namespace sv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidParameter(std::string(what) + " must be positive and finite, got " + format_double(v));
  }
}

double beta_log_density(double a, double b, double x) {
  if (x <= 0.0 || x >= 1.0) return kNegInf;
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - boost::math::lgamma(a) -
         boost::math::lgamma(b) + boost::math::lgamma(a + b);
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw InvalidParameter(std::string(what) + " must be square");
  if (!m.isApprox(m.transpose(), 1e-10)) throw InvalidParameter(std::string(what) + " must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw InvalidParameter(std::string(what) + " must be positive definite");
  }
  return llt;
}

}  // namespace

namespace dist {

MultivariateNormal MultivariateNormal::isotropic(double m, double sd, Eigen::Index dim) {
  require_positive(sd, "multivariate normal sd");
  MultivariateNormal out;
  out.mean = Eigen::VectorXd::Constant(dim, m);
  out.precision = Eigen::MatrixXd::Identity(dim, dim) / (sd * sd);
  return out;
}

MultivariateNormal MultivariateNormal::from_covariance(Eigen::VectorXd m, const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != m.size()) throw DimensionError("covariance does not match mean length");
  auto llt = checked_llt(covariance, "covariance");
  MultivariateNormal out;
  out.precision = llt.solve(Eigen::MatrixXd::Identity(m.size(), m.size()));
  out.precision = 0.5 * (out.precision + out.precision.transpose()).eval();
  out.mean = std::move(m);
  return out;
}

MultivariateNormal MultivariateNormal::resized(Eigen::Index dim) const {
  if (mean.size() == dim) return *this;
  if (mean.size() == 1 && precision.size() == 1) {
    MultivariateNormal out;
    out.mean = Eigen::VectorXd::Constant(dim, mean(0));
    out.precision = Eigen::MatrixXd::Identity(dim, dim) * precision(0, 0);
    return out;
  }
  throw DimensionError("multivariate normal prior has dimension " + std::to_string(mean.size()) +
                       " but " + std::to_string(dim) + " coefficients are required");
}

}  // namespace dist

void validate(const Distribution& d) {
  std::visit(Overloaded{
                 [](const dist::Normal& x) {
                   if (!std::isfinite(x.mean)) throw InvalidParameter("normal mean must be finite");
                   require_positive(x.sd, "normal sd");
                 },
                 [](const dist::Beta& x) {
                   require_positive(x.shape1, "beta shape1");
                   require_positive(x.shape2, "beta shape2");
                 },
                 [](const dist::TranslatedBeta& x) {
                   require_positive(x.shape1, "beta shape1");
                   require_positive(x.shape2, "beta shape2");
                 },
                 [](const dist::Gamma& x) {
                   require_positive(x.shape, "gamma shape");
                   require_positive(x.rate, "gamma rate");
                 },
                 [](const dist::InverseGamma& x) {
                   require_positive(x.shape, "inverse gamma shape");
                   require_positive(x.scale, "inverse gamma scale");
                 },
                 [](const dist::Exponential& x) { require_positive(x.rate, "exponential rate"); },
                 [](const dist::Constant& x) {
                   if (!std::isfinite(x.value)) throw InvalidParameter("constant must be finite");
                 },
                 [](const dist::Infinity&) {},
                 [](const dist::MultivariateNormal& x) {
                   if (x.mean.size() == 0) throw InvalidParameter("multivariate normal has empty mean");
                   if (!x.mean.allFinite()) throw InvalidParameter("multivariate normal mean must be finite");
                   if (x.precision.rows() != x.mean.size()) {
                     throw DimensionError("precision does not match mean length");
                   }
                   checked_llt(x.precision, "precision");
                 },
             },
             d);
}

double draw(const Distribution& d, RngStream& rng) {
  validate(d);
  return std::visit(
      Overloaded{
          [&](const dist::Normal& x) { return rng.normal(x.mean, x.sd); },
          [&](const dist::Beta& x) { return rng.beta(x.shape1, x.shape2); },
          [&](const dist::TranslatedBeta& x) { return 2.0 * rng.beta(x.shape1, x.shape2) - 1.0; },
          [&](const dist::Gamma& x) { return rng.gamma(x.shape, x.rate); },
          [&](const dist::InverseGamma& x) { return rng.inverse_gamma(x.shape, x.scale); },
          [&](const dist::Exponential& x) { return rng.exponential(x.rate); },
          [&](const dist::Constant& x) { return x.value; },
          [&](const dist::Infinity&) -> double { throw UnsupportedDraw("cannot draw from a point mass at infinity"); },
          [&](const dist::MultivariateNormal& x) -> double {
            if (x.dim() != 1) throw UnsupportedDraw("multivariate normal requires a vector draw");
            return x.mean(0) + rng.normal() / std::sqrt(x.precision(0, 0));
          },
      },
      d);
}

Eigen::VectorXd draw(const dist::MultivariateNormal& d, RngStream& rng) {
  validate(d);
  Eigen::LLT<Eigen::MatrixXd> llt(d.precision);
  Eigen::VectorXd z(d.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return d.mean + llt.matrixU().solve(z);
}

double log_density(const Distribution& d, double x) {
  validate(d);
  return std::visit(
      Overloaded{
          [&](const dist::Normal& p) {
            const double z = (x - p.mean) / p.sd;
            return -kLogSqrt2Pi - std::log(p.sd) - 0.5 * z * z;
          },
          [&](const dist::Beta& p) { return beta_log_density(p.shape1, p.shape2, x); },
          [&](const dist::TranslatedBeta& p) {
            return beta_log_density(p.shape1, p.shape2, 0.5 * (x + 1.0)) - std::numbers::ln2;
          },
          [&](const dist::Gamma& p) {
            if (x <= 0.0) return kNegInf;
            return p.shape * std::log(p.rate) - boost::math::lgamma(p.shape) + (p.shape - 1.0) * std::log(x) -
                   p.rate * x;
          },
          [&](const dist::InverseGamma& p) {
            if (x <= 0.0) return kNegInf;
            return p.shape * std::log(p.scale) - boost::math::lgamma(p.shape) - (p.shape + 1.0) * std::log(x) -
                   p.scale / x;
          },
          [&](const dist::Exponential& p) {
            if (x < 0.0) return kNegInf;
            return std::log(p.rate) - p.rate * x;
          },
          [&](const dist::Constant&) -> double { throw UnsupportedDraw("constant has no density"); },
          [&](const dist::Infinity&) -> double { throw UnsupportedDraw("point mass at infinity has no density"); },
          [&](const dist::MultivariateNormal& p) {
            return log_density(p, Eigen::VectorXd::Constant(1, x));
          },
      },
      d);
}

double log_density(const dist::MultivariateNormal& d, const Eigen::VectorXd& x) {
  validate(d);
  if (x.size() != d.dim()) throw DimensionError("point does not match multivariate normal dimension");
  Eigen::LLT<Eigen::MatrixXd> llt(d.precision);
  const Eigen::VectorXd r = llt.matrixU() * (x - d.mean);
  const double half_logdet = llt.matrixLLT().diagonal().array().log().sum();
  return half_logdet - static_cast<double>(d.dim()) * kLogSqrt2Pi - 0.5 * r.squaredNorm();
}

double cdf(const Distribution& d, double x) {
  validate(d);
  return std::visit(
      Overloaded{
          [&](const dist::Normal& p) { return 0.5 * std::erfc(-(x - p.mean) / (p.sd * std::numbers::sqrt2)); },
          [&](const dist::Beta& p) {
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return boost::math::ibeta(p.shape1, p.shape2, x);
          },
          [&](const dist::TranslatedBeta& p) {
            if (x <= -1.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return boost::math::ibeta(p.shape1, p.shape2, 0.5 * (x + 1.0));
          },
          [&](const dist::Gamma& p) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(p.shape, p.rate * x); },
          [&](const dist::InverseGamma& p) { return x <= 0.0 ? 0.0 : boost::math::gamma_q(p.shape, p.scale / x); },
          [&](const dist::Exponential& p) { return x <= 0.0 ? 0.0 : -std::expm1(-p.rate * x); },
          [&](const dist::Constant& p) { return x >= p.value ? 1.0 : 0.0; },
          [&](const dist::Infinity&) { return 0.0; },
          [&](const dist::MultivariateNormal& p) -> double {
            if (p.dim() != 1) throw UnsupportedDraw("cdf is defined for univariate laws only");
            return 0.5 * std::erfc(-(x - p.mean(0)) * std::sqrt(p.precision(0, 0)) / std::numbers::sqrt2);
          },
      },
      d);
}

double quantile(const Distribution& d, double prob) {
  validate(d);
  if (!(prob > 0.0 && prob < 1.0)) throw InvalidParameter("quantile probability must lie in (0, 1)");
  return std::visit(
      Overloaded{
          [&](const dist::Normal& p) {
            return p.mean - p.sd * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * prob);
          },
          [&](const dist::Beta& p) { return boost::math::ibeta_inv(p.shape1, p.shape2, prob); },
          [&](const dist::TranslatedBeta& p) {
            return 2.0 * boost::math::ibeta_inv(p.shape1, p.shape2, prob) - 1.0;
          },
          [&](const dist::Gamma& p) { return boost::math::gamma_p_inv(p.shape, prob) / p.rate; },
          [&](const dist::InverseGamma& p) { return p.scale / boost::math::gamma_q_inv(p.shape, prob); },
          [&](const dist::Exponential& p) { return -std::log1p(-prob) / p.rate; },
          [&](const dist::Constant& p) { return p.value; },
          [&](const dist::Infinity&) { return kInf; },
          [&](const dist::MultivariateNormal& p) -> double {
            if (p.dim() != 1) throw UnsupportedDraw("quantile is defined for univariate laws only");
            return p.mean(0) - std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * prob) / std::sqrt(p.precision(0, 0));
          },
      },
      d);
}

double mean(const Distribution& d) {
  validate(d);
  return std::visit(Overloaded{
                        [](const dist::Normal& p) { return p.mean; },
                        [](const dist::Beta& p) { return p.shape1 / (p.shape1 + p.shape2); },
                        [](const dist::TranslatedBeta& p) { return 2.0 * p.shape1 / (p.shape1 + p.shape2) - 1.0; },
                        [](const dist::Gamma& p) { return p.shape / p.rate; },
                        [](const dist::InverseGamma& p) { return p.shape > 1.0 ? p.scale / (p.shape - 1.0) : kInf; },
                        [](const dist::Exponential& p) { return 1.0 / p.rate; },
                        [](const dist::Constant& p) { return p.value; },
                        [](const dist::Infinity&) { return kInf; },
                        [](const dist::MultivariateNormal& p) -> double {
                          if (p.dim() != 1) throw UnsupportedDraw("scalar mean requested for a vector law");
                          return p.mean(0);
                        },
                    },
                    d);
}

double variance(const Distribution& d) {
  validate(d);
  return std::visit(
      Overloaded{
          [](const dist::Normal& p) { return p.sd * p.sd; },
          [](const dist::Beta& p) {
            const double s = p.shape1 + p.shape2;
            return p.shape1 * p.shape2 / (s * s * (s + 1.0));
          },
          [](const dist::TranslatedBeta& p) {
            const double s = p.shape1 + p.shape2;
            return 4.0 * p.shape1 * p.shape2 / (s * s * (s + 1.0));
          },
          [](const dist::Gamma& p) { return p.shape / (p.rate * p.rate); },
          [](const dist::InverseGamma& p) {
            if (p.shape <= 2.0) return kInf;
            return p.scale * p.scale / ((p.shape - 1.0) * (p.shape - 1.0) * (p.shape - 2.0));
          },
          [](const dist::Exponential& p) { return 1.0 / (p.rate * p.rate); },
          [](const dist::Constant&) { return 0.0; },
          [](const dist::Infinity&) { return 0.0; },
          [](const dist::MultivariateNormal& p) -> double {
            if (p.dim() != 1) throw UnsupportedDraw("scalar variance requested for a vector law");
            return 1.0 / p.precision(0, 0);
          },
      },
      d);
}

std::pair<double, double> support(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const dist::Beta&) { return std::pair{0.0, 1.0}; },
                        [](const dist::TranslatedBeta&) { return std::pair{-1.0, 1.0}; },
                        [](const dist::Gamma&) { return std::pair{0.0, kInf}; },
                        [](const dist::InverseGamma&) { return std::pair{0.0, kInf}; },
                        [](const dist::Exponential&) { return std::pair{0.0, kInf}; },
                        [](const dist::Constant& p) { return std::pair{p.value, p.value}; },
                        [](const dist::Infinity&) { return std::pair{kInf, kInf}; },
                        [](const auto&) { return std::pair{kNegInf, kInf}; },
                    },
                    d);
}

bool is_constant(const Distribution& d) { return std::holds_alternative<dist::Constant>(d); }
bool is_infinity(const Distribution& d) { return std::holds_alternative<dist::Infinity>(d); }

double constant_value(const Distribution& d) {
  if (const auto* c = std::get_if<dist::Constant>(&d)) return c->value;
  if (is_infinity(d)) return kInf;
  throw InvalidParameter("distribution is not a point mass");
}

namespace {

bool isotropic_sd(const dist::MultivariateNormal& p, double& m, double& sd) {
  if (p.dim() == 0) return false;
  m = p.mean(0);
  if ((p.mean.array() != m).any()) return false;
  const double prec = p.precision(0, 0);
  const Eigen::MatrixXd iso = Eigen::MatrixXd::Identity(p.dim(), p.dim()) * prec;
  if (p.precision != iso) return false;
  sd = 1.0 / std::sqrt(prec);
  return true;
}

}  // namespace

std::string describe(const Distribution& d) {
  const auto f = [](double v) { return format_significant(v, 6); };
  return std::visit(
      Overloaded{
          [&](const dist::Normal& p) { return "Normal(mean = " + f(p.mean) + ", sd = " + f(p.sd) + ")"; },
          [&](const dist::Beta& p) { return "Beta(a = " + f(p.shape1) + ", b = " + f(p.shape2) + ")"; },
          [&](const dist::TranslatedBeta& p) {
            return "Beta(a = " + f(p.shape1) + ", b = " + f(p.shape2) + ") on (-1, 1)";
          },
          [&](const dist::Gamma& p) { return "Gamma(shape = " + f(p.shape) + ", rate = " + f(p.rate) + ")"; },
          [&](const dist::InverseGamma& p) {
            return "InverseGamma(shape = " + f(p.shape) + ", scale = " + f(p.scale) + ")";
          },
          [&](const dist::Exponential& p) { return "Exponential(rate = " + f(p.rate) + ")"; },
          [&](const dist::Constant& p) { return "Constant(value = " + f(p.value) + ")"; },
          [&](const dist::Infinity&) { return std::string("Infinity"); },
          [&](const dist::MultivariateNormal& p) {
            double m = 0.0, sd = 0.0;
            if (isotropic_sd(p, m, sd)) return "MultivariateNormal(mean = " + f(m) + ", sd = " + f(sd) + ")";
            return "MultivariateNormal(dim = " + std::to_string(p.dim()) + ")";
          },
      },
      d);
}

std::string to_config_string(const Distribution& d) {
  const auto f = format_double;
  return std::visit(
      Overloaded{
          [&](const dist::Normal& p) { return "normal(" + f(p.mean) + ", " + f(p.sd) + ")"; },
          [&](const dist::Beta& p) { return "beta(" + f(p.shape1) + ", " + f(p.shape2) + ")"; },
          [&](const dist::TranslatedBeta& p) {
            return "translated_beta(" + f(p.shape1) + ", " + f(p.shape2) + ")";
          },
          [&](const dist::Gamma& p) { return "gamma(" + f(p.shape) + ", " + f(p.rate) + ")"; },
          [&](const dist::InverseGamma& p) { return "inverse_gamma(" + f(p.shape) + ", " + f(p.scale) + ")"; },
          [&](const dist::Exponential& p) { return "exponential(" + f(p.rate) + ")"; },
          [&](const dist::Constant& p) { return "constant(" + f(p.value) + ")"; },
          [&](const dist::Infinity&) { return std::string("infinity"); },
          [&](const dist::MultivariateNormal& p) {
            double m = 0.0, sd = 0.0;
            if (!isotropic_sd(p, m, sd)) {
              throw ConfigError("only isotropic multivariate normal priors have a config form");
            }
            return "multinormal(" + f(m) + ", " + f(sd) + ")";
          },
      },
      d);
}

Distribution parse_distribution(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(c)));
  }
  const auto open = s.find('(');
  const std::string name = s.substr(0, open);
  std::vector<double> args;
  if (open != std::string::npos) {
    if (s.back() != ')') throw ConfigError("malformed distribution '" + std::string(text) + "'");
    std::string inner = s.substr(open + 1, s.size() - open - 2);
    std::size_t pos = 0;
    while (pos <= inner.size() && !inner.empty()) {
      const auto comma = inner.find(',', pos);
      const std::string tok = inner.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        std::size_t used = 0;
        args.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + tok + "' in distribution '" + std::string(text) + "'");
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  const auto need = [&](std::size_t k) {
    if (args.size() != k) {
      throw ConfigError("distribution '" + name + "' expects " + std::to_string(k) + " argument(s)");
    }
  };
  Distribution out;
  if (name == "normal") {
    need(2);
    out = dist::Normal{args[0], args[1]};
  } else if (name == "beta") {
    need(2);
    out = dist::Beta{args[0], args[1]};
  } else if (name == "translated_beta") {
    need(2);
    out = dist::TranslatedBeta{args[0], args[1]};
  } else if (name == "gamma") {
    need(2);
    out = dist::Gamma{args[0], args[1]};
  } else if (name == "inverse_gamma" || name == "invgamma") {
    need(2);
    out = dist::InverseGamma{args[0], args[1]};
  } else if (name == "exponential") {
    need(1);
    out = dist::Exponential{args[0]};
  } else if (name == "constant") {
    need(1);
    out = dist::Constant{args[0]};
  } else if (name == "infinity" || name == "inf") {
    need(0);
    out = dist::Infinity{};
  } else if (name == "multinormal") {
    need(2);
    out = dist::MultivariateNormal::isotropic(args[0], args[1]);
  } else {
    throw ConfigError("unknown distribution '" + name + "'");
  }
  try {
    validate(out);
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("invalid distribution '") + std::string(text) + "': " + e.what());
  }
  return out;
}

}  // namespace sv
