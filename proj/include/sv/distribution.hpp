#ifndef SV_DISTRIBUTION_HPP
#define SV_DISTRIBUTION_HPP

#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "sv/rng.hpp"

namespace sv {

namespace dist {

struct Normal {
  double mean = 0.0;
  double sd = 1.0;
  bool operator==(const Normal&) const = default;
};

struct Beta {
  double shape1 = 1.0;
  double shape2 = 1.0;
  bool operator==(const Beta&) const = default;
};

/// Beta law mapped to (-1, 1) through x -> 2x - 1.
struct TranslatedBeta {
  double shape1 = 1.0;
  double shape2 = 1.0;
  bool operator==(const TranslatedBeta&) const = default;
};

/// Shape/rate parameterization.
struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
  bool operator==(const Gamma&) const = default;
};

struct InverseGamma {
  double shape = 1.0;
  double scale = 1.0;
  bool operator==(const InverseGamma&) const = default;
};

struct Exponential {
  double rate = 1.0;
  bool operator==(const Exponential&) const = default;
};

struct Constant {
  double value = 0.0;
  bool operator==(const Constant&) const = default;
};

/// Point mass at +infinity (used for nu to select Gaussian errors).
struct Infinity {
  bool operator==(const Infinity&) const = default;
};

/// Stored in precision form. A length-1 mean with a 1x1 precision is treated
/// as an isotropic template that `resized` expands to any dimension.
struct MultivariateNormal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;

  static MultivariateNormal isotropic(double mean, double sd, Eigen::Index dim = 1);
  static MultivariateNormal from_covariance(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance);

  Eigen::Index dim() const { return mean.size(); }
  MultivariateNormal resized(Eigen::Index dim) const;
  bool operator==(const MultivariateNormal& other) const {
    return mean.size() == other.mean.size() && mean == other.mean && precision == other.precision;
  }
};

}  // namespace dist

using Distribution =
    std::variant<dist::Normal, dist::Beta, dist::Gamma, dist::InverseGamma, dist::Exponential,
                 dist::Constant, dist::Infinity, dist::MultivariateNormal, dist::TranslatedBeta>;

/// Throws InvalidParameter if the parameters violate their constraints.
void validate(const Distribution& d);

/// Scalar draw. Constant yields its value; Infinity and MultivariateNormal
/// raise UnsupportedDraw.
double draw(const Distribution& d, RngStream& rng);
Eigen::VectorXd draw(const dist::MultivariateNormal& d, RngStream& rng);

/// Natural-log density; -infinity outside the support. Constant and Infinity
/// have no density and raise UnsupportedDraw.
double log_density(const Distribution& d, double x);
double log_density(const dist::MultivariateNormal& d, const Eigen::VectorXd& x);

double cdf(const Distribution& d, double x);
double quantile(const Distribution& d, double p);
double mean(const Distribution& d);
double variance(const Distribution& d);

/// Lower/upper end of the support.
std::pair<double, double> support(const Distribution& d);

bool is_constant(const Distribution& d);
bool is_infinity(const Distribution& d);
double constant_value(const Distribution& d);

/// Human-readable description, e.g. "Normal(mean = 0, sd = 100)".
std::string describe(const Distribution& d);
/// Compact config form, e.g. "normal(0, 100)"; round-trips through parse_distribution.
std::string to_config_string(const Distribution& d);
Distribution parse_distribution(std::string_view text);

}  // namespace sv

#endif  // SV_DISTRIBUTION_HPP
