#ifndef SV_DESIGN_HPP
#define SV_DESIGN_HPP

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sv {

/// Regression structure of the observation equation.
/// `none`: zero mean. `ar`: intercept followed by `order` lags of y (order 0
/// is intercept only). `covariates`: user-supplied columns.
struct DesignSpec {
  enum class Kind { none, ar, covariates };
  Kind kind = Kind::none;
  int order = 0;

  static DesignSpec none() { return {}; }
  static DesignSpec ar(int p) { return {Kind::ar, p}; }
  static DesignSpec covariates() { return {Kind::covariates, 0}; }
  bool operator==(const DesignSpec&) const = default;
};

/// Parses "none", "ar<p>" (e.g. "ar1") or "covariates".
DesignSpec parse_design(std::string_view text);
std::string to_string(const DesignSpec& spec);

/// Response and regressors after applying a DesignSpec. For AR designs the
/// first `order` observations are consumed as lags.
struct Design {
  DesignSpec spec;
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index k() const { return X.cols(); }
};

/// Builds the design. `covariates` must have one row per observation when
/// spec.kind is covariates; `names` labels its columns (defaults beta_0, ...).
Design make_design(const Eigen::Ref<const Eigen::VectorXd>& y, const DesignSpec& spec,
                   const Eigen::MatrixXd& covariates = {}, std::vector<std::string> names = {});

/// Row of regressors for an AR design given the most recent observations
/// (`recent(0)` is the latest).
Eigen::RowVectorXd ar_row(const Eigen::Ref<const Eigen::VectorXd>& recent, int order);

}  // namespace sv

#endif  // SV_DESIGN_HPP
