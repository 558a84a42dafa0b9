#ifndef SV_NORMALITY_HPP
#define SV_NORMALITY_HPP

#include <string>

#include <Eigen/Dense>

namespace sv {

struct NormalityResult {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Shapiro-Wilk W with Royston's approximation, 3 <= n <= 5000.
NormalityResult shapiro_wilk(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Anderson-Darling A^2 with estimated mean and variance (n >= 8).
NormalityResult anderson_darling(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Shapiro-Wilk up to 5000 observations, Anderson-Darling beyond.
NormalityResult normality_test(const Eigen::Ref<const Eigen::VectorXd>& x);

double standard_normal_cdf(double z);
double standard_normal_quantile(double p);

}  // namespace sv

#endif  // SV_NORMALITY_HPP
