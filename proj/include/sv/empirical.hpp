#ifndef SV_EMPIRICAL_HPP
#define SV_EMPIRICAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace sv {

/// Type-7 quantile of an ascending sample.
inline double quantile_sorted(const Eigen::Ref<const Eigen::VectorXd>& sorted, double q) {
  const Eigen::Index n = sorted.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(n - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const Eigen::Index hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted(lo) + frac * (sorted(hi) - sorted(lo));
}

inline Eigen::VectorXd sorted_copy(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd s = x;
  std::sort(s.data(), s.data() + s.size());
  return s;
}

inline Eigen::VectorXd quantiles(const Eigen::Ref<const Eigen::VectorXd>& x, const std::vector<double>& qs) {
  const Eigen::VectorXd s = sorted_copy(x);
  Eigen::VectorXd out(static_cast<Eigen::Index>(qs.size()));
  for (std::size_t i = 0; i < qs.size(); ++i) out(static_cast<Eigen::Index>(i)) = quantile_sorted(s, qs[i]);
  return out;
}

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

/// log of the arithmetic mean of exp(x).
inline double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return log_sum_exp(x) - std::log(static_cast<double>(x.size()));
}

}  // namespace sv

#endif  // SV_EMPIRICAL_HPP
