#include "sv/mixture.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sv/errors.hpp"
#include "sv/format.hpp"

namespace sv {

namespace {

MixtureTable build(MixtureKind kind) {
  MixtureTable t;
  t.kind = kind;
  t.probs.resize(10);
  t.means.resize(10);
  t.variances.resize(10);
  t.a.resize(10);
  t.b.resize(10);
  t.probs << 0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115;
  t.means << 1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000;
  t.variances << 0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342;
  t.a << 1.01418, 1.02248, 1.03403, 1.05207, 1.08153, 1.13114, 1.21754, 1.37454, 1.68327, 2.50097;
  t.b << 0.50710, 0.51124, 0.51701, 0.52604, 0.54076, 0.56557, 0.60877, 0.68728, 0.84163, 1.25049;
  return t;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double MixtureTable::variance() const {
  const double m = mean();
  return probs.dot((variances.array() + means.array().square()).matrix()) - m * m;
}

double MixtureTable::cdf(double z) const {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < size(); ++j) acc += probs(j) * normal_cdf((z - means(j)) / std::sqrt(variances(j)));
  return acc;
}

const MixtureTable& mixture_table(MixtureKind kind) {
  static const MixtureTable plain = build(MixtureKind::no_leverage);
  static const MixtureTable lev = build(MixtureKind::leverage);
  return kind == MixtureKind::leverage ? lev : plain;
}

double log_chisq1_cdf(double z) { return std::erf(std::sqrt(0.5 * std::exp(z))); }

double log_chisq1_log_density(double z) { return 0.5 * (z - std::exp(z)) - 0.5 * std::log(2.0 * M_PI); }

Eigen::VectorXd linearize(const Eigen::Ref<const Eigen::VectorXd>& residuals, double offset) {
  Eigen::VectorXd out = (residuals.array().square() + offset).log();
  for (Eigen::Index t = 0; t < out.size(); ++t) {
    if (!std::isfinite(out(t))) {
      throw NumericError("log-squared residual at index " + std::to_string(t) +
                         " is not finite (offset underflow; residual " + format_double(residuals(t)) + ")");
    }
  }
  return out;
}

Eigen::VectorXd indicator_probabilities(double ystar, double h, const MixtureTable& table) {
  const auto k = table.size();
  Eigen::VectorXd lw(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double r = ystar - h - table.means(j);
    lw(j) = std::log(table.probs(j)) - 0.5 * std::log(table.variances(j)) - 0.5 * r * r / table.variances(j);
  }
  const Eigen::VectorXd w = (lw.array() - lw.maxCoeff()).exp();
  return w / w.sum();
}

Eigen::VectorXi draw_indicators(const Eigen::Ref<const Eigen::VectorXd>& ystar,
                                const Eigen::Ref<const Eigen::VectorXd>& h, const MixtureTable& table,
                                RngStream& rng) {
  if (ystar.size() != h.size()) throw DimensionError("ystar and h lengths differ");
  const auto n = ystar.size();
  const auto k = table.size();
  const Eigen::ArrayXd log_norm = table.probs.array().log() - 0.5 * table.variances.array().log();
  const Eigen::ArrayXd inv_var = table.variances.array().inverse();
  Eigen::VectorXi s(n);
  Eigen::ArrayXd lw(k);
  for (Eigen::Index t = 0; t < n; ++t) {
    if (!std::isfinite(ystar(t))) {
      throw NumericError("non-finite linearized observation at index " + std::to_string(t) + " (offset underflow)");
    }
    lw = log_norm - 0.5 * (ystar(t) - h(t) - table.means.array()).square() * inv_var;
    lw = (lw - lw.maxCoeff()).exp();
    double u = rng.uniform() * lw.sum();
    Eigen::Index j = 0;
    while (j < k - 1 && (u -= lw(j)) > 0.0) ++j;
    s(t) = static_cast<int>(j);
  }
  return s;
}

}  // namespace sv
