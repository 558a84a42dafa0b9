#ifndef SV_MIXTURE_HPP
#define SV_MIXTURE_HPP

#include <Eigen/Dense>

#include "sv/rng.hpp"

namespace sv {

enum class MixtureKind { no_leverage, leverage };

/// Gaussian mixture approximating the law of log(eps^2), eps ~ N(0, 1).
/// For the leverage kind, `a` and `b` linearize eps given the component:
/// eps ~= d * exp(m/2) * (a + b * (z - m)), with d the sign of eps.
struct MixtureTable {
  Eigen::VectorXd probs;
  Eigen::VectorXd means;
  Eigen::VectorXd variances;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  MixtureKind kind = MixtureKind::no_leverage;

  Eigen::Index size() const { return probs.size(); }
  double mean() const { return probs.dot(means); }
  double variance() const;
  double cdf(double z) const;
};

const MixtureTable& mixture_table(MixtureKind kind);

/// Exact law of log(chi-square with one degree of freedom).
double log_chisq1_cdf(double z);
double log_chisq1_log_density(double z);

/// log((r + 0)^2 + offset) per element; throws NumericError on a non-finite result.
Eigen::VectorXd linearize(const Eigen::Ref<const Eigen::VectorXd>& residuals, double offset);

/// Component indicators (0-based) from P(s_t = j) proportional to
/// p_j N(ystar_t; h_t + m_j, v_j).
Eigen::VectorXi draw_indicators(const Eigen::Ref<const Eigen::VectorXd>& ystar,
                                const Eigen::Ref<const Eigen::VectorXd>& h, const MixtureTable& table,
                                RngStream& rng);

/// Normalized indicator probabilities for a single observation.
Eigen::VectorXd indicator_probabilities(double ystar, double h, const MixtureTable& table);

}  // namespace sv

#endif  // SV_MIXTURE_HPP
