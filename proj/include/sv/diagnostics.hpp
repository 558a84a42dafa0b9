#ifndef SV_DIAGNOSTICS_HPP
#define SV_DIAGNOSTICS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sv/sv_types.hpp"

namespace sv {

struct EssResult {
  double ess = 0.0;
  /// Set for a constant chain, whose ESS is reported as 0.
  bool degenerate = false;
};

/// M / (1 + 2 sum rho_k), truncated by Geyer's initial positive (monotone) sequence.
EssResult effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& chain);

/// Empirical autocorrelations at lags 0..max_lag (FFT based).
Eigen::VectorXd autocorrelation(const Eigen::Ref<const Eigen::VectorXd>& chain, Eigen::Index max_lag);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  Eigen::VectorXd quantiles;
  double ess = 0.0;
  bool ess_degenerate = false;
};

struct SummaryTable {
  std::vector<double> quantiles;
  std::vector<SummaryRow> rows;

  const SummaryRow* find(const std::string& name) const;
};

inline const std::vector<double>& default_summary_quantiles() {
  static const std::vector<double> q{0.05, 0.5, 0.95};
  return q;
}

/// Row for one quantity; `chains` holds one column block per chain
/// (ESS is summed over chains).
SummaryRow summarize_values(const std::string& name, const std::vector<Eigen::VectorXd>& chains,
                            const std::vector<double>& quantiles);

/// Parameter rows, exp(mu/2) and sigma^2, beta rows, and latent rows when requested.
SummaryTable summarize(const SvDraws& draws, const std::vector<double>& quantiles = default_summary_quantiles(),
                       bool showlatent = false);

/// Values rounded to four significant digits.
nlohmann::ordered_json to_json(const SummaryTable& table);
std::string to_text(const SummaryTable& table);

}  // namespace sv

#endif  // SV_DIAGNOSTICS_HPP
