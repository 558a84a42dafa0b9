#ifndef SV_GEWEKE_HPP
#define SV_GEWEKE_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sv/normality.hpp"
#include "sv/prior_spec.hpp"
#include "sv/sv_types.hpp"

namespace sv {

struct GewekeConfig {
  int n_data = 20;
  int kept = 10000;
  int thin = 50;
  /// Sweeps with proposal adaptation before anything is kept.
  int burnin = 1000;
  std::uint64_t seed = 0;
  double alpha = 0.01;
  StepMask mask;
  /// Offset inside log(y^2 + offset). The smallest normal double keeps the
  /// transform exact for every simulated value while guarding against y = 0.
  double offset = std::numeric_limits<double>::min();
  /// Regressors (n_data x K); empty for a zero-mean model.
  Eigen::MatrixXd X;
  /// Priors handed to the sampler when they differ from the generating ones;
  /// a deliberately wrong conditional must make the test fail.
  std::optional<PriorSpec> sampler_priors;
};

struct GewekeParameter {
  std::string name;
  NormalityResult test;
  bool pass = false;
};

struct GewekeReport {
  ModelKind kind = ModelKind::sv;
  GewekeConfig config;
  std::vector<GewekeParameter> parameters;
  /// Transformed draws, one column per entry of `parameters`.
  Eigen::MatrixXd transformed;
  bool pass = false;
};

/// Maps parameter draws through their prior CDF and then the standard normal
/// quantile. Parameters with a Constant prior are skipped. `para` uses the
/// ParamColumn layout; `beta` may have zero columns.
std::pair<std::vector<std::string>, Eigen::MatrixXd> geweke_transform(const PriorSpec& priors, ModelKind kind,
                                                                      const Eigen::MatrixXd& para,
                                                                      const Eigen::MatrixXd& beta);

/// Successive-conditional simulator: alternates a full sampler sweep with a
/// fresh draw of the data given the state, keeps every thin-th parameter draw
/// and tests the transformed sample for normality.
GewekeReport geweke_validate(ModelKind kind, const PriorSpec& priors, const GewekeConfig& config);

nlohmann::ordered_json to_json(const GewekeReport& report);

}  // namespace sv

#endif  // SV_GEWEKE_HPP
