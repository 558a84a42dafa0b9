#ifndef SV_FORECAST_HPP
#define SV_FORECAST_HPP

#include <vector>

#include <Eigen/Dense>

#include "sv/design.hpp"
#include "sv/prior_spec.hpp"
#include "sv/rng.hpp"
#include "sv/sv_types.hpp"

namespace sv {

/// One simulated future path per stored draw. `location` is x'beta at each
/// horizon and `nu` the degrees of freedom of the draw.
struct PredictiveDraws {
  Eigen::MatrixXd h_future;  // draws x n_ahead
  Eigen::MatrixXd y_future;  // draws x n_ahead
  Eigen::MatrixXd location;  // draws x n_ahead
  Eigen::VectorXd nu;        // draws

  Eigen::Index draws() const { return y_future.rows(); }
  Eigen::Index horizon() const { return y_future.cols(); }
};

/// Simulates h and y forward from every stored draw. `newdata` supplies the
/// regressor rows (n_ahead x K) for covariate designs; AR designs build their
/// rows from simulated y and ignore it.
PredictiveDraws predict(const SvDraws& draws, int n_ahead, const Eigen::MatrixXd& newdata, RngStream& rng);

/// log p(x | h, location, nu) for the observation equation with unit-variance errors.
double log_observation_density(double x, double location, double h, double nu);

struct PredictiveLikelihood {
  double value = 0.0;
  double log_value = 0.0;
};

/// Monte Carlo average of the conditional densities at `horizon` (1-based).
PredictiveLikelihood predictive_likelihood(const PredictiveDraws& pd, double x, int horizon = 1);
PredictiveLikelihood predictive_likelihood(const SvDraws& draws, double x, const Eigen::MatrixXd& newdata,
                                           RngStream& rng, int horizon = 1);

/// Type-7 quantiles of the simulated y at `horizon` (1-based).
Eigen::VectorXd predictive_quantile(const PredictiveDraws& pd, const std::vector<double>& qs, int horizon = 1);
Eigen::VectorXd predictive_quantile(const SvDraws& draws, const std::vector<double>& qs,
                                    const Eigen::MatrixXd& newdata, RngStream& rng, int horizon = 1);

enum class RefitWindow { moving, expanding };

std::string to_string(RefitWindow w);
RefitWindow parse_refit_window(std::string_view s);

struct RollingConfig {
  int n_ahead = 1;
  int forecast_length = 1;
  RefitWindow refit_window = RefitWindow::moving;
  std::vector<double> quantiles{0.01, 0.05};
  bool predlik = true;
  DesignSpec design;
};

/// 1-based inclusive bounds of window j and the index it scores.
struct WindowBounds {
  Eigen::Index start = 0;
  Eigen::Index end = 0;
  Eigen::Index target = 0;
};

/// Width of the first window, L - J - n_ahead + 1.
Eigen::Index first_window_width(Eigen::Index length, int forecast_length, int n_ahead);
WindowBounds window_bounds(Eigen::Index length, int forecast_length, int n_ahead, RefitWindow refit, int j);

struct WindowRecord {
  int index = 0;
  WindowBounds bounds;
  double observed = 0.0;
  double log_predlik = 0.0;
  Eigen::VectorXd quantiles;
  Eigen::MatrixXd para;
  Eigen::MatrixXd beta;
};

struct RollingResult {
  Eigen::Index first_width = 0;
  std::vector<double> quantiles;
  std::vector<WindowRecord> windows;
};

/// Fits every window independently (cold start) and scores it n_ahead steps
/// past its end. Window j uses seed config.seed + j. `covariates` needs one
/// row per observation for covariate designs and is ignored otherwise.
RollingResult rolling_estimate(const Eigen::VectorXd& y, const Eigen::MatrixXd& covariates, ModelKind kind,
                               const PriorSpec& priors, const RollingConfig& rolling, const SamplerConfig& config);

}  // namespace sv

#endif  // SV_FORECAST_HPP
