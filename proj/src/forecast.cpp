#include "sv/forecast.hpp"

#include <cmath>
#include <string>

#include "sv/empirical.hpp"
#include "sv/errors.hpp"
#include "sv/parallel.hpp"
#include "sv/sv_sampler.hpp"

namespace sv {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void check_horizon(const PredictiveDraws& pd, int horizon) {
  if (horizon < 1 || horizon > pd.horizon()) {
    throw DimensionError("horizon " + std::to_string(horizon) + " outside 1.." + std::to_string(pd.horizon()));
  }
  if (pd.draws() == 0) throw DataError("no predictive draws");
}

}  // namespace

PredictiveDraws predict(const SvDraws& draws, int n_ahead, const Eigen::MatrixXd& newdata, RngStream& rng) {
  if (n_ahead < 1) throw InvalidParameter("n_ahead must be at least 1");
  const Design& design = draws.design;
  const Eigen::Index k = design.k();
  const bool ar = design.spec.kind == DesignSpec::Kind::ar;
  if (k > 0 && !ar) {
    if (newdata.size() == 0) throw DataError("newdata is required when the model has regressors");
    if (newdata.rows() < n_ahead || newdata.cols() != k) {
      throw DimensionError("newdata must be " + std::to_string(n_ahead) + " x " + std::to_string(k) + ", got " +
                           std::to_string(newdata.rows()) + " x " + std::to_string(newdata.cols()));
    }
  }

  const Eigen::MatrixXd para = draws.para();
  const Eigen::MatrixXd beta = draws.beta();
  const Eigen::VectorXd h_last = draws.h_last();
  const Eigen::VectorXd eps_last = draws.eps_last();
  const Eigen::Index m_total = para.rows();
  if (m_total == 0) throw DataError("no stored draws");

  const int order = ar ? design.spec.order : 0;
  Eigen::VectorXd history(order);
  for (int lag = 0; lag < order; ++lag) history(lag) = design.y(design.n() - 1 - lag);

  PredictiveDraws out;
  out.h_future.resize(m_total, n_ahead);
  out.y_future.resize(m_total, n_ahead);
  out.location.resize(m_total, n_ahead);
  out.nu = para.col(kNu);

  Eigen::VectorXd recent(order);
  for (Eigen::Index m = 0; m < m_total; ++m) {
    const double mu = para(m, kMu), phi = para(m, kPhi), sigma = para(m, kSigma);
    const double nu = para(m, kNu), rho = para(m, kRho);
    const double rho_c = std::sqrt(1.0 - rho * rho);
    double h = h_last(m);
    double eps = eps_last(m);
    recent = history;
    for (int t = 0; t < n_ahead; ++t) {
      h = mu + phi * (h - mu) + sigma * (rho * eps + rho_c * rng.normal());
      double loc = 0.0;
      if (k > 0) {
        loc = ar ? ar_row(recent, order).dot(beta.row(m)) : newdata.row(t).dot(beta.row(m));
      }
      const double tau = std::isfinite(nu) ? rng.inverse_gamma(0.5 * nu, 0.5 * (nu - 2.0)) : 1.0;
      eps = rng.normal();
      const double y = loc + std::exp(0.5 * h) * std::sqrt(tau) * eps;
      out.h_future(m, t) = h;
      out.y_future(m, t) = y;
      out.location(m, t) = loc;
      if (order > 0) {
        for (int lag = order - 1; lag > 0; --lag) recent(lag) = recent(lag - 1);
        recent(0) = y;
      }
    }
  }
  return out;
}

double log_observation_density(double x, double location, double h, double nu) {
  const double z = (x - location) * std::exp(-0.5 * h);
  if (!std::isfinite(nu)) return -kLogSqrt2Pi - 0.5 * h - 0.5 * z * z;
  const double c = std::sqrt((nu - 2.0) / nu);
  const double u = z / c;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
         0.5 * (nu + 1.0) * std::log1p(u * u / nu) - 0.5 * h - std::log(c);
}

PredictiveLikelihood predictive_likelihood(const PredictiveDraws& pd, double x, int horizon) {
  check_horizon(pd, horizon);
  const int t = horizon - 1;
  Eigen::VectorXd terms(pd.draws());
  for (Eigen::Index m = 0; m < pd.draws(); ++m) {
    terms(m) = log_observation_density(x, pd.location(m, t), pd.h_future(m, t), pd.nu(m));
  }
  PredictiveLikelihood out;
  out.log_value = log_mean_exp(terms);
  out.value = std::exp(out.log_value);
  return out;
}

PredictiveLikelihood predictive_likelihood(const SvDraws& draws, double x, const Eigen::MatrixXd& newdata,
                                           RngStream& rng, int horizon) {
  return predictive_likelihood(predict(draws, horizon, newdata, rng), x, horizon);
}

Eigen::VectorXd predictive_quantile(const PredictiveDraws& pd, const std::vector<double>& qs, int horizon) {
  check_horizon(pd, horizon);
  for (double q : qs) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("quantile levels must lie in (0, 1)");
  }
  return quantiles(pd.y_future.col(horizon - 1), qs);
}

Eigen::VectorXd predictive_quantile(const SvDraws& draws, const std::vector<double>& qs,
                                    const Eigen::MatrixXd& newdata, RngStream& rng, int horizon) {
  return predictive_quantile(predict(draws, horizon, newdata, rng), qs, horizon);
}

std::string to_string(RefitWindow w) { return w == RefitWindow::moving ? "moving" : "expanding"; }

RefitWindow parse_refit_window(std::string_view s) {
  if (s == "moving") return RefitWindow::moving;
  if (s == "expanding") return RefitWindow::expanding;
  throw ConfigError("refit window must be 'moving' or 'expanding', got '" + std::string(s) + "'");
}

Eigen::Index first_window_width(Eigen::Index length, int forecast_length, int n_ahead) {
  if (forecast_length < 1 || n_ahead < 1) throw InvalidParameter("forecast_length and n_ahead must be positive");
  if (length <= forecast_length + n_ahead) {
    throw DataError("series of length " + std::to_string(length) + " is too short for " +
                    std::to_string(forecast_length) + " windows " + std::to_string(n_ahead) + " step(s) ahead");
  }
  return length - forecast_length - n_ahead + 1;
}

WindowBounds window_bounds(Eigen::Index length, int forecast_length, int n_ahead, RefitWindow refit, int j) {
  const Eigen::Index width = first_window_width(length, forecast_length, n_ahead);
  if (j < 1 || j > forecast_length) throw InvalidParameter("window index out of range");
  WindowBounds b;
  b.start = refit == RefitWindow::moving ? j : 1;
  b.end = width + j - 1;
  b.target = b.end + n_ahead;
  return b;
}

RollingResult rolling_estimate(const Eigen::VectorXd& y, const Eigen::MatrixXd& covariates, ModelKind kind,
                               const PriorSpec& priors, const RollingConfig& rolling, const SamplerConfig& config) {
  validate(config);
  validate(priors, kind);
  const Eigen::Index length = y.size();
  const bool with_covariates = rolling.design.kind == DesignSpec::Kind::covariates;
  if (with_covariates && covariates.rows() != length) {
    throw DimensionError("covariates need one row per observation");
  }

  RollingResult result;
  result.first_width = first_window_width(length, rolling.forecast_length, rolling.n_ahead);
  result.quantiles = rolling.quantiles;
  result.windows.resize(static_cast<std::size_t>(rolling.forecast_length));

  auto fit_window = [&](int i) {
    const int j = i + 1;
    const WindowBounds b = window_bounds(length, rolling.forecast_length, rolling.n_ahead, rolling.refit_window, j);
    const Eigen::Index n = b.end - b.start + 1;
    const Eigen::MatrixXd cov = with_covariates ? Eigen::MatrixXd(covariates.middleRows(b.start - 1, n)) : Eigen::MatrixXd();
    const Design design = make_design(y.segment(b.start - 1, n), rolling.design, cov);

    SamplerConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(j);
    c.threads = 1;
    c.keeptime = KeepTime::last;
    SvDraws draws;
    try {
      draws = run_sampler(design, kind, priors, c);
    } catch (const Error& e) {
      rethrow_with_context(e, "window " + std::to_string(j));
    }

    const Eigen::MatrixXd newdata =
        with_covariates ? Eigen::MatrixXd(covariates.middleRows(b.end, rolling.n_ahead)) : Eigen::MatrixXd();
    RngStream rng(c.seed, static_cast<std::uint64_t>(c.chains));
    const PredictiveDraws pd = predict(draws, rolling.n_ahead, newdata, rng);

    WindowRecord& rec = result.windows[static_cast<std::size_t>(i)];
    rec.index = j;
    rec.bounds = b;
    rec.observed = y(b.target - 1);
    rec.log_predlik = rolling.predlik ? predictive_likelihood(pd, rec.observed, rolling.n_ahead).log_value
                                      : std::numeric_limits<double>::quiet_NaN();
    rec.quantiles = rolling.quantiles.empty() ? Eigen::VectorXd() : predictive_quantile(pd, rolling.quantiles, rolling.n_ahead);
    rec.para = draws.para();
    rec.beta = draws.beta();
  };
  parallel_for(rolling.forecast_length, config.threads, fit_window);
  return result;
}

}  // namespace sv
