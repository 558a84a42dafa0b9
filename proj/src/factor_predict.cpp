#include <algorithm>
#include <cmath>
#include <numbers>

#include "sv/empirical.hpp"
#include "sv/errors.hpp"
#include "sv/factor_sv.hpp"

namespace sv {

namespace {

void check_ahead(const FsvDraws& draws, const std::vector<int>& ahead, int each) {
  if (draws.kept() == 0) throw DataError("no stored draws");
  if (ahead.empty()) throw InvalidParameter("ahead must not be empty");
  for (int a : ahead) {
    if (a < 1) throw InvalidParameter("ahead values must be positive");
  }
  if (each < 1) throw InvalidParameter("each must be positive");
}

/// Simulated log-variances at every requested horizon: one (m + r) x |ahead|
/// block per (draw, replicate), draw-major.
std::vector<Eigen::MatrixXd> simulate_logvar(const FsvDraws& draws, const std::vector<int>& ahead, int each,
                                             RngStream& rng) {
  const int horizon = *std::max_element(ahead.begin(), ahead.end());
  const Eigen::Index p = draws.m + draws.r;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(draws.kept() * each));
  for (Eigen::Index k = 0; k < draws.kept(); ++k) {
    for (int e = 0; e < each; ++e) {
      Eigen::VectorXd h = draws.logvar_last.row(k).transpose();
      Eigen::MatrixXd at(p, static_cast<Eigen::Index>(ahead.size()));
      for (int step = 1; step <= horizon; ++step) {
        for (Eigen::Index i = 0; i < p; ++i) {
          const double mu = draws.mu(k, i);
          h(i) = mu + draws.phi(k, i) * (h(i) - mu) + draws.sigma(k, i) * rng.normal();
        }
        for (std::size_t a = 0; a < ahead.size(); ++a) {
          if (ahead[a] == step) at.col(static_cast<Eigen::Index>(a)) = h;
        }
      }
      out.push_back(std::move(at));
    }
  }
  return out;
}

Eigen::Tensor<double, 4> predictive_matrices(const FsvDraws& draws, const std::vector<int>& ahead, int each,
                                             RngStream& rng, bool correlation) {
  check_ahead(draws, ahead, each);
  const std::vector<Eigen::MatrixXd> h = simulate_logvar(draws, ahead, each, rng);
  const Eigen::Index m = draws.m;
  Eigen::Tensor<double, 4> out(m, m, static_cast<Eigen::Index>(h.size()), static_cast<Eigen::Index>(ahead.size()));
  for (std::size_t s = 0; s < h.size(); ++s) {
    const Eigen::MatrixXd& L = draws.loadings[s / static_cast<std::size_t>(each)];
    for (Eigen::Index a = 0; a < h[s].cols(); ++a) {
      Eigen::MatrixXd cov = assemble_covariance(L, h[s].col(a), m);
      if (correlation) cov = covariance_to_correlation(cov);
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) out(i, j, static_cast<Eigen::Index>(s), a) = cov(i, j);
      }
    }
  }
  return out;
}

}  // namespace

Eigen::Tensor<double, 4> predcov(const FsvDraws& draws, const std::vector<int>& ahead, int each, RngStream& rng) {
  return predictive_matrices(draws, ahead, each, rng, false);
}

Eigen::Tensor<double, 4> predcor(const FsvDraws& draws, const std::vector<int>& ahead, int each, RngStream& rng) {
  return predictive_matrices(draws, ahead, each, rng, true);
}

Eigen::VectorXd predloglik(const FsvDraws& draws, const Eigen::MatrixXd& ynew, const std::vector<int>& ahead,
                           int each, RngStream& rng) {
  check_ahead(draws, ahead, each);
  const Eigen::Index m = draws.m;
  if (ynew.rows() != static_cast<Eigen::Index>(ahead.size()) || ynew.cols() != m) {
    throw DimensionError("ynew must have one row per horizon and m columns");
  }
  if (!ynew.allFinite()) throw DataError("ynew must be finite");
  const std::vector<Eigen::MatrixXd> h = simulate_logvar(draws, ahead, each, rng);
  const double log2pi = std::log(2.0 * std::numbers::pi);

  Eigen::VectorXd out(static_cast<Eigen::Index>(ahead.size()));
  Eigen::VectorXd logdens(static_cast<Eigen::Index>(h.size()));
  for (Eigen::Index a = 0; a < out.size(); ++a) {
    for (std::size_t s = 0; s < h.size(); ++s) {
      const std::size_t k = s / static_cast<std::size_t>(each);
      const Eigen::MatrixXd cov = assemble_covariance(draws.loadings[k], h[s].col(a), m);
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) throw NumericError("predictive covariance is not positive definite");
      const Eigen::VectorXd resid = ynew.row(a).transpose() - draws.beta.row(static_cast<Eigen::Index>(k)).transpose();
      const Eigen::VectorXd z = llt.matrixL().solve(resid);
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      logdens(static_cast<Eigen::Index>(s)) = -0.5 * (static_cast<double>(m) * log2pi + logdet + z.squaredNorm());
    }
    out(a) = log_mean_exp(logdens);
  }
  return out;
}

}  // namespace sv
