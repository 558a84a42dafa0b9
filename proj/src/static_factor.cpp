#include "sv/static_factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sv/errors.hpp"

namespace sv {

namespace {

void check_dims(Eigen::Index n, Eigen::Index m, int factors) {
  if (factors < 1 || factors >= m) {
    throw InvalidParameter("factors must satisfy 1 <= r < m (r = " + std::to_string(factors) +
                           ", m = " + std::to_string(m) + ")");
  }
  if (n < 2) throw DataError("at least two observations are required");
}

Eigen::MatrixXd correlation(const Eigen::Ref<const Eigen::MatrixXd>& Y) {
  const Eigen::MatrixXd centered = Y.rowwise() - Y.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(Y.rows() - 1);
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  if (!(sd.minCoeff() > 0.0) || !sd.allFinite()) throw DataError("degenerate covariance: a series has zero variance");
  return sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
}

}  // namespace

Eigen::MatrixXd varimax(const Eigen::Ref<const Eigen::MatrixXd>& loadings, int max_iter, double tol) {
  const Eigen::Index m = loadings.rows(), r = loadings.cols();
  if (r < 2) return loadings;
  const Eigen::VectorXd norm = loadings.rowwise().norm().cwiseMax(1e-300);
  const Eigen::MatrixXd x = norm.cwiseInverse().asDiagonal() * loadings;
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(r, r);
  double d = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd z = x * rot;
    const Eigen::RowVectorXd col_ss = z.array().square().colwise().sum();
    const Eigen::MatrixXd b =
        x.transpose() * (z.array().cube().matrix() - z * col_ss.asDiagonal() / static_cast<double>(m));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = svd.matrixU() * svd.matrixV().transpose();
    const double d_new = svd.singularValues().sum();
    if (d_new < d * (1.0 + tol)) break;
    d = d_new;
  }
  return norm.asDiagonal() * (x * rot);
}

Eigen::MatrixXd static_factor_loadings(const Eigen::Ref<const Eigen::MatrixXd>& Y, int factors) {
  check_dims(Y.rows(), Y.cols(), factors);
  if (!Y.allFinite()) throw DataError("data must be finite");
  const Eigen::MatrixXd R = correlation(Y);
  const Eigen::Index m = R.rows();

  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) throw DataError("degenerate covariance: correlation matrix is singular");
  const Eigen::MatrixXd R_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::VectorXd communality = (1.0 - R_inv.diagonal().cwiseInverse().array()).matrix();

  Eigen::MatrixXd L(m, factors);
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd reduced = R;
    reduced.diagonal() = communality;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
    const Eigen::VectorXd values = eig.eigenvalues().reverse().head(factors).cwiseMax(0.0);
    L = eig.eigenvectors().rowwise().reverse().leftCols(factors) * values.cwiseSqrt().asDiagonal();
    const Eigen::VectorXd next = L.rowwise().squaredNorm().cwiseMin(0.995);
    const double change = (next - communality).cwiseAbs().maxCoeff();
    communality = next;
    if (change < 1e-8) break;
  }

  L = varimax(L);
  std::vector<int> order(static_cast<std::size_t>(factors));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::RowVectorXd ss = L.array().square().colwise().sum();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ss(a) > ss(b); });
  Eigen::MatrixXd sorted(m, factors);
  for (int j = 0; j < factors; ++j) {
    sorted.col(j) = L.col(order[static_cast<std::size_t>(j)]);
    // Sign convention: positive column sum.
    if (sorted.col(j).sum() < 0.0) sorted.col(j) *= -1.0;
  }
  return sorted;
}

std::vector<int> preorder_from_loadings(const Eigen::Ref<const Eigen::MatrixXd>& loadings) {
  const Eigen::Index m = loadings.rows();
  std::vector<bool> placed(static_cast<std::size_t>(m), false);
  std::vector<int> out;
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (placed[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || std::abs(loadings(i, j)) > std::abs(loadings(best, j))) best = i;
    }
    placed[static_cast<std::size_t>(best)] = true;
    out.push_back(static_cast<int>(best) + 1);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!placed[static_cast<std::size_t>(i)]) out.push_back(static_cast<int>(i) + 1);
  }
  return out;
}

std::vector<int> preorder(const Eigen::Ref<const Eigen::MatrixXd>& Y, int factors) {
  return preorder_from_loadings(static_factor_loadings(Y, factors));
}

BoolMatrix find_restrict_from_loadings(const Eigen::Ref<const Eigen::MatrixXd>& loadings) {
  const Eigen::Index m = loadings.rows(), r = loadings.cols();
  BoolMatrix restrict = BoolMatrix::Constant(m, r, false);
  std::vector<bool> placed(static_cast<std::size_t>(m), false);
  const Eigen::MatrixXd a = loadings.cwiseAbs();
  for (Eigen::Index k = 0; k + 1 < r; ++k) {
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (placed[static_cast<std::size_t>(i)]) continue;
      const double lead = a.row(i).head(k + 1).sum();
      const double rest = a.row(i).tail(r - k - 1).sum();
      const double score = lead > 0.0 ? rest / lead : std::numeric_limits<double>::infinity();
      if (best < 0 || score < best_score) {
        best = i;
        best_score = score;
      }
    }
    placed[static_cast<std::size_t>(best)] = true;
    restrict.row(best).tail(r - k - 1).setConstant(true);
  }
  return restrict;
}

BoolMatrix find_restrict(const Eigen::Ref<const Eigen::MatrixXd>& Y, int factors) {
  return find_restrict_from_loadings(static_factor_loadings(Y, factors));
}

}  // namespace sv
