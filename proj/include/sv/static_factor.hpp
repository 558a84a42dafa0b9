#ifndef SV_STATIC_FACTOR_HPP
#define SV_STATIC_FACTOR_HPP

#include <vector>

#include <Eigen/Dense>

namespace sv {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Static r-factor fit of the correlation matrix of Y (n x m) by iterated
/// principal-axis factoring, varimax rotated, factors sorted by explained variance.
Eigen::MatrixXd static_factor_loadings(const Eigen::Ref<const Eigen::MatrixXd>& Y, int factors);

/// Orthogonal varimax rotation with Kaiser normalization.
Eigen::MatrixXd varimax(const Eigen::Ref<const Eigen::MatrixXd>& loadings, int max_iter = 1000, double tol = 1e-10);

/// 1-based series order: the leader of each factor (largest |loading| among
/// unplaced series) first, the rest in original order.
std::vector<int> preorder(const Eigen::Ref<const Eigen::MatrixXd>& Y, int factors);
std::vector<int> preorder_from_loadings(const Eigen::Ref<const Eigen::MatrixXd>& loadings);

/// m x r restriction pattern (true = fixed at zero). The leader of factor k is
/// the unplaced series with the smallest loading mass on factors k+1.. relative
/// to factors 1..k, and is restricted on columns k+1..r. Ties go to the lower index.
BoolMatrix find_restrict(const Eigen::Ref<const Eigen::MatrixXd>& Y, int factors);
BoolMatrix find_restrict_from_loadings(const Eigen::Ref<const Eigen::MatrixXd>& loadings);

}  // namespace sv

#endif  // SV_STATIC_FACTOR_HPP
