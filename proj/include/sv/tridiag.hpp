#ifndef SV_TRIDIAG_HPP
#define SV_TRIDIAG_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sv/errors.hpp"
#include "sv/rng.hpp"

namespace sv {

/// Cholesky factor Q = L L^T of a symmetric tridiagonal matrix, with L lower
/// bidiagonal (diagonal `d`, subdiagonal `e`).
template <class Scalar>
struct BidiagonalFactor {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector d;
  Vector e;
};

template <class DerivedD, class DerivedO>
BidiagonalFactor<typename DerivedD::Scalar> factor_tridiagonal(const Eigen::MatrixBase<DerivedD>& diag,
                                                                 const Eigen::MatrixBase<DerivedO>& off) {
  using Scalar = typename DerivedD::Scalar;
  const Eigen::Index n = diag.size();
  if (off.size() != (n > 0 ? n - 1 : 0)) throw DimensionError("tridiagonal off-diagonal has the wrong length");
  BidiagonalFactor<Scalar> f;
  f.d.resize(n);
  f.e.resize(off.size());
  Scalar prev_e = Scalar(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar pivot = diag(i) - prev_e * prev_e;
    using std::sqrt;
    if (!(pivot > Scalar(0)) || !std::isfinite(static_cast<double>(pivot))) {
      throw NumericError("tridiagonal precision is not positive definite at row " + std::to_string(i));
    }
    f.d(i) = sqrt(pivot);
    if (i + 1 < n) {
      f.e(i) = off(i) / f.d(i);
      prev_e = f.e(i);
    }
  }
  return f;
}

/// Solves L a = b.
template <class Scalar, class Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward_solve(const BidiagonalFactor<Scalar>& f,
                                                        const Eigen::MatrixBase<Derived>& b) {
  const Eigen::Index n = f.d.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> a(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i) = (b(i) - (i > 0 ? f.e(i - 1) * a(i - 1) : Scalar(0))) / f.d(i);
  }
  return a;
}

/// Solves L^T x = a.
template <class Scalar, class Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> backward_solve(const BidiagonalFactor<Scalar>& f,
                                                         const Eigen::MatrixBase<Derived>& a) {
  const Eigen::Index n = f.d.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    x(i) = (a(i) - (i + 1 < n ? f.e(i) * x(i + 1) : Scalar(0))) / f.d(i);
  }
  return x;
}

/// Mean Q^{-1} b of the Gaussian with tridiagonal precision Q and linear term b.
template <class DerivedD, class DerivedO, class DerivedB>
Eigen::Matrix<typename DerivedD::Scalar, Eigen::Dynamic, 1> tridiagonal_mean(
    const Eigen::MatrixBase<DerivedD>& diag, const Eigen::MatrixBase<DerivedO>& off,
    const Eigen::MatrixBase<DerivedB>& linear) {
  const auto f = factor_tridiagonal(diag, off);
  return backward_solve(f, forward_solve(f, linear));
}

/// One draw from N(Q^{-1} b, Q^{-1}): a single factorization, a forward pass
/// for the mean and one back-substitution that also carries the noise.
template <class DerivedD, class DerivedO, class DerivedB>
Eigen::VectorXd sample_tridiagonal(const Eigen::MatrixBase<DerivedD>& diag, const Eigen::MatrixBase<DerivedO>& off,
                                   const Eigen::MatrixBase<DerivedB>& linear, RngStream& rng) {
  const auto f = factor_tridiagonal(diag, off);
  Eigen::VectorXd a = forward_solve(f, linear);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += rng.normal();
  return backward_solve(f, a);
}

}  // namespace sv

#endif  // SV_TRIDIAG_HPP
