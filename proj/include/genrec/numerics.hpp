#pragma once

// Dense linear-algebra kernel: SVD-backed pseudo-inverse and numerical rank,
// element-wise soft-thresholding, seeded Gaussian sampling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "genrec/errors.hpp"
#include "genrec/random.hpp"

namespace genrec {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

template <typename Scalar>
struct RankResult {
  Index rank = 0;
  std::vector<Scalar> singular_values;  // descending
  Scalar tolerance_used = 0;            // absolute: rel_tol * sigma_max
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (!a.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

template <typename Derived>
void require_nonempty(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (a.rows() == 0 || a.cols() == 0) throw InvalidInput(std::string(what) + ": empty matrix");
}

}  // namespace detail

/// Default relative truncation level: machine epsilon times the larger dimension.
template <typename Scalar = double>
Scalar default_rank_tolerance(Index rows, Index cols) {
  return std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(std::max(rows, cols));
}

/// Rank = number of singular values strictly above rel_tol * sigma_max.
/// A zero matrix has rank 0. Pass rel_tol <= 0 to use default_rank_tolerance.
template <typename Derived>
RankResult<typename Derived::Scalar> numerical_rank(const Eigen::MatrixBase<Derived>& a,
                                                    typename Derived::Scalar rel_tol = 0) {
  using Scalar = typename Derived::Scalar;
  detail::require_nonempty(a, "numerical_rank");
  detail::require_finite(a, "numerical_rank");
  if (rel_tol <= 0) rel_tol = default_rank_tolerance<Scalar>(a.rows(), a.cols());

  const Mat<Scalar> dense = a;
  Eigen::JacobiSVD<Mat<Scalar>> svd(dense);
  const auto& sv = svd.singularValues();

  RankResult<Scalar> out;
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  const Scalar sigma_max = sv.size() > 0 ? sv(0) : Scalar(0);
  out.tolerance_used = rel_tol * sigma_max;
  if (sigma_max == Scalar(0)) return out;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > out.tolerance_used) ++out.rank;
  return out;
}

/// Moore-Penrose pseudo-inverse via thin SVD. Singular values at or below
/// rel_tol * sigma_max are treated as zero.
template <typename Derived>
Mat<typename Derived::Scalar> pseudo_inverse(const Eigen::MatrixBase<Derived>& a,
                                             typename Derived::Scalar rel_tol = 0) {
  using Scalar = typename Derived::Scalar;
  detail::require_nonempty(a, "pseudo_inverse");
  detail::require_finite(a, "pseudo_inverse");
  if (rel_tol <= 0) rel_tol = default_rank_tolerance<Scalar>(a.rows(), a.cols());

  const Mat<Scalar> dense = a;
  Eigen::JacobiSVD<Mat<Scalar>> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Scalar cutoff = sv.size() > 0 ? rel_tol * sv(0) : Scalar(0);

  Vec<Scalar> inv_sv(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    inv_sv(i) = (sv(i) > cutoff && sv(i) > Scalar(0)) ? Scalar(1) / sv(i) : Scalar(0);
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

/// Proximal map of theta * ||x||_1.
template <typename Derived>
Vec<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& x,
                                             typename Derived::Scalar theta) {
  using Scalar = typename Derived::Scalar;
  if (!(theta >= Scalar(0))) throw InvalidInput("soft_threshold: theta must be >= 0");
  return x.unaryExpr([theta](Scalar v) {
    if (v > theta) return v - theta;
    if (v < -theta) return v + theta;
    return Scalar(0);
  });
}

/// i.i.d. N(0,1) entries, filled in row-major order from the given stream.
template <typename Scalar = double>
Mat<Scalar> gaussian_matrix(Index rows, Index cols, Rng& rng) {
  if (rows < 1 || cols < 1) throw InvalidInput("gaussian_matrix: rows and cols must be >= 1");
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Mat<Scalar> out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

template <typename Scalar = double>
Mat<Scalar> gaussian_matrix(Index rows, Index cols, Seed seed) {
  Rng rng(seed);
  return gaussian_matrix<Scalar>(rows, cols, rng);
}

}  // namespace genrec
