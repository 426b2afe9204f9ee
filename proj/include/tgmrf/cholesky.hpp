#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tgmrf/graph.hpp"

namespace tgmrf {

/// Sparse Cholesky factor P Q P' = L L' with a fill-reducing permutation.
/// Immutable once computed.
class CholeskyFactor {
 public:
  /// Returns nullopt when a pivot is non-positive (Q not positive definite).
  static std::optional<CholeskyFactor> compute(const Eigen::SparseMatrix<double>& symmetric);

  Index dim() const noexcept { return static_cast<Index>(lower_.rows()); }
  double log_det() const noexcept { return log_det_; }

  /// Solves L' x = z in permuted coordinates and maps x back to the
  /// original ordering. For z ~ N(0, I) the result is N(0, Q^{-1}).
  std::vector<double> sample_from_standard(std::span<const double> z) const;

  /// Solves Q x = b.
  std::vector<double> solve(std::span<const double> b) const;

  /// diag(Q^{-1}) in the original ordering via the Takahashi recursion
  /// restricted to the sparsity pattern of L.
  std::vector<double> inverse_diagonal() const;

  const Eigen::SparseMatrix<double>& lower() const noexcept { return lower_; }
  /// position_[i] is the permuted index of original index i.
  const std::vector<Index>& position() const noexcept { return position_; }

 private:
  friend class CholeskyAnalysis;
  using Llt = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>>;
  static std::optional<CholeskyFactor> extract(const Llt& llt);
  CholeskyFactor() = default;

  Eigen::SparseMatrix<double> lower_;  // column-major, sorted row indices, diagonal first
  std::vector<Index> position_;
  double log_det_ = 0.0;
};

/// Symbolic analysis (fill-reducing ordering and elimination tree) kept
/// for repeated factorizations of matrices sharing one sparsity pattern.
/// Not thread-safe: give each chain its own instance.
class CholeskyAnalysis {
 public:
  explicit CholeskyAnalysis(const Eigen::SparseMatrix<double>& pattern);

  /// True when `m` has exactly the analysed pattern.
  bool matches(const Eigen::SparseMatrix<double>& m) const;
  /// Numeric factorization; nullopt when not positive definite.
  /// InvalidArgument when the pattern differs.
  std::optional<CholeskyFactor> factorize(const Eigen::SparseMatrix<double>& symmetric);

 private:
  std::vector<int> outer_;
  std::vector<int> inner_;
  CholeskyFactor::Llt llt_;
};

}  // namespace tgmrf
