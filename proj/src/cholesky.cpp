#include "tgmrf/cholesky.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "tgmrf/errors.hpp"

namespace tgmrf {

std::optional<CholeskyFactor> CholeskyFactor::extract(const Llt& llt) {
  if (llt.info() != Eigen::Success) return std::nullopt;
  CholeskyFactor out;
  // Simplicial factors store the diagonal first and rows in increasing order.
  out.lower_ = llt.matrixL();
  out.lower_.makeCompressed();
  const Index n = static_cast<Index>(out.lower_.rows());

  out.position_.resize(n);
  const auto& p = llt.permutationP().indices();
  for (Index i = 0; i < n; ++i) out.position_[i] = static_cast<Index>(p[static_cast<int>(i)]);

  const double* values = out.lower_.valuePtr();
  const int* outer = out.lower_.outerIndexPtr();
  for (Index j = 0; j < n; ++j) {
    const double diag = values[outer[j]];
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    out.log_det_ += 2.0 * std::log(diag);
  }
  return out;
}

std::optional<CholeskyFactor> CholeskyFactor::compute(const Eigen::SparseMatrix<double>& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw InvalidArgument("Cholesky needs a square matrix");
  Llt llt;
  llt.compute(symmetric);
  return extract(llt);
}

CholeskyAnalysis::CholeskyAnalysis(const Eigen::SparseMatrix<double>& pattern) {
  if (pattern.rows() != pattern.cols()) throw InvalidArgument("Cholesky needs a square matrix");
  if (!pattern.isCompressed()) throw InvalidArgument("Cholesky analysis needs a compressed matrix");
  outer_.assign(pattern.outerIndexPtr(), pattern.outerIndexPtr() + pattern.outerSize() + 1);
  inner_.assign(pattern.innerIndexPtr(), pattern.innerIndexPtr() + pattern.nonZeros());
  llt_.analyzePattern(pattern);
}

bool CholeskyAnalysis::matches(const Eigen::SparseMatrix<double>& m) const {
  if (!m.isCompressed() || static_cast<std::size_t>(m.outerSize()) + 1 != outer_.size() ||
      static_cast<std::size_t>(m.nonZeros()) != inner_.size())
    return false;
  return std::equal(outer_.begin(), outer_.end(), m.outerIndexPtr()) &&
         std::equal(inner_.begin(), inner_.end(), m.innerIndexPtr());
}

std::optional<CholeskyFactor> CholeskyAnalysis::factorize(const Eigen::SparseMatrix<double>& symmetric) {
  if (!matches(symmetric)) throw InvalidArgument("matrix pattern differs from the analysed pattern");
  llt_.factorize(symmetric);
  return CholeskyFactor::extract(llt_);
}

std::vector<double> CholeskyFactor::sample_from_standard(std::span<const double> z) const {
  const Index n = dim();
  if (z.size() != n) throw InvalidArgument("standard normal vector has wrong length");
  std::vector<double> x(z.begin(), z.end());
  const double* values = lower_.valuePtr();
  const int* inner = lower_.innerIndexPtr();
  const int* outer = lower_.outerIndexPtr();
  // Backward substitution with L' (column j of L is row j of L').
  for (Index jj = n; jj-- > 0;) {
    double acc = x[jj];
    for (int p = outer[jj] + 1; p < outer[jj + 1]; ++p) acc -= values[p] * x[static_cast<Index>(inner[p])];
    x[jj] = acc / values[outer[jj]];
  }
  std::vector<double> out(n);
  for (Index i = 0; i < n; ++i) out[i] = x[position_[i]];
  return out;
}

std::vector<double> CholeskyFactor::solve(std::span<const double> b) const {
  const Index n = dim();
  if (b.size() != n) throw InvalidArgument("right-hand side has wrong length");
  std::vector<double> y(n);
  for (Index i = 0; i < n; ++i) y[position_[i]] = b[i];
  const double* values = lower_.valuePtr();
  const int* inner = lower_.innerIndexPtr();
  const int* outer = lower_.outerIndexPtr();
  for (Index j = 0; j < n; ++j) {
    y[j] /= values[outer[j]];
    for (int p = outer[j] + 1; p < outer[j + 1]; ++p) y[static_cast<Index>(inner[p])] -= values[p] * y[j];
  }
  for (Index jj = n; jj-- > 0;) {
    double acc = y[jj];
    for (int p = outer[jj] + 1; p < outer[jj + 1]; ++p) acc -= values[p] * y[static_cast<Index>(inner[p])];
    y[jj] = acc / values[outer[jj]];
  }
  std::vector<double> out(n);
  for (Index i = 0; i < n; ++i) out[i] = y[position_[i]];
  return out;
}

std::vector<double> CholeskyFactor::inverse_diagonal() const {
  const Index n = dim();
  const double* values = lower_.valuePtr();
  const int* inner = lower_.innerIndexPtr();
  const int* outer = lower_.outerIndexPtr();
  // sigma[p] holds Sigma(row, col) at the position p of L(row, col), row >= col.
  std::vector<double> sigma(static_cast<std::size_t>(lower_.nonZeros()), 0.0);
  std::vector<int> slot(n, -1);     // position of a row within the current column
  std::vector<double> acc(n, 0.0);  // acc[i] = sum_k L(k, j) Sigma(k, i) over the column pattern

  for (Index jj = n; jj-- > 0;) {
    const int j = static_cast<int>(jj);
    const int first = outer[j];
    const int last = outer[j + 1];
    const double ljj = values[first];
    for (int p = first + 1; p < last; ++p) {
      slot[static_cast<std::size_t>(inner[p])] = p;
      acc[static_cast<std::size_t>(inner[p])] = 0.0;
    }
    // Every pair (k, i) of the pattern is visited once through column min(k, i);
    // the fill property guarantees the pair is stored there.
    for (int pk = first + 1; pk < last; ++pk) {
      const int k = inner[pk];
      const double lkj = values[pk];
      const int begin = outer[k];
      acc[static_cast<std::size_t>(k)] += lkj * sigma[static_cast<std::size_t>(begin)];
      for (int pr = begin + 1; pr < outer[k + 1]; ++pr) {
        const int at = slot[static_cast<std::size_t>(inner[pr])];
        if (at < 0) continue;
        const double s = sigma[static_cast<std::size_t>(pr)];
        acc[static_cast<std::size_t>(inner[pr])] += lkj * s;
        acc[static_cast<std::size_t>(k)] += values[at] * s;
      }
    }
    double diag = 0.0;
    for (int p = first + 1; p < last; ++p) {
      const double v = -acc[static_cast<std::size_t>(inner[p])] / ljj;
      sigma[static_cast<std::size_t>(p)] = v;
      diag += values[p] * v;
      slot[static_cast<std::size_t>(inner[p])] = -1;
    }
    sigma[static_cast<std::size_t>(first)] = 1.0 / (ljj * ljj) - diag / ljj;
  }

  std::vector<double> out(n);
  for (Index i = 0; i < n; ++i) out[i] = sigma[static_cast<std::size_t>(outer[position_[i]])];
  return out;
}

}  // namespace tgmrf
