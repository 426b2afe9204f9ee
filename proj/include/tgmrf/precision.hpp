#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "tgmrf/cholesky.hpp"
#include "tgmrf/graph.hpp"

namespace tgmrf {

/// Dependence parameters of the spatio-temporal precision.
/// Validity on a lattice is checked separately (check_pd / check_diag_dominance).
struct DependenceParams {
  double rho_s = 0.0;   // spatial neighbours, same time
  double rho_t = 0.0;   // same region, adjacent times
  double rho_st = 0.0;  // spatial neighbours at adjacent times
  double tau = 1.0;

  bool operator==(const DependenceParams&) const = default;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Symmetric sparse precision. Each unordered pair is stored once (row <= col)
/// so symmetry holds exactly. The Cholesky cache is installed by check_pd();
/// install it before sharing the matrix across threads.
class SparsePrecision {
 public:
  SparsePrecision(Index dim, std::vector<Triplet> upper, std::optional<StLayout> layout = std::nullopt);

  Index dim() const noexcept { return dim_; }
  const std::vector<Triplet>& upper() const noexcept { return upper_; }
  const std::optional<StLayout>& layout() const noexcept { return layout_; }

  /// Full symmetric CSC matrix.
  const Eigen::SparseMatrix<double>& matrix() const noexcept { return matrix_; }
  double coeff(Index row, Index col) const { return matrix_.coeff(static_cast<int>(row), static_cast<int>(col)); }
  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(matrix_); }

  /// False for intrinsic (rank-deficient) constructions such as ICAR.
  bool proper() const noexcept { return proper_; }
  void mark_improper() noexcept { proper_ = false; }

  /// Entry at new index perm[r], perm[c] equals this entry at (r, c).
  SparsePrecision permuted(const std::vector<Index>& perm, std::optional<StLayout> layout) const;
  /// Same layout, re-ordered. Requires a layout.
  SparsePrecision reordered(Ordering ordering) const;
  SparsePrecision scaled(double factor) const;

  /// `row col value` per stored upper-triangle entry.
  void write_triplets(std::ostream& out) const;

  bool has_factor() const noexcept { return static_cast<bool>(factor_); }
  /// Throws InternalError when check_pd has not succeeded on this matrix.
  const CholeskyFactor& factor() const;
  double log_det() const { return factor().log_det(); }

  void install_factor(std::shared_ptr<const CholeskyFactor> factor) const { factor_ = std::move(factor); }

 private:
  Index dim_;
  std::vector<Triplet> upper_;
  std::optional<StLayout> layout_;
  Eigen::SparseMatrix<double> matrix_;
  bool proper_ = true;
  mutable std::shared_ptr<const CholeskyFactor> factor_;
};

/// Proposed non-separable structure:
///   q(it,it) = D_it / tau
///   q(it,kt) = -rho_s  w_ik / tau
///   q(it,il) = -rho_t  v_tl / tau
///   q(it,kl) = -rho_st w_ik v_tl / tau
/// Construction never fails on rho values; the structural pattern is kept
/// even where a coefficient is zero.
SparsePrecision build_proposed(const SpatialGraph& sp, const TemporalGraph& tp, const DependenceParams& params,
                               const StLayout& layout);

/// Dense Q rebuilt from the conditional specification (weights b and
/// conditional variances tau/D) by q_rr = 1/tau_r, q_rc = -b_rc/tau_r.
/// Independent of build_proposed; refused above 1000 sites.
Eigen::MatrixXd conditional_moments_oracle(const SpatialGraph& sp, const TemporalGraph& tp,
                                           const DependenceParams& params, const StLayout& layout);

/// Proper CAR: Q = (D_w - rho W) / tau2. With `proper` set, rho must lie
/// strictly inside car_rho_bounds(); rho = 1 yields an improper (ICAR) matrix.
SparsePrecision build_car(const SpatialGraph& sp, double rho, double tau2, bool proper);

struct RhoBounds {
  double low;
  double high;
};

/// (1/lambda_min, 1/lambda_max) of D_w^{-1/2} W D_w^{-1/2}; high is exactly 1.
RhoBounds car_rho_bounds(const SpatialGraph& sp);

// ---- multivariate CAR baselines (p variables per region) ----

/// Q = (D_w - rho W) (x) Lambda by region, Lambda (x) (D_w - rho W) by variable.
struct GelfandCarlinParams {
  double rho = 0.0;
  Eigen::MatrixXd lambda;
};

/// Block (j, l) = (D_w - rho_jl W) Lambda_jl; variable ordering only.
struct JinParams {
  Eigen::MatrixXd rho;
  Eigen::MatrixXd lambda;
};

/// Q = (I (x) tau^{-1/2}) (I (x) A - W (x) B) (I (x) tau^{-1/2}) with
/// tau = diag(lambda_j^2), A = I - offdiag(rho_between), B = diag(rho) + offdiag(psi).
struct SainParams {
  Eigen::VectorXd rho;
  Eigen::MatrixXd rho_between;
  Eigen::MatrixXd psi;
  Eigen::VectorXd lambda;
};

using McarBaselineParams = std::variant<GelfandCarlinParams, JinParams, SainParams>;

/// `layout` is over (region, variable); n_times() is read as p.
SparsePrecision build_mcar_gelfand(const SpatialGraph& sp, const GelfandCarlinParams& params, Ordering ordering);
SparsePrecision build_mcar_jin(const SpatialGraph& sp, const JinParams& params, Ordering ordering);
SparsePrecision build_mcar_sain(const SpatialGraph& sp, const SainParams& params, Ordering ordering = Ordering::ByRegion);
SparsePrecision build_mcar(const SpatialGraph& sp, const McarBaselineParams& params, Ordering ordering);

// ---- validity ----

struct DominanceReport {
  bool dominant;
  Index worst_row;
  double worst_slack;  // q_rr - sum_{c != r} |q_rc| at worst_row
};

DominanceReport check_diag_dominance(const SparsePrecision& q);

/// Exact positive-definiteness via sparse Cholesky. Installs the factor on success.
bool check_pd(const SparsePrecision& q);
/// Same, reusing a symbolic analysis when the pattern matches.
bool check_pd(const SparsePrecision& q, CholeskyAnalysis& analysis);

enum class LimitAxis { Spatial, Temporal, SpatioTemporal };

/// Dominance bound on one rho with the other two at zero:
/// min over sites of D_it / m_it, m_it the count of neighbours of `axis`
/// type (sites with m_it = 0 skipped). Kept as an exact fraction.
struct MarginalLimit {
  Index numerator;
  Index denominator;
  Index region;  // binding site
  Index time;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

MarginalLimit marginal_limit_report(const SpatialGraph& sp, const TemporalGraph& tp, LimitAxis axis);
double marginal_limit(const SpatialGraph& sp, const TemporalGraph& tp, LimitAxis axis);

}  // namespace tgmrf
