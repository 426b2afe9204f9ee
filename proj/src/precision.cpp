#include "tgmrf/precision.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <tuple>
#include <type_traits>

#include "tgmrf/errors.hpp"

namespace tgmrf {

namespace {

// Accumulates symmetric entries keyed by (low, high); duplicates add.
class UpperAccumulator {
 public:
  void add(Index r, Index c, double v) {
    if (r > c) std::swap(r, c);
    entries_[{r, c}] += v;
  }

  std::vector<Triplet> take() {
    std::vector<Triplet> out;
    out.reserve(entries_.size());
    for (const auto& [key, value] : entries_) out.push_back({key.first, key.second, value});
    return out;
  }

 private:
  std::map<std::pair<Index, Index>, double> entries_;
};

std::vector<Triplet> normalize_upper(std::vector<Triplet> upper, Index dim) {
  for (auto& t : upper) {
    if (t.row >= dim || t.col >= dim) throw InvalidArgument("precision entry index out of range");
    if (t.row > t.col) std::swap(t.row, t.col);
  }
  std::sort(upper.begin(), upper.end(),
            [](const Triplet& a, const Triplet& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  std::vector<Triplet> merged;
  merged.reserve(upper.size());
  for (const auto& t : upper) {
    if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col)
      merged.back().value += t.value;
    else
      merged.push_back(t);
  }
  return merged;
}

void check_lambda_pd(const Eigen::MatrixXd& lambda, Index p, const char* what) {
  if (static_cast<Index>(lambda.rows()) != p || static_cast<Index>(lambda.cols()) != p)
    throw InvalidArgument(std::string(what) + " has wrong dimensions");
  if ((lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw DomainError(std::string(what) + " is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success) throw DomainError(std::string(what) + " is not positive definite");
}

void check_rho_inside(const SpatialGraph& sp, double rho) {
  const auto bounds = car_rho_bounds(sp);
  if (!(rho > bounds.low && rho < bounds.high))
    throw DomainError("CAR rho " + std::to_string(rho) + " outside (" + std::to_string(bounds.low) + ", " +
                      std::to_string(bounds.high) + ")");
}

}  // namespace

SparsePrecision::SparsePrecision(Index dim, std::vector<Triplet> upper, std::optional<StLayout> layout)
    : dim_(dim), upper_(normalize_upper(std::move(upper), dim)), layout_(std::move(layout)) {
  if (dim == 0) throw InvalidArgument("precision dimension must be positive");
  if (layout_ && layout_->size() != dim) throw InvalidArgument("layout size does not match precision dimension");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * upper_.size());
  for (const auto& t : upper_) {
    trips.emplace_back(static_cast<int>(t.row), static_cast<int>(t.col), t.value);
    if (t.row != t.col) trips.emplace_back(static_cast<int>(t.col), static_cast<int>(t.row), t.value);
  }
  matrix_.resize(static_cast<int>(dim), static_cast<int>(dim));
  matrix_.setFromTriplets(trips.begin(), trips.end());
  matrix_.makeCompressed();
}

SparsePrecision SparsePrecision::permuted(const std::vector<Index>& perm, std::optional<StLayout> layout) const {
  if (perm.size() != dim_) throw InvalidArgument("permutation has wrong length");
  std::vector<Triplet> moved;
  moved.reserve(upper_.size());
  for (const auto& t : upper_) moved.push_back({perm[t.row], perm[t.col], t.value});
  SparsePrecision out(dim_, std::move(moved), std::move(layout));
  out.proper_ = proper_;
  return out;
}

SparsePrecision SparsePrecision::reordered(Ordering ordering) const {
  if (!layout_) throw InvalidArgument("precision has no layout to reorder");
  const StLayout target = layout_->with_ordering(ordering);
  return permuted(layout_->permutation_to(target), target);
}

SparsePrecision SparsePrecision::scaled(double factor) const {
  std::vector<Triplet> out = upper_;
  for (auto& t : out) t.value *= factor;
  SparsePrecision result(dim_, std::move(out), layout_);
  result.proper_ = proper_;
  return result;
}

void SparsePrecision::write_triplets(std::ostream& out) const {
  const auto precision = out.precision(17);
  for (const auto& t : upper_) out << t.row << ' ' << t.col << ' ' << t.value << '\n';
  out.precision(precision);
}

const CholeskyFactor& SparsePrecision::factor() const {
  if (!factor_) throw InternalError("no Cholesky factor cached; call check_pd() first");
  return *factor_;
}

SparsePrecision build_proposed(const SpatialGraph& sp, const TemporalGraph& tp, const DependenceParams& params,
                               const StLayout& layout) {
  if (layout.n_regions() != sp.n_regions() || layout.n_times() != tp.n_times())
    throw InvalidArgument("layout does not match the spatial and temporal graphs");
  if (!(params.tau > 0.0)) throw InvalidArgument("tau must be positive");
  const double inv_tau = 1.0 / params.tau;

  std::vector<Triplet> upper;
  upper.reserve(layout.size() * 8);
  for (Index i = 0; i < sp.n_regions(); ++i) {
    for (Index t = 0; t < tp.n_times(); ++t) {
      const Index r = layout.flat(i, t);
      upper.push_back({r, r, static_cast<double>(st_degree(sp, tp, i, t)) * inv_tau});
      for (Index k : sp.neighbors(i)) {
        const Index c = layout.flat(k, t);
        if (r < c) upper.push_back({r, c, -params.rho_s * inv_tau});
      }
      for (Index l : tp.neighbors(t)) {
        const Index c = layout.flat(i, l);
        if (r < c) upper.push_back({r, c, -params.rho_t * inv_tau});
        for (Index k : sp.neighbors(i)) {
          const Index cc = layout.flat(k, l);
          if (r < cc) upper.push_back({r, cc, -params.rho_st * inv_tau});
        }
      }
    }
  }
  return SparsePrecision(layout.size(), std::move(upper), layout);
}

Eigen::MatrixXd conditional_moments_oracle(const SpatialGraph& sp, const TemporalGraph& tp,
                                           const DependenceParams& params, const StLayout& layout) {
  const Index n = sp.n_regions();
  const Index T = tp.n_times();
  if (n * T > 1000) throw InvalidArgument("conditional-moment oracle is limited to 1000 sites");
  if (layout.n_regions() != n || layout.n_times() != T) throw InvalidArgument("layout does not match graphs");

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<int>(n), static_cast<int>(n));
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<int>(T), static_cast<int>(T));
  for (const auto& [a, b] : sp.edges()) w(int(a), int(b)) = w(int(b), int(a)) = 1.0;
  for (const auto& [a, b] : tp.edges()) v(int(a), int(b)) = v(int(b), int(a)) = 1.0;

  const Index dim = n * T;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<int>(dim), static_cast<int>(dim));
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < T; ++t) {
      // D_it: every (k, l) != (i, t) with a spatial, temporal, or cross link.
      double d = 0.0;
      for (Index k = 0; k < n; ++k) d += w(int(i), int(k));
      for (Index l = 0; l < T; ++l) d += v(int(t), int(l));
      for (Index k = 0; k < n; ++k)
        for (Index l = 0; l < T; ++l) d += w(int(i), int(k)) * v(int(t), int(l));
      if (d == 0.0) continue;  // isolated: conditional variance undefined, row left at zero
      const double cond_var = params.tau / d;
      const Index r = layout.flat(i, t);
      q(int(r), int(r)) = 1.0 / cond_var;
      for (Index k = 0; k < n; ++k) {
        for (Index l = 0; l < T; ++l) {
          if (k == i && l == t) continue;
          double b = 0.0;
          if (l == t) b = params.rho_s * w(int(i), int(k)) / d;
          else if (k == i) b = params.rho_t * v(int(t), int(l)) / d;
          else b = params.rho_st * w(int(i), int(k)) * v(int(t), int(l)) / d;
          q(int(r), int(layout.flat(k, l))) = -b / cond_var;
        }
      }
    }
  }
  return q;
}

SparsePrecision build_car(const SpatialGraph& sp, double rho, double tau2, bool proper) {
  if (!(tau2 > 0.0)) throw InvalidArgument("tau2 must be positive");
  if (proper) check_rho_inside(sp, rho);
  std::vector<Triplet> upper;
  for (Index i = 0; i < sp.n_regions(); ++i) {
    upper.push_back({i, i, static_cast<double>(sp.degree(i)) / tau2});
    for (Index k : sp.neighbors(i))
      if (i < k) upper.push_back({i, k, -rho / tau2});
  }
  SparsePrecision q(sp.n_regions(), std::move(upper), StLayout(sp.n_regions(), 1, Ordering::ByRegion));
  if (!proper) {
    bool inside = false;
    try {
      const auto bounds = car_rho_bounds(sp);
      inside = rho > bounds.low && rho < bounds.high;
    } catch (const DomainError&) {
      inside = false;
    }
    if (!inside) q.mark_improper();
  }
  return q;
}

RhoBounds car_rho_bounds(const SpatialGraph& sp) {
  const Index n = sp.n_regions();
  Eigen::VectorXd inv_sqrt_deg(static_cast<int>(n));
  for (Index i = 0; i < n; ++i) {
    if (sp.degree(i) == 0) throw DomainError("region " + std::to_string(i) + " has no neighbours");
    inv_sqrt_deg(int(i)) = 1.0 / std::sqrt(static_cast<double>(sp.degree(i)));
  }
  Eigen::MatrixXd normalized = Eigen::MatrixXd::Zero(int(n), int(n));
  for (const auto& [a, b] : sp.edges())
    normalized(int(a), int(b)) = normalized(int(b), int(a)) = inv_sqrt_deg(int(a)) * inv_sqrt_deg(int(b));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalized, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
  const double lambda_min = eig.eigenvalues().minCoeff();
  // Largest eigenvalue is 1 (eigenvector D^{1/2} 1), so the upper bound is exact.
  return {1.0 / lambda_min, 1.0};
}

SparsePrecision build_mcar_gelfand(const SpatialGraph& sp, const GelfandCarlinParams& params, Ordering ordering) {
  const Index p = static_cast<Index>(params.lambda.rows());
  if (p == 0) throw InvalidArgument("Lambda must be non-empty");
  check_lambda_pd(params.lambda, p, "Lambda");
  check_rho_inside(sp, params.rho);
  const StLayout layout(sp.n_regions(), p, ordering);
  UpperAccumulator acc;
  for (Index i = 0; i < sp.n_regions(); ++i) {
    const double d = static_cast<double>(sp.degree(i));
    for (Index j = 0; j < p; ++j)
      for (Index l = j; l < p; ++l) {
        const double lam = params.lambda(int(j), int(l));
        acc.add(layout.flat(i, j), layout.flat(i, l), d * lam);
        for (Index k : sp.neighbors(i)) {
          // (i,j)-(k,l) and (i,l)-(k,j) are distinct pairs when j != l; visit each once.
          if (i < k) {
            acc.add(layout.flat(i, j), layout.flat(k, l), -params.rho * lam);
            if (j != l) acc.add(layout.flat(i, l), layout.flat(k, j), -params.rho * lam);
          }
        }
      }
  }
  return SparsePrecision(layout.size(), acc.take(), layout);
}

SparsePrecision build_mcar_jin(const SpatialGraph& sp, const JinParams& params, Ordering ordering) {
  if (ordering != Ordering::ByTime)
    throw InvalidArgument("unsupported ordering: this MCAR form is defined for variable-major ordering only");
  const Index p = static_cast<Index>(params.lambda.rows());
  if (p == 0 || static_cast<Index>(params.lambda.cols()) != p || static_cast<Index>(params.rho.rows()) != p ||
      static_cast<Index>(params.rho.cols()) != p)
    throw InvalidArgument("rho and Lambda must both be p x p");
  if ((params.rho - params.rho.transpose()).cwiseAbs().maxCoeff() > 0.0 ||
      (params.lambda - params.lambda.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw DomainError("rho and Lambda must be symmetric for a symmetric precision");
  const StLayout layout(sp.n_regions(), p, ordering);
  UpperAccumulator acc;
  for (Index j = 0; j < p; ++j)
    for (Index l = j; l < p; ++l) {
      const double lam = params.lambda(int(j), int(l));
      const double rho = params.rho(int(j), int(l));
      for (Index i = 0; i < sp.n_regions(); ++i) {
        acc.add(layout.flat(i, j), layout.flat(i, l), static_cast<double>(sp.degree(i)) * lam);
        for (Index k : sp.neighbors(i)) {
          if (j == l && k < i) continue;  // diagonal block: each spatial pair once
          acc.add(layout.flat(i, j), layout.flat(k, l), -rho * lam);
        }
      }
    }
  return SparsePrecision(layout.size(), acc.take(), layout);
}

SparsePrecision build_mcar_sain(const SpatialGraph& sp, const SainParams& params, Ordering ordering) {
  const Index p = static_cast<Index>(params.lambda.size());
  if (p == 0 || static_cast<Index>(params.rho.size()) != p || static_cast<Index>(params.rho_between.rows()) != p ||
      static_cast<Index>(params.rho_between.cols()) != p || static_cast<Index>(params.psi.rows()) != p ||
      static_cast<Index>(params.psi.cols()) != p)
    throw InvalidArgument("Sain parameters must share the same variable count p");
  for (Index j = 0; j < p; ++j)
    if (!(params.lambda(int(j)) > 0.0)) throw InvalidArgument("Lambda_j must be positive");
  if ((params.rho_between - params.rho_between.transpose()).cwiseAbs().maxCoeff() > 0.0 ||
      (params.psi - params.psi.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw DomainError("rho_jl and psi_jl must be symmetric for a symmetric precision");

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(int(p), int(p));
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(int(p), int(p));
  for (Index j = 0; j < p; ++j)
    for (Index l = 0; l < p; ++l) {
      if (j == l) {
        b(int(j), int(j)) = params.rho(int(j));
      } else {
        a(int(j), int(l)) = -params.rho_between(int(j), int(l));
        b(int(j), int(l)) = params.psi(int(j), int(l));
      }
    }

  const StLayout by_region(sp.n_regions(), p, Ordering::ByRegion);
  UpperAccumulator acc;
  for (Index i = 0; i < sp.n_regions(); ++i)
    for (Index j = 0; j < p; ++j)
      for (Index l = 0; l < p; ++l) {
        const double scale = 1.0 / (params.lambda(int(j)) * params.lambda(int(l)));
        const Index r = by_region.flat(i, j);
        if (r <= by_region.flat(i, l)) acc.add(r, by_region.flat(i, l), a(int(j), int(l)) * scale);
        for (Index k : sp.neighbors(i)) {
          const Index c = by_region.flat(k, l);
          if (r < c) acc.add(r, c, -b(int(j), int(l)) * scale);
        }
      }
  SparsePrecision q(by_region.size(), acc.take(), by_region);
  return ordering == Ordering::ByRegion ? q : q.reordered(ordering);
}

SparsePrecision build_mcar(const SpatialGraph& sp, const McarBaselineParams& params, Ordering ordering) {
  return std::visit(
      [&](const auto& concrete) -> SparsePrecision {
        using T = std::decay_t<decltype(concrete)>;
        if constexpr (std::is_same_v<T, GelfandCarlinParams>) return build_mcar_gelfand(sp, concrete, ordering);
        else if constexpr (std::is_same_v<T, JinParams>) return build_mcar_jin(sp, concrete, ordering);
        else return build_mcar_sain(sp, concrete, ordering);
      },
      params);
}

DominanceReport check_diag_dominance(const SparsePrecision& q) {
  const auto& m = q.matrix();
  DominanceReport report{true, 0, std::numeric_limits<double>::infinity()};
  for (int c = 0; c < m.outerSize(); ++c) {
    double diag = 0.0;
    double off = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it) {
      if (it.row() == c) diag = it.value();
      else off += std::abs(it.value());
    }
    const double slack = diag - off;
    if (slack < report.worst_slack) {
      report.worst_slack = slack;
      report.worst_row = static_cast<Index>(c);
    }
    if (!(slack > 0.0)) report.dominant = false;
  }
  return report;
}

bool check_pd(const SparsePrecision& q) {
  if (q.has_factor()) return true;
  if (!q.proper()) return false;
  auto factor = CholeskyFactor::compute(q.matrix());
  if (!factor) return false;
  q.install_factor(std::make_shared<const CholeskyFactor>(std::move(*factor)));
  return true;
}

bool check_pd(const SparsePrecision& q, CholeskyAnalysis& analysis) {
  if (q.has_factor()) return true;
  if (!q.proper()) return false;
  if (!analysis.matches(q.matrix())) return check_pd(q);
  auto factor = analysis.factorize(q.matrix());
  if (!factor) return false;
  q.install_factor(std::make_shared<const CholeskyFactor>(std::move(*factor)));
  return true;
}

MarginalLimit marginal_limit_report(const SpatialGraph& sp, const TemporalGraph& tp, LimitAxis axis) {
  std::optional<MarginalLimit> best;
  for (Index i = 0; i < sp.n_regions(); ++i) {
    for (Index t = 0; t < tp.n_times(); ++t) {
      const Index ns = sp.degree(i);
      const Index nt = tp.degree(t);
      Index m = 0;
      switch (axis) {
        case LimitAxis::Spatial: m = ns; break;
        case LimitAxis::Temporal: m = nt; break;
        case LimitAxis::SpatioTemporal: m = ns * nt; break;
      }
      if (m == 0) continue;
      const Index d = ns + nt + ns * nt;
      // d/m < best.num/best.den  <=>  d * best.den < best.num * m
      if (!best || d * best->denominator < best->numerator * m) best = MarginalLimit{d, m, i, t};
    }
  }
  if (!best) throw DomainError("no site has a neighbour of the requested type; the limit is undefined");
  const Index g = std::gcd(best->numerator, best->denominator);
  best->numerator /= g;
  best->denominator /= g;
  return *best;
}

double marginal_limit(const SpatialGraph& sp, const TemporalGraph& tp, LimitAxis axis) {
  return marginal_limit_report(sp, tp, axis).value();
}

}  // namespace tgmrf
