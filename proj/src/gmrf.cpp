#include "tgmrf/gmrf.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "tgmrf/errors.hpp"
#include "tgmrf/random.hpp"

namespace tgmrf {

std::vector<LatentField> sample_gmrf(const SparsePrecision& q, std::uint64_t seed, std::size_t count) {
  if (!check_pd(q)) throw DomainError("cannot sample: precision is not positive definite");
  const auto& factor = q.factor();
  Engine engine = make_engine(seed);
  std::normal_distribution<double> normal;
  std::vector<double> z(q.dim());
  std::vector<LatentField> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    for (auto& v : z) v = normal(engine);
    out.push_back({factor.sample_from_standard(z), q.layout()});
  }
  return out;
}

double quadratic_form(std::span<const double> eps, const SparsePrecision& q) {
  if (eps.size() != q.dim()) throw InvalidArgument("latent field length does not match precision");
  double acc = 0.0;
  for (const auto& t : q.upper()) {
    const double term = t.value * eps[t.row] * eps[t.col];
    acc += t.row == t.col ? term : 2.0 * term;
  }
  return acc;
}

double gmrf_log_density(std::span<const double> eps, const SparsePrecision& q) {
  const double log_det = q.log_det();
  const double d = static_cast<double>(q.dim());
  return -0.5 * d * std::log(2.0 * std::numbers::pi) + 0.5 * log_det - 0.5 * quadratic_form(eps, q);
}

std::vector<double> marginal_std(const SparsePrecision& q, const MarginalStdOptions& options) {
  if (!check_pd(q)) throw DomainError("marginal standard deviations need a positive definite precision");
  const auto& factor = q.factor();
  std::vector<double> variance;
  if (q.dim() <= options.exact_cap) {
    variance = factor.inverse_diagonal();
  } else if (options.allow_column_solves) {
    variance.resize(q.dim());
    std::vector<double> e(q.dim(), 0.0);
    for (Index r = 0; r < q.dim(); ++r) {
      e[r] = 1.0;
      variance[r] = factor.solve(e)[r];
      e[r] = 0.0;
    }
  } else {
    throw InvalidArgument("dimension " + std::to_string(q.dim()) + " exceeds the exact marginal-variance cap " +
                          std::to_string(options.exact_cap) + " and column solves are disabled");
  }
  std::vector<double> sigma(variance.size());
  for (std::size_t r = 0; r < variance.size(); ++r) {
    if (!(variance[r] > 0.0)) throw NumericalError("non-positive marginal variance");
    sigma[r] = std::sqrt(variance[r]);
  }
  return sigma;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double standard_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("normal quantile needs u in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

double uniformize_one(double eps, double sigma) {
  if (!std::isfinite(eps) || !std::isfinite(sigma)) throw InvalidArgument("non-finite latent value");
  if (!(sigma > 0.0)) throw InvalidArgument("marginal standard deviation must be positive");
  return std::clamp(standard_normal_cdf(eps / sigma), kUniformClamp, 1.0 - kUniformClamp);
}

std::vector<double> uniformize(std::span<const double> eps, std::span<const double> sigma) {
  if (eps.size() != sigma.size()) throw InvalidArgument("latent field and sigma lengths differ");
  std::vector<double> u(eps.size());
  for (std::size_t r = 0; r < eps.size(); ++r) u[r] = uniformize_one(eps[r], sigma[r]);
  return u;
}

}  // namespace tgmrf
