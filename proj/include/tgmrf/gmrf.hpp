#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tgmrf/precision.hpp"

namespace tgmrf {

/// One draw of the latent Gaussian field, eps ~ N(0, Q^{-1}).
struct LatentField {
  std::vector<double> values;
  std::optional<StLayout> layout;
};

/// Draws `count` fields by solving L' x = z against the cached factor.
/// Deterministic for a fixed seed. Throws DomainError for a non-PD Q.
std::vector<LatentField> sample_gmrf(const SparsePrecision& q, std::uint64_t seed, std::size_t count);

/// -(d/2) log(2 pi) + (1/2) log|Q| - (1/2) eps' Q eps.
/// Requires a cached factor (call check_pd first); otherwise InternalError.
double gmrf_log_density(std::span<const double> eps, const SparsePrecision& q);

/// eps' Q eps.
double quadratic_form(std::span<const double> eps, const SparsePrecision& q);

struct MarginalStdOptions {
  Index exact_cap = 5000;         // selected inversion up to this dimension
  bool allow_column_solves = false;  // above the cap, one solve per site
};

/// sigma_r = sqrt((Q^{-1})_rr).
std::vector<double> marginal_std(const SparsePrecision& q, const MarginalStdOptions& options = {});

inline constexpr double kUniformClamp = 1e-15;

double standard_normal_cdf(double x);
double standard_normal_quantile(double u);

/// u_r = Phi(eps_r / sigma_r), clamped to [1e-15, 1 - 1e-15].
std::vector<double> uniformize(std::span<const double> eps, std::span<const double> sigma);
double uniformize_one(double eps, double sigma);

}  // namespace tgmrf
