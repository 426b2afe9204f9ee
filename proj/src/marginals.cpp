#include "tgmrf/marginals.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

#include "tgmrf/errors.hpp"
#include "tgmrf/gmrf.hpp"

namespace tgmrf {

namespace {

using namespace boost::math::policies;
using FastPolicy = policy<domain_error<errno_on_error>, overflow_error<errno_on_error>,
                          evaluation_error<errno_on_error>, promote_double<false>>;

double lower_p(double a, double x) { return boost::math::gamma_p(a, x, FastPolicy()); }

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::GI: return "gi";
    case Family::GSC: return "gsc";
    case Family::GSH: return "gsh";
    case Family::LN: return "ln";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Family f : kAllFamilies)
    if (lower == family_name(f)) return f;
  throw InvalidArgument("unknown family '" + std::string(name) + "' (valid: gi, gsc, gsh, ln)");
}

double gamma_quantile_unit(double a, double u) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("gamma shape must be positive");
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  // Invert in the better-conditioned tail.
  const double x = u > 0.5 ? boost::math::gamma_q_inv(a, 1.0 - u, FastPolicy()) : boost::math::gamma_p_inv(a, u, FastPolicy());
  if (!std::isfinite(x)) throw NumericalError("gamma quantile failed to converge");
  return std::max(x, std::numeric_limits<double>::min());
}

SiteDistribution SiteDistribution::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw DomainError("gamma shape and scale must be positive and finite");
  return {Kind::Gamma, shape, scale};
}

SiteDistribution SiteDistribution::log_normal(double location, double scale) {
  if (!std::isfinite(location) || !(scale >= 0.0) || !std::isfinite(scale))
    throw DomainError("log-normal location must be finite and scale non-negative");
  return {Kind::LogNormal, location, scale};
}

double SiteDistribution::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  if (kind_ == Kind::Gamma) return std::max(b_ * gamma_quantile_unit(a_, u), std::numeric_limits<double>::min());
  if (b_ == 0.0) return std::exp(a_);
  return std::max(std::exp(a_ + b_ * standard_normal_quantile(u)), std::numeric_limits<double>::min());
}

double SiteDistribution::cdf(double x) const {
  if (!(x > 0.0)) throw DomainError("cdf argument must be positive");
  if (kind_ == Kind::Gamma) return lower_p(a_, x / b_);
  if (b_ == 0.0) return x >= std::exp(a_) ? 1.0 : 0.0;
  return standard_normal_cdf((std::log(x) - a_) / b_);
}

double SiteDistribution::log_pdf(double x) const {
  if (!(x > 0.0)) throw DomainError("density argument must be positive");
  if (kind_ == Kind::Gamma) return (a_ - 1.0) * std::log(x) - x / b_ - std::lgamma(a_) - a_ * std::log(b_);
  if (b_ == 0.0) throw DomainError("degenerate log-normal has no density");
  const double z = (std::log(x) - a_) / b_;
  return -std::log(x) - std::log(b_) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
}

double SiteDistribution::mean() const {
  return kind_ == Kind::Gamma ? a_ * b_ : std::exp(a_ + 0.5 * b_ * b_);
}

double SiteDistribution::variance() const {
  if (kind_ == Kind::Gamma) return a_ * b_ * b_;
  const double s2 = b_ * b_;
  return std::expm1(s2) * std::exp(2.0 * a_ + s2);
}

SiteDistribution site_distribution(Family family, double nu, double eta, double sigma) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("dispersion nu must be positive");
  if (!std::isfinite(eta)) throw DomainError("linear predictor must be finite");
  switch (family) {
    case Family::GI: return SiteDistribution::gamma(nu * std::exp(2.0 * eta), std::exp(-eta) / nu);
    case Family::GSC: return SiteDistribution::gamma(nu, std::exp(eta) / nu);
    case Family::GSH: return SiteDistribution::gamma(nu * std::exp(eta), 1.0 / nu);
    case Family::LN:
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("latent sigma must be non-negative");
      return SiteDistribution::log_normal(eta, sigma / std::sqrt(nu));
  }
  throw InvalidArgument("unknown family");
}

SiteDistribution site_params(const MarginalSpec& spec, std::size_t site) {
  if (site >= spec.eta.size()) throw InvalidArgument("site index out of range");
  double sigma = 1.0;
  if (spec.family == Family::LN) {
    if (spec.sigma.size() != spec.eta.size()) throw InvalidArgument("LN family needs one sigma per site");
    sigma = spec.sigma[site];
    if (!(sigma > 0.0)) throw DomainError("LN family needs positive sigma");
  }
  return site_distribution(spec.family, spec.nu, spec.eta[site], sigma);
}

}  // namespace tgmrf
