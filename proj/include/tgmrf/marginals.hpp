#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tgmrf {

/// Marginal intensity families. All four share the mean surface exp(eta)
/// except LN, whose mean carries the latent-variance correction.
enum class Family { GI, GSC, GSH, LN };

inline constexpr std::array<Family, 4> kAllFamilies{Family::GI, Family::GSC, Family::GSH, Family::LN};

std::string_view family_name(Family family);  // "gi", "gsc", "gsh", "ln"
Family parse_family(std::string_view name);   // case-insensitive; InvalidArgument otherwise

/// A single site's marginal law: Gamma(shape, scale) or LogNormal(location, scale).
class SiteDistribution {
 public:
  enum class Kind { Gamma, LogNormal };

  static SiteDistribution gamma(double shape, double scale);
  /// scale = 0 is accepted as the degenerate point mass at exp(location).
  static SiteDistribution log_normal(double location, double scale);

  Kind kind() const noexcept { return kind_; }
  double first() const noexcept { return a_; }   // shape | location
  double second() const noexcept { return b_; }  // scale | scale

  /// Strictly increasing on (0, 1); |F(q(u)) - u| <= 1e-10 u. Results that
  /// underflow are floored at the smallest normal double so intensities stay positive.
  double quantile(double u) const;
  double cdf(double x) const;
  double log_pdf(double x) const;
  double mean() const;
  double variance() const;

 private:
  SiteDistribution(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

/// Moment-matched parameters for one site:
///   GI : Gamma(nu e^{2 eta}, e^{-eta} / nu)  -> mean e^eta, var 1/nu
///   GSC: Gamma(nu,           e^{eta} / nu)   -> mean e^eta, var e^{2 eta}/nu
///   GSH: Gamma(nu e^{eta},   1 / nu)         -> mean e^eta, var e^eta/nu
///   LN : LogNormal(eta, sigma / sqrt(nu))    -> mean exp(eta + sigma^2 / (2 nu))
/// `sigma` is the latent marginal standard deviation and is only read for LN.
SiteDistribution site_distribution(Family family, double nu, double eta, double sigma = 1.0);

struct MarginalSpec {
  Family family = Family::GI;
  double nu = 1.0;
  std::vector<double> eta;    // per site, X beta
  std::vector<double> sigma;  // per site latent std; LN only (may be empty otherwise)
};

/// Validates the spec and returns the law at flat site `site`.
SiteDistribution site_params(const MarginalSpec& spec, std::size_t site);

/// Gamma quantile for unit scale (inverse regularized incomplete gamma), floored at the smallest normal double.
double gamma_quantile_unit(double shape, double u);

}  // namespace tgmrf
