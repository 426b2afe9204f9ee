#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgmrf/dataset.hpp"
#include "tgmrf/marginals.hpp"
#include "tgmrf/model.hpp"

namespace tgmrf {

struct ChainConfig {
  std::size_t burn_in = 5000;
  std::size_t samples = 1000;  // kept draws
  std::size_t thin = 10;

  // Initial random-walk scales; adapted during burn-in only.
  double scale_epsilon = 0.5;
  double scale_beta = 0.05;
  double scale_log_nu = 0.2;
  double scale_rho = 0.2;

  std::size_t adaptation_window = 50;
  double target_coordinate = 0.23;  // beta, nu, rho
  double target_site = 0.44;        // sitewise epsilon
  double band_low = 0.05;           // post-burn-in rates outside the band are flagged
  double band_high = 0.95;

  std::uint64_t seed = 1;

  // Starting values; unset fields use the defaults (GLM beta, nu = 1, rho = 0, eps = 0).
  std::optional<Eigen::VectorXd> initial_beta;
  std::optional<double> initial_nu;
  std::optional<DependenceParams> initial_rho;
  bool fix_nu = false;
  bool fix_rho = false;
  // Upper end of the flat prior on nu. The likelihood stays bounded away from
  // zero as nu grows, so a flat prior on (0, inf) gives an improper posterior.
  double nu_upper = 100.0;

  /// Throws InvalidArgument on non-positive counts, scales or an invalid band.
  void validate() const;
};

/// Optional overrides. `precision` replaces the proposed precision (the
/// dataset layout must match its dimension); `reject_rho` vetoes proposals.
struct SamplerHooks {
  PrecisionFactory precision;
  std::function<bool(const DependenceParams&)> reject_rho;
};

struct BlockAcceptance {
  std::string block;
  std::size_t proposed = 0;  // post-burn-in
  std::size_t accepted = 0;
  double final_scale = 0.0;  // mean over sites for epsilon
  bool outside_band = false;
  double rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed); }
};

struct PosteriorSamples {
  std::vector<std::string> names;    // beta_<covariate>..., nu, rho_s, rho_t, rho_st
  Eigen::MatrixXd draws;             // kept x parameters
  Eigen::MatrixXd log_likelihood;    // kept x sites, log p(y_r | mu_r^(s))
  std::vector<double> mu_mean;       // posterior mean intensity per site
  std::vector<BlockAcceptance> acceptance;
  std::vector<std::string> warnings;
  Family family = Family::GI;
  ChainConfig config;

  std::size_t kept() const { return static_cast<std::size_t>(draws.rows()); }
  /// Column of draws by parameter name; InvalidArgument if absent.
  std::vector<double> column(const std::string& name) const;
};

/// Metropolis-within-Gibbs. Each sweep: sitewise eps, coordinatewise beta,
/// log-scale nu, coordinatewise rho (non-PD proposals rejected).
PosteriorSamples fit(const Dataset& data, const Lattice& lattice, Family family, const ChainConfig& config,
                     const SamplerHooks& hooks = {});

/// Poisson log-link GLM by IRLS, ignoring dependence. Used for initialization.
Eigen::VectorXd poisson_glm(const Eigen::MatrixXd& x, std::span<const std::int64_t> y);

struct ParameterSummary {
  std::string name;
  double mode = 0.0;
  double sd = 0.0;
  double hpd_low = 0.0;
  double hpd_high = 0.0;
};

inline constexpr std::size_t kMinSummaryDraws = 100;

/// Mode: argmax of a Gaussian KDE with Silverman bandwidth. SD: sample
/// standard deviation. HPD: shortest interval holding `level` of the draws.
ParameterSummary summarize(std::span<const double> draws, double level = 0.90, std::string name = {});
std::vector<ParameterSummary> summarize(const PosteriorSamples& samples, double level = 0.90);

/// Replaces each named covariate c by T columns c_t<label>, the column
/// times the indicator of time slice t. IngestionError for unknown names.
Dataset expand_time_varying(const Dataset& data, const std::vector<std::string>& columns);

}  // namespace tgmrf
