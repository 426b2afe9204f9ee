#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tgmrf/dataset.hpp"
#include "tgmrf/marginals.hpp"
#include "tgmrf/precision.hpp"

namespace tgmrf {

/// Spatial and temporal graphs plus the time-major layout used by the model.
struct Lattice {
  SpatialGraph spatial;
  TemporalGraph temporal;

  Lattice(SpatialGraph sp, TemporalGraph tp) : spatial(std::move(sp)), temporal(std::move(tp)) {}
  StLayout layout() const { return {spatial.size(), temporal.size(), Ordering::ByTime}; }
  Index n_sites() const { return spatial.size() * temporal.size(); }
};

/// Maps dependence parameters to a precision on the lattice layout. The
/// default is the proposed spatio-temporal precision; tests substitute
/// smaller models (e.g. a fixed 1x1 precision for a single site).
using PrecisionFactory = std::function<SparsePrecision(const DependenceParams&)>;

PrecisionFactory proposed_precision(const Lattice& lattice);

struct ModelState {
  Eigen::VectorXd beta;
  double nu = 1.0;
  DependenceParams rho;
  std::vector<double> epsilon;
};

/// mu_r = F_r^{-1}(Phi(eps_r / sigma_r)) with F_r from (family, nu, eta_r, sigma_r).
std::vector<double> transform_field(std::span<const double> epsilon, std::span<const double> sigma, Family family,
                              double nu, std::span<const double> eta);
/// Same, with sigma taken from a PD precision.
std::vector<double> transform_field(std::span<const double> epsilon, const SparsePrecision& q, Family family, double nu,
                              std::span<const double> eta);

/// log Poisson(y | mu).
double poisson_log_pmf(std::int64_t y, double mu);

/// Intercept column "intercept" plus one standard-normal column "x1", drawn
/// from `seed`. The covariate distribution is a declared default.
Dataset standard_design(const Lattice& lattice, std::uint64_t seed);

struct Truth {
  Eigen::VectorXd beta;
  double nu = 1.0;
  DependenceParams rho;
};

/// y_r ~ Poisson(mu_r) with mu = transform_field(eps, Q(rho)) and eps ~ N(0, Q^{-1}).
/// `design` supplies the layout and covariates; its counts are replaced.
/// Throws DomainError (naming the worst dominance row) when Q(rho) is not PD.
Dataset simulate_counts(const Lattice& lattice, const Dataset& design, const Truth& truth, Family family,
                        std::uint64_t seed);

/// Latent field and intensities from a simulation, for scoring and tests.
struct SimulationTrace {
  std::vector<double> epsilon;
  std::vector<double> sigma;
  std::vector<double> mu;
};
Dataset simulate_counts(const Lattice& lattice, const Dataset& design, const Truth& truth, Family family,
                        std::uint64_t seed, SimulationTrace& trace);

/// Sum of Poisson log-likelihoods plus the GMRF log density of epsilon.
/// Flat priors contribute zero; returns -inf when nu <= 0 or Q(rho) is not PD.
double log_posterior(const ModelState& state, const Dataset& data, Family family, const PrecisionFactory& precision);

/// Named simulation presets (rows x cols lattice, T times, beta, rho).
struct Scenario {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  Index times = 0;
  Eigen::VectorXd beta;
  DependenceParams rho;
};
Scenario scenario_preset(const std::string& name);  // scenario1 | scenario2 | scenario3
/// Default true dispersion per family (GI 0.10, GSC 2.00, GSH 0.27, LN 0.27).
double default_nu(Family family);

}  // namespace tgmrf
