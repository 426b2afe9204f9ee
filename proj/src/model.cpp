#include "tgmrf/model.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "tgmrf/errors.hpp"
#include "tgmrf/gmrf.hpp"
#include "tgmrf/random.hpp"

namespace tgmrf {

namespace {

// Streams of a simulation seed.
constexpr std::uint64_t kLatentStream = 1;
constexpr std::uint64_t kCountStream = 2;
constexpr std::uint64_t kDesignStream = 3;

void require_layout_match(const Lattice& lattice, const Dataset& data) {
  if (data.layout != lattice.layout())
    throw InvalidArgument("dataset lattice (" + std::to_string(data.layout.n_regions()) + " regions, " +
                          std::to_string(data.layout.n_times()) + " times) does not match the graphs (" +
                          std::to_string(lattice.spatial.size()) + " regions, " +
                          std::to_string(lattice.temporal.size()) + " times)");
}

}  // namespace

PrecisionFactory proposed_precision(const Lattice& lattice) {
  return [sp = lattice.spatial, tp = lattice.temporal, layout = lattice.layout()](const DependenceParams& rho) {
    return build_proposed(sp, tp, rho, layout);
  };
}

std::vector<double> transform_field(std::span<const double> epsilon, std::span<const double> sigma, Family family,
                              double nu, std::span<const double> eta) {
  if (epsilon.size() != sigma.size() || epsilon.size() != eta.size())
    throw InvalidArgument("transform: epsilon, sigma and eta sizes differ");
  std::vector<double> mu(epsilon.size());
  for (std::size_t r = 0; r < mu.size(); ++r)
    mu[r] = site_distribution(family, nu, eta[r], sigma[r]).quantile(uniformize_one(epsilon[r], sigma[r]));
  return mu;
}

std::vector<double> transform_field(std::span<const double> epsilon, const SparsePrecision& q, Family family, double nu,
                              std::span<const double> eta) {
  if (!q.has_factor() && !check_pd(q)) throw DomainError("transform: precision is not positive definite");
  const auto sigma = marginal_std(q);
  return transform_field(epsilon, sigma, family, nu, eta);
}

double poisson_log_pmf(std::int64_t y, double mu) {
  const double k = static_cast<double>(y);
  if (y == 0) return -mu;
  return k * std::log(mu) - mu - std::lgamma(k + 1.0);
}

Dataset standard_design(const Lattice& lattice, std::uint64_t seed) {
  Dataset data;
  data.layout = lattice.layout();
  const auto n = static_cast<int>(data.layout.size());
  data.y.assign(data.layout.size(), 0);
  data.x.resize(n, 2);
  data.covariate_names = {"intercept", "x1"};
  auto rng = make_engine(seed, kDesignStream);
  std::normal_distribution<double> z;
  // Drawn in region-major order so the covariate of (i, t) does not depend on the layout.
  for (Index i = 0; i < data.layout.n_regions(); ++i)
    for (Index t = 0; t < data.layout.n_times(); ++t) {
      const auto f = static_cast<int>(data.layout.flat(i, t));
      data.x(f, 0) = 1.0;
      data.x(f, 1) = z(rng);
    }
  return data;
}

Dataset simulate_counts(const Lattice& lattice, const Dataset& design, const Truth& truth, Family family,
                        std::uint64_t seed, SimulationTrace& trace) {
  require_layout_match(lattice, design);
  if (truth.beta.size() != design.x.cols())
    throw InvalidArgument("truth beta has " + std::to_string(truth.beta.size()) + " entries for " +
                          std::to_string(design.x.cols()) + " covariates");
  if (!(truth.nu > 0.0) || !std::isfinite(truth.nu)) throw DomainError("truth nu must be positive");

  const auto layout = lattice.layout();
  const auto q = build_proposed(lattice.spatial, lattice.temporal, truth.rho, layout);
  if (!check_pd(q)) {
    const auto dom = check_diag_dominance(q);
    std::ostringstream msg;
    msg << "truth rho = (" << truth.rho.rho_s << ", " << truth.rho.rho_t << ", " << truth.rho.rho_st
        << ") gives a precision that is not positive definite; worst dominance row " << dom.worst_row << " (region "
        << layout.region_of(dom.worst_row) << ", time " << layout.time_of(dom.worst_row) << ", slack "
        << dom.worst_slack << ")";
    throw DomainError(msg.str());
  }

  trace.epsilon = sample_gmrf(q, derive_seed(seed, kLatentStream), 1).front().values;
  trace.sigma = marginal_std(q);
  const Eigen::VectorXd eta = design.x * truth.beta;
  trace.mu = transform_field(trace.epsilon, trace.sigma, family, truth.nu, std::span<const double>(eta.data(), eta.size()));

  Dataset out = design;
  auto rng = make_engine(seed, kCountStream);
  for (std::size_t r = 0; r < out.y.size(); ++r) {
    std::poisson_distribution<std::int64_t> pois(trace.mu[r]);
    out.y[r] = pois(rng);
  }
  return out;
}

Dataset simulate_counts(const Lattice& lattice, const Dataset& design, const Truth& truth, Family family,
                        std::uint64_t seed) {
  SimulationTrace trace;
  return simulate_counts(lattice, design, truth, family, seed, trace);
}

double log_posterior(const ModelState& state, const Dataset& data, Family family, const PrecisionFactory& precision) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!(state.nu > 0.0) || !std::isfinite(state.nu)) return kNegInf;
  if (state.beta.size() != data.x.cols() || state.epsilon.size() != data.y.size())
    throw InvalidArgument("log_posterior: state dimensions do not match the dataset");
  const auto q = precision(state.rho);
  if (q.dim() != data.n_sites()) throw InvalidArgument("log_posterior: precision dimension does not match the dataset");
  if (!check_pd(q)) return kNegInf;

  const auto sigma = marginal_std(q);
  const Eigen::VectorXd eta = data.x * state.beta;
  double total = 0.0;
  for (std::size_t r = 0; r < data.y.size(); ++r) {
    if (!std::isfinite(eta[static_cast<int>(r)])) return kNegInf;
    const double mu = site_distribution(family, state.nu, eta[static_cast<int>(r)], sigma[r])
                          .quantile(uniformize_one(state.epsilon[r], sigma[r]));
    total += poisson_log_pmf(data.y[r], mu);
  }
  return total + gmrf_log_density(state.epsilon, q);
}

Scenario scenario_preset(const std::string& name) {
  Scenario s;
  s.name = name;
  s.rows = 6;
  s.cols = 5;
  s.times = 10;
  s.beta = Eigen::Vector2d(1.0, -0.1);
  if (name == "scenario1") s.rho = {2.18, 0.0, 0.0, 1.0};
  else if (name == "scenario2") s.rho = {0.0, 3.88, 0.0, 1.0};
  else if (name == "scenario3") s.rho = {0.97, 1.71, 0.77, 1.0};
  else throw InvalidArgument("unknown preset '" + name + "' (valid: scenario1, scenario2, scenario3)");
  return s;
}

double default_nu(Family family) {
  switch (family) {
    case Family::GI: return 0.10;
    case Family::GSC: return 2.00;
    case Family::GSH: return 0.27;
    case Family::LN: return 0.27;
  }
  throw InvalidArgument("unknown family");
}

}  // namespace tgmrf
