#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "tgmrf/errors.hpp"
#include "tgmrf/gmrf.hpp"
#include "tgmrf/model.hpp"

using namespace tgmrf;

namespace {

Dataset single_site(std::int64_t y) {
  Dataset d;
  d.layout = StLayout(1, 1, Ordering::ByTime);
  d.y = {y};
  d.x = Eigen::MatrixXd::Ones(1, 1);
  d.covariate_names = {"intercept"};
  return d;
}

PrecisionFactory unit_precision(double value = 1.0) {
  return [value](const DependenceParams&) { return SparsePrecision(1, {{0, 0, value}}); };
}

}  // namespace

TEST_CASE("dataset csv round trip") {
  const std::string text =
      "region,time,y,intercept,temp\n"
      "1,1,3,1,0.5\n1,2,0,1,-1.25\n2,1,7,1,2\n2,2,1,1,0\n3,1,2,1,0.001\n3,2,4,1,3.5\n";
  std::istringstream in(text);
  const auto d = read_dataset_csv(in);
  CHECK(d.layout == StLayout(3, 2, Ordering::ByTime));
  CHECK(d.region_base == 1);
  CHECK(d.time_base == 1);
  CHECK(d.covariate_names == std::vector<std::string>{"intercept", "temp"});
  CHECK(d.y[d.layout.flat(1, 0)] == 7);
  CHECK(d.x(static_cast<int>(d.layout.flat(2, 1)), 1) == 3.5);

  std::ostringstream out;
  write_dataset_csv(out, d);
  CHECK(out.str() == text);
  std::istringstream again(out.str());
  const auto e = read_dataset_csv(again);
  CHECK(e.y == d.y);
  CHECK(e.x == d.x);
}

TEST_CASE("dataset ingestion errors") {
  auto read = [](const std::string& s) {
    std::istringstream in(s);
    return read_dataset_csv(in);
  };
  CHECK_THROWS_AS(read("region,y,time\n0,0,1\n"), IngestionError);
  CHECK_THROWS_AS(read("region,time,y,a,a\n0,0,1,1,1\n"), IngestionError);
  CHECK_THROWS_AS(read("region,time,y\n0,0,-1\n"), IngestionError);
  CHECK_THROWS_AS(read("region,time,y\n0,0,1.5\n"), IngestionError);
  CHECK_THROWS_AS(read("region,time,y,x\n0,0,1,nan\n"), IngestionError);
  CHECK_THROWS_AS(read("region,time,y\n0,0\n"), IngestionError);
  CHECK_THROWS_AS(read("region,time,y\n"), IngestionError);
  CHECK_THROWS_AS(read("region,time,y\n0,0,1\n2,0,1\n"), IngestionError);  // gap in region labels

  try {
    read("region,time,y\n0,0,1\n0,1,1\n1,1,2\n");
    FAIL("incomplete lattice accepted");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("missing region 1, time 0") != std::string::npos);
  }
  try {
    read("region,time,y\n0,0,1\n0,0,2\n");
    FAIL("duplicate row accepted");
  } catch (const IngestionError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("transform") {
  const std::vector<double> eta{0.3, -1.0, 2.0};
  const std::vector<double> sigma{1.0, 0.5, 2.0};
  const std::vector<double> zero(3, 0.0);
  for (Family f : kAllFamilies) {
    const auto mu = transform_field(zero, sigma, f, 1.7, eta);
    for (std::size_t r = 0; r < 3; ++r)
      CHECK(mu[r] == doctest::Approx(site_distribution(f, 1.7, eta[r], sigma[r]).quantile(0.5)).epsilon(1e-14));

    // Raising one latent value raises only that intensity.
    std::vector<double> raised = zero;
    raised[1] = 0.4;
    const auto moved = transform_field(raised, sigma, f, 1.7, eta);
    CHECK(moved[1] > mu[1]);
    CHECK(moved[0] == mu[0]);
    CHECK(moved[2] == mu[2]);
  }

  // GSC with nu = 1, eta = 0 is the unit exponential; u = 1 - e^{-1} maps to 1.
  const double z = standard_normal_quantile(1.0 - std::exp(-1.0));
  const std::vector<double> one_sigma{1.3};
  const std::vector<double> eps{1.3 * z};
  const std::vector<double> eta0{0.0};
  CHECK(transform_field(eps, one_sigma, Family::GSC, 1.0, eta0)[0] == doctest::Approx(1.0).epsilon(1e-12));

  // Precision overload reads sigma from the factor.
  const SparsePrecision q(1, {{0, 0, 1.0 / (1.3 * 1.3)}});
  CHECK(transform_field(eps, q, Family::GSC, 1.0, eta0)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(transform_field(eps, sigma, Family::GI, 1.0, eta0), InvalidArgument);
}

TEST_CASE("simulate_counts") {
  const Lattice lattice(grid_graph(6, 5), path_graph(10));
  const auto s3 = scenario_preset("scenario3");
  const auto design = standard_design(lattice, 7);
  CHECK(design.covariate_names == std::vector<std::string>{"intercept", "x1"});
  const Truth truth{s3.beta, default_nu(Family::GI), s3.rho};

  const auto a = simulate_counts(lattice, design, truth, Family::GI, 7);
  const auto b = simulate_counts(lattice, design, truth, Family::GI, 7);
  CHECK(a.y.size() == 300);
  CHECK(a.y == b.y);
  CHECK(a.x == design.x);
  CHECK(a.y != simulate_counts(lattice, design, truth, Family::GI, 8).y);

  // Averaged over replicates the count mean tracks E(mu) = e^{beta0} E(e^{beta1 x}) ~ e^1.
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto d = simulate_counts(lattice, standard_design(lattice, seed), truth, Family::GI, seed);
    total += std::accumulate(d.y.begin(), d.y.end(), 0.0) / 300.0;
  }
  CHECK(total / 30.0 > 2.2);
  CHECK(total / 30.0 < 3.3);

  Truth dead = truth;
  dead.beta = Eigen::Vector2d(-40.0, 0.0);
  const auto zeros = simulate_counts(lattice, design, dead, Family::GSH, 3);
  CHECK(std::all_of(zeros.y.begin(), zeros.y.end(), [](auto v) { return v == 0; }));

  Truth bad = truth;
  bad.rho = {10.0, 0.0, 0.0, 1.0};
  try {
    simulate_counts(lattice, design, bad, Family::GI, 1);
    FAIL("non-PD truth accepted");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("worst dominance row") != std::string::npos);
  }
  bad = truth;
  bad.nu = 0.0;
  CHECK_THROWS_AS(simulate_counts(lattice, design, bad, Family::GI, 1), DomainError);
  CHECK_THROWS_AS(simulate_counts(Lattice(grid_graph(2, 2), path_graph(3)), design, truth, Family::GI, 1),
                  InvalidArgument);
}

TEST_CASE("scenario presets and default dispersions") {
  CHECK(scenario_preset("scenario1").rho == DependenceParams{2.18, 0, 0, 1});
  CHECK(scenario_preset("scenario2").rho == DependenceParams{0, 3.88, 0, 1});
  const auto s3 = scenario_preset("scenario3");
  CHECK(s3.rho == DependenceParams{0.97, 1.71, 0.77, 1});
  CHECK(s3.rows * s3.cols * s3.times == 300);
  CHECK(s3.beta[1] == -0.1);
  CHECK_THROWS_AS(scenario_preset("scenario4"), InvalidArgument);
  CHECK(default_nu(Family::GSC) == 2.0);
  CHECK(default_nu(Family::LN) == 0.27);

  // All three presets are valid precisions on their lattice.
  for (const char* name : {"scenario1", "scenario2", "scenario3"}) {
    const auto s = scenario_preset(name);
    CHECK(check_pd(build_proposed(grid_graph(s.rows, s.cols), path_graph(s.times), s.rho,
                                  StLayout(s.rows * s.cols, s.times, Ordering::ByTime))));
  }
}

TEST_CASE("zero dependence gives independent Poisson mixtures") {
  // Two isolated-in-time regions with rho = 0: Q = diag(1, 1), sigma = 1.
  const Lattice lattice(grid_graph(1, 2), path_graph(1));
  auto design = standard_design(lattice, 0);
  design.x.col(1).setZero();
  const Truth truth{Eigen::Vector2d(0.8, 0.0), 0.6, {}};

  const int n = 40000;
  std::vector<double> freq(12, 0.0);
  for (int s = 0; s < n; ++s) {
    const auto d = simulate_counts(lattice, design, truth, Family::GSH, static_cast<std::uint64_t>(s));
    freq[static_cast<std::size_t>(std::min<std::int64_t>(d.y[0], 11))] += 1.0 / n;
  }
  // P(y = k) = int_0^1 Pois(k | F^{-1}(u)) du by the midpoint rule.
  const auto f = site_distribution(Family::GSH, 0.6, 0.8);
  std::vector<double> mix(12, 0.0);
  const int m = 20000;
  for (int j = 0; j < m; ++j) {
    const double mu = f.quantile((j + 0.5) / m);
    for (int k = 0; k < 11; ++k) mix[k] += std::exp(poisson_log_pmf(k, mu)) / m;
  }
  mix[11] = 1.0 - std::accumulate(mix.begin(), mix.begin() + 11, 0.0);
  for (int k = 0; k < 12; ++k) CHECK(std::abs(freq[k] - mix[k]) < 4.0 * std::sqrt(mix[k] / n) + 1e-4);
}

TEST_CASE("copula separation on a small lattice") {
  // Under any valid rho the intensity at a site follows the target marginal F exactly.
  const auto sp = grid_graph(3, 3);
  const auto tp = path_graph(3);
  const StLayout layout(9, 3, Ordering::ByTime);
  const std::size_t n = 20000;
  const double critical = 1.628 / std::sqrt(double(n));  // one-sample KS, 1%
  const std::vector<double> eta{0.5};
  int stream = 0;
  for (const DependenceParams rho : {DependenceParams{}, DependenceParams{0.8, 1.2, 0.4, 1}}) {
    const auto q = build_proposed(sp, tp, rho, layout);
    REQUIRE(check_pd(q));
    const auto sigma = marginal_std(q);
    const auto draws = sample_gmrf(q, static_cast<std::uint64_t>(11 + stream++), n);
    for (Family f : kAllFamilies) {
      const auto target = site_distribution(f, 0.8, 0.5, sigma[4]);
      std::vector<double> u;
      for (const auto& draw : draws) {
        const std::vector<double> eps{draw.values[4]};
        const std::vector<double> s{sigma[4]};
        u.push_back(target.cdf(transform_field(eps, s, f, 0.8, eta)[0]));
      }
      std::sort(u.begin(), u.end());
      double d = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        d = std::max({d, std::abs(double(k + 1) / n - u[k]), std::abs(u[k] - double(k) / n)});
      CHECK(d < critical);
    }
  }
}

TEST_CASE("log_posterior") {
  // One site, y = 0: difference of two latent values is the Poisson log-ratio
  // plus the Gaussian log-ratio.
  const auto data = single_site(0);
  const auto factory = unit_precision();
  ModelState a{Eigen::VectorXd::Constant(1, 0.4), 1.5, {}, {0.3}};
  ModelState b = a;
  b.epsilon = {-0.8};
  const double mu_a = site_distribution(Family::GI, 1.5, 0.4).quantile(standard_normal_cdf(0.3));
  const double mu_b = site_distribution(Family::GI, 1.5, 0.4).quantile(standard_normal_cdf(-0.8));
  const double expected = (-mu_a + mu_b) - 0.5 * (0.3 * 0.3 - 0.8 * 0.8);
  CHECK(log_posterior(a, data, Family::GI, factory) - log_posterior(b, data, Family::GI, factory) ==
        doctest::Approx(expected).epsilon(1e-12));

  ModelState bad = a;
  bad.nu = -1.0;
  CHECK(log_posterior(bad, data, Family::GI, factory) == -INFINITY);

  const Lattice lattice(grid_graph(3, 2), path_graph(4));
  const auto design = standard_design(lattice, 2);
  const auto sim = simulate_counts(lattice, design, {Eigen::Vector2d(0.5, 0.2), 1.0, {0.5, 0.5, 0.2, 1}}, Family::LN, 2);
  ModelState state{Eigen::Vector2d(0.4, 0.1), 0.9, {0.6, 0.7, 0.3, 1}, std::vector<double>(24, 0.0)};
  for (std::size_t r = 0; r < 24; ++r) state.epsilon[r] = 0.1 * std::sin(double(r));
  const double base = log_posterior(state, sim, Family::LN, proposed_precision(lattice));
  CHECK(std::isfinite(base));

  ModelState outside = state;
  outside.rho = {10.0, 0.0, 0.0, 1.0};
  CHECK(log_posterior(outside, sim, Family::LN, proposed_precision(lattice)) == -INFINITY);

  // Relabeling: the same panel held region-major with a matching precision.
  const StLayout by_region(6, 4, Ordering::ByRegion);
  const auto perm = sim.layout.permutation_to(by_region);
  Dataset moved = sim;
  moved.layout = by_region;
  ModelState moved_state = state;
  for (std::size_t f = 0; f < 24; ++f) {
    moved.y[perm[f]] = sim.y[f];
    moved.x.row(static_cast<int>(perm[f])) = sim.x.row(static_cast<int>(f));
    moved_state.epsilon[perm[f]] = state.epsilon[f];
  }
  const PrecisionFactory region_major = [&](const DependenceParams& rho) {
    return build_proposed(lattice.spatial, lattice.temporal, rho, by_region);
  };
  CHECK(log_posterior(moved_state, moved, Family::LN, region_major) == doctest::Approx(base).epsilon(1e-12));

  // Continuity in beta, nu and epsilon.
  for (double h : {1e-5, 1e-7}) {
    ModelState s = state;
    s.beta[1] += h;
    CHECK(std::abs(log_posterior(s, sim, Family::LN, proposed_precision(lattice)) - base) < 1e4 * h);
    s = state;
    s.nu += h;
    CHECK(std::abs(log_posterior(s, sim, Family::LN, proposed_precision(lattice)) - base) < 1e4 * h);
    s = state;
    s.epsilon[5] += h;
    CHECK(std::abs(log_posterior(s, sim, Family::LN, proposed_precision(lattice)) - base) < 1e4 * h);
  }
}
