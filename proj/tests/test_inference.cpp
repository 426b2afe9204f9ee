#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tgmrf/errors.hpp"
#include "tgmrf/inference.hpp"

using namespace tgmrf;

namespace {

Lattice one_site_lattice() { return Lattice(SpatialGraph(1, {}), TemporalGraph(1, {})); }

struct Simulated {
  Lattice lattice;
  Dataset data;
};

Simulated small_panel(Index rows, Index cols, Index times, std::uint64_t seed) {
  Lattice lattice(grid_graph(rows, cols), path_graph(times));
  const auto design = standard_design(lattice, seed);
  Truth truth;
  truth.beta = Eigen::Vector2d(1.0, -0.5);
  truth.nu = 0.5;
  truth.rho = {0.8, 0.8, 0.2};
  auto data = simulate_counts(lattice, design, truth, Family::GI, seed);
  return {std::move(lattice), std::move(data)};
}

ChainConfig short_chain(std::uint64_t seed) {
  ChainConfig c;
  c.burn_in = 300;
  c.samples = 100;
  c.thin = 2;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("chain configuration validation") {
  ChainConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.samples = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = c;
  bad.scale_rho = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = c;
  bad.target_site = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = c;
  bad.band_low = 0.9;
  bad.band_high = 0.1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = c;
  bad.nu_upper = 2.0;
  bad.initial_nu = 3.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("poisson GLM closed forms") {
  // Intercept only: log of the mean count.
  const std::vector<std::int64_t> y{2, 5, 0, 3, 4, 1};
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(6, 1);
  CHECK(poisson_glm(ones, y)[0] == doctest::Approx(std::log(2.5)).epsilon(1e-10));

  // Two groups: intercept is the log mean of group 0, slope the log ratio.
  Eigen::MatrixXd x(6, 2);
  x << 1, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1;
  const auto b = poisson_glm(x, y);
  CHECK(b[0] == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-10));
  CHECK(b[1] == doctest::Approx(std::log(8.0 / 7.0)).epsilon(1e-10));

  CHECK_THROWS_AS(poisson_glm(Eigen::MatrixXd::Ones(5, 1), y), InvalidArgument);
}

TEST_CASE("summaries") {
  SUBCASE("constant draws") {
    const std::vector<double> v(150, 2.5);
    const auto s = summarize(v);
    CHECK(s.mode == 2.5);
    CHECK(s.sd == 0.0);
    CHECK(s.hpd_low == 2.5);
    CHECK(s.hpd_high == 2.5);
  }
  SUBCASE("standard normal") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    std::vector<double> v(100000);
    for (double& d : v) d = z(rng);
    const auto s = summarize(v, 0.90, "z");
    CHECK(s.name == "z");
    CHECK(std::abs(s.mode) < 0.05);
    CHECK(s.sd == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(s.hpd_low + 1.645) < 0.05);
    CHECK(std::abs(s.hpd_high - 1.645) < 0.05);
  }
  SUBCASE("mode follows the highest peak, not the mean") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> a(0.0, 0.5), b(4.0, 0.5);
    std::bernoulli_distribution pick(0.3);
    std::vector<double> v(20000);
    for (double& d : v) d = pick(rng) ? b(rng) : a(rng);
    CHECK(std::abs(summarize(v).mode) < 0.1);
  }
  SUBCASE("HPD of a skewed sample hugs the boundary") {
    std::mt19937_64 rng(13);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(100000);
    for (double& d : v) d = e(rng);
    const auto s = summarize(v);
    CHECK(s.hpd_low < 0.01);
    CHECK(s.hpd_high == doctest::Approx(std::log(10.0)).epsilon(0.03));
  }
  SUBCASE("refusals") {
    CHECK_THROWS_AS(summarize(std::vector<double>(99, 1.0)), InvalidArgument);
    CHECK_THROWS_AS(summarize(std::vector<double>(200, 1.0), 1.0), InvalidArgument);
    std::vector<double> v(200, 1.0);
    v[7] = NAN;
    CHECK_THROWS_AS(summarize(v), InvalidArgument);
  }
}

TEST_CASE("time-varying expansion") {
  Dataset d;
  d.layout = StLayout(2, 3, Ordering::ByTime);
  d.y = {1, 2, 3, 4, 5, 6};
  d.x.resize(6, 2);
  d.x.col(0).setOnes();
  d.x.col(1) << 0.5, 1.5, 2.5, 3.5, 4.5, 5.5;
  d.covariate_names = {"intercept", "temp"};
  d.time_base = 1;

  const auto e = expand_time_varying(d, {"temp"});
  CHECK(e.covariate_names == std::vector<std::string>{"intercept", "temp_t1", "temp_t2", "temp_t3"});
  for (Index i = 0; i < 2; ++i)
    for (Index t = 0; t < 3; ++t) {
      const auto f = static_cast<int>(d.layout.flat(i, t));
      for (Index k = 0; k < 3; ++k) CHECK(e.x(f, 1 + static_cast<int>(k)) == (k == t ? d.x(f, 1) : 0.0));
      CHECK(e.x(f, 0) == 1.0);
    }
  CHECK(e.x.rowwise().sum().isApprox(d.x.rowwise().sum()));

  CHECK(expand_time_varying(d, {}).covariate_names == d.covariate_names);
  CHECK_THROWS_AS(expand_time_varying(d, {"rain"}), IngestionError);
  CHECK_THROWS_AS(expand_time_varying(d, {"temp", "temp"}), IngestionError);
}

TEST_CASE("fit output shape and determinism") {
  const auto sim = small_panel(2, 2, 3, 5);
  const auto a = fit(sim.data, sim.lattice, Family::GI, short_chain(7));
  CHECK(a.names == std::vector<std::string>{"beta_intercept", "beta_x1", "nu", "rho_s", "rho_t", "rho_st"});
  CHECK(a.kept() == 100);
  CHECK(a.log_likelihood.rows() == 100);
  CHECK(a.log_likelihood.cols() == 12);
  CHECK(a.mu_mean.size() == 12);
  CHECK(std::all_of(a.mu_mean.begin(), a.mu_mean.end(), [](double m) { return m > 0.0; }));
  CHECK((a.log_likelihood.array() <= 0.0).all());
  CHECK(a.acceptance.size() == 7);

  const auto b = fit(sim.data, sim.lattice, Family::GI, short_chain(7));
  CHECK(a.draws == b.draws);
  CHECK(a.log_likelihood == b.log_likelihood);
  const auto c = fit(sim.data, sim.lattice, Family::GI, short_chain(8));
  CHECK(a.draws != c.draws);

  CHECK_THROWS_AS(a.column("beta_missing"), InvalidArgument);
  const auto wrong = small_panel(2, 3, 3, 5);
  CHECK_THROWS_AS(fit(wrong.data, sim.lattice, Family::GI, short_chain(7)), InvalidArgument);
}

TEST_CASE("every kept dependence draw is positive definite") {
  const auto sim = small_panel(3, 2, 3, 21);
  auto config = short_chain(3);
  config.scale_rho = 1.0;
  const auto s = fit(sim.data, sim.lattice, Family::GSH, config);
  const auto rs = s.column("rho_s"), rt = s.column("rho_t"), rst = s.column("rho_st");
  bool moved = false;
  for (std::size_t k = 0; k < s.kept(); ++k) {
    const DependenceParams rho{rs[k], rt[k], rst[k]};
    CHECK(check_pd(build_proposed(sim.lattice.spatial, sim.lattice.temporal, rho, sim.lattice.layout())));
    moved = moved || rs[k] != 0.0;
  }
  CHECK(moved);
}

TEST_CASE("rejection hook vetoes dependence proposals") {
  const auto sim = small_panel(2, 2, 3, 5);
  SamplerHooks hooks;
  hooks.reject_rho = [](const DependenceParams& rho) { return rho.rho_s != 0.0 || rho.rho_t != 0.0 || rho.rho_st != 0.0; };
  const auto s = fit(sim.data, sim.lattice, Family::GI, short_chain(4), hooks);
  for (const char* name : {"rho_s", "rho_t", "rho_st"}) {
    const auto col = s.column(name);
    CHECK(std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0; }));
  }
  // Zero acceptance is outside the band and reported.
  CHECK(std::any_of(s.acceptance.begin(), s.acceptance.end(),
                    [](const BlockAcceptance& a) { return a.block == "rho_s" && a.outside_band; }));
  CHECK(!s.warnings.empty());
}

TEST_CASE("adaptation stops after burn-in") {
  const auto sim = small_panel(2, 2, 3, 5);
  auto shorter = short_chain(9);
  auto longer = shorter;
  longer.samples = 200;
  const auto a = fit(sim.data, sim.lattice, Family::LN, shorter);
  const auto b = fit(sim.data, sim.lattice, Family::LN, longer);
  REQUIRE(a.acceptance.size() == b.acceptance.size());
  for (std::size_t k = 0; k < a.acceptance.size(); ++k)
    CHECK(a.acceptance[k].final_scale == b.acceptance[k].final_scale);
  // The longer chain extends the shorter one.
  CHECK(b.draws.topRows(100) == a.draws);
}

TEST_CASE("upper bound on nu is respected") {
  const auto data = oracle::single_site(4);
  ChainConfig c = short_chain(2);
  c.samples = 500;
  c.fix_rho = true;
  c.nu_upper = 0.8;
  SamplerHooks hooks;
  hooks.precision = oracle::unit_precision();
  const auto s = fit(data, one_site_lattice(), Family::GSC, c, hooks);
  const auto nu = s.column("nu");
  CHECK(*std::max_element(nu.begin(), nu.end()) <= 0.8);
  CHECK(*std::min_element(nu.begin(), nu.end()) > 0.0);
}

TEST_CASE("one-site intercept posterior matches the grid") {
  for (Family family : {Family::GI, Family::LN}) {
    CAPTURE(family_name(family));
    const double nu = 1.3;
    const auto grid = oracle::beta0_posterior(3, family, nu, -6.0, 6.0, 601);
    ChainConfig c;
    c.burn_in = 2000;
    c.samples = 20000;
    c.thin = 5;
    c.seed = 17;
    c.fix_nu = true;
    c.initial_nu = nu;
    c.fix_rho = true;
    SamplerHooks hooks;
    hooks.precision = oracle::unit_precision();
    const auto s = fit(oracle::single_site(3), one_site_lattice(), family, c, hooks);
    const auto b = s.column("beta_intercept");
    const double mean = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    double ss = 0.0;
    for (double v : b) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(b.size() - 1));
    CHECK(std::abs(mean - grid.mean()) < 0.05 * grid.sd());
    CHECK(sd == doctest::Approx(grid.sd()).epsilon(0.05));
  }
}

TEST_CASE("constant effect expanded in time gives overlapping intervals") {
  const auto sim = small_panel(4, 4, 3, 31);
  const auto data = expand_time_varying(sim.data, {"x1"});
  ChainConfig c;
  c.burn_in = 2000;
  c.samples = 500;
  c.thin = 4;
  c.seed = 5;
  const auto s = fit(data, sim.lattice, Family::GI, c);
  double low = -INFINITY, high = INFINITY;
  for (const char* name : {"beta_x1_t0", "beta_x1_t1", "beta_x1_t2"}) {
    const auto summary = summarize(s.column(name), 0.90, name);
    low = std::max(low, summary.hpd_low);
    high = std::min(high, summary.hpd_high);
  }
  CHECK(low < high);
}
