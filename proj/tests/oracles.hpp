#pragma once

// Brute-force references for a one-site model: one count y, intercept-only
// design, latent precision [1] (so sigma = 1 and u = Phi(eps)).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tgmrf/dataset.hpp"
#include "tgmrf/gmrf.hpp"
#include "tgmrf/marginals.hpp"
#include "tgmrf/model.hpp"

namespace oracle {

inline tgmrf::Dataset single_site(std::int64_t y) {
  tgmrf::Dataset d;
  d.layout = tgmrf::StLayout(1, 1, tgmrf::Ordering::ByTime);
  d.y = {y};
  d.x = Eigen::MatrixXd::Ones(1, 1);
  d.covariate_names = {"intercept"};
  return d;
}

inline tgmrf::PrecisionFactory unit_precision() {
  return [](const tgmrf::DependenceParams&) { return tgmrf::SparsePrecision(1, {{0, 0, 1.0}}); };
}

inline double mu_at(tgmrf::Family family, double nu, double beta0, double eps) {
  return tgmrf::site_distribution(family, nu, beta0, 1.0).quantile(tgmrf::uniformize_one(eps, 1.0));
}

/// Unnormalized log marginal posterior of beta0 with nu fixed:
/// log int Pois(y | mu(beta0, eps)) phi(eps) d eps, by Simpson on eps in [-9, 9].
inline double log_beta0_kernel(std::int64_t y, tgmrf::Family family, double nu, double beta0, int panels = 1200) {
  const double lo = -9.0, hi = 9.0, h = (hi - lo) / panels;
  std::vector<double> terms(static_cast<std::size_t>(panels + 1));
  for (int k = 0; k <= panels; ++k) {
    const double e = lo + k * h;
    terms[static_cast<std::size_t>(k)] =
        tgmrf::poisson_log_pmf(y, mu_at(family, nu, beta0, e)) - 0.5 * e * e;
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (int k = 0; k <= panels; ++k) {
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * std::exp(terms[static_cast<std::size_t>(k)] - top);
  }
  return top + std::log(acc * h / 3.0);
}

/// Normalized marginal density of beta0 on a uniform grid.
struct GridDensity {
  std::vector<double> x;
  std::vector<double> p;  // density values
  double step = 0.0;

  double mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) m += x[k] * p[k] * step;
    return m;
  }
  double sd() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) v += (x[k] - m) * (x[k] - m) * p[k] * step;
    return std::sqrt(v);
  }
  /// Mass in [a, b] by trapezoids on the grid with linear interpolation at the ends.
  double mass(double a, double b) const {
    auto density = [&](double t) {
      if (t <= x.front() || t >= x.back()) return 0.0;
      const auto k = static_cast<std::size_t>((t - x.front()) / step);
      const double w = (t - x[k]) / step;
      return (1.0 - w) * p[k] + w * p[k + 1];
    };
    a = std::max(a, x.front());
    b = std::min(b, x.back());
    if (b <= a) return 0.0;
    const int m = 400;
    const double h = (b - a) / m;
    double acc = 0.5 * (density(a) + density(b));
    for (int k = 1; k < m; ++k) acc += density(a + k * h);
    return acc * h;
  }
  /// Inverse cdf by cumulative trapezoids.
  double quantile(double q) const {
    double acc = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) {
      const double piece = 0.5 * (p[k - 1] + p[k]) * step;
      if (acc + piece >= q) return x[k - 1] + step * (q - acc) / piece;
      acc += piece;
    }
    return x.back();
  }
};

inline GridDensity beta0_posterior(std::int64_t y, tgmrf::Family family, double nu, double lo, double hi, int points) {
  GridDensity g;
  g.step = (hi - lo) / (points - 1);
  std::vector<double> logs;
  for (int k = 0; k < points; ++k) {
    g.x.push_back(lo + k * g.step);
    logs.push_back(log_beta0_kernel(y, family, nu, g.x.back()));
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double l : logs) {
    g.p.push_back(std::exp(l - top));
    total += g.p.back();
  }
  total -= 0.5 * (g.p.front() + g.p.back());
  for (double& v : g.p) v /= total * g.step;
  return g;
}

/// Posterior of eps with (beta0, nu) fixed, tabulated on a fine grid. Gives exact
/// expectations by quadrature and a deterministic stratified draw set.
class LatentPosterior {
 public:
  LatentPosterior(std::int64_t y, tgmrf::Family family, double nu, double beta0, double lo = -9.0, double hi = 9.0,
                  int points = 360001)
      : y_(y), family_(family), nu_(nu), beta0_(beta0) {
    h_ = (hi - lo) / (points - 1);
    std::vector<double> logs(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
      const double e = lo + k * h_;
      e_.push_back(e);
      mu_.push_back(mu_at(family, nu, beta0, e));
      ll_.push_back(tgmrf::poisson_log_pmf(y, mu_.back()));
      logs[static_cast<std::size_t>(k)] = ll_.back() - 0.5 * e * e;
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    top_ = top;
    for (double l : logs) w_.push_back(std::exp(l - top));
    // Simpson weights for expectations.
    double z = 0.0;
    simpson_.resize(w_.size());
    for (std::size_t k = 0; k < w_.size(); ++k) {
      const double c = (k == 0 || k + 1 == w_.size()) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      simpson_[k] = c * w_[k];
      z += simpson_[k];
    }
    for (double& s : simpson_) s /= z;
    cdf_.assign(w_.size(), 0.0);
    for (std::size_t k = 1; k < w_.size(); ++k) cdf_[k] = cdf_[k - 1] + 0.5 * (w_[k - 1] + w_[k]);
    for (double& c : cdf_) c /= cdf_.back();
  }

  template <class F>
  double expect(F f) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < e_.size(); ++k) acc += simpson_[k] * f(e_[k], mu_[k], ll_[k]);
    return acc;
  }

  /// Exact criteria from the definitions.
  double dic() const {
    const double mean_dev = -2.0 * expect([](double, double, double l) { return l; });
    const double mu_bar = expect([](double, double m, double) { return m; });
    const double plug = -2.0 * tgmrf::poisson_log_pmf(y_, mu_bar);
    return 2.0 * mean_dev - plug;
  }
  double waic() const {
    const double lp = std::log(expect([](double, double, double l) { return std::exp(l); }));
    const double m = expect([](double, double, double l) { return l; });
    const double v = expect([m](double, double, double l) { return (l - m) * (l - m); });
    return -2.0 * (lp - v);
  }
  double lpml() const {
    // log E[exp(-ll)] as a log-sum-exp over the quadrature weights.
    std::vector<double> terms;
    for (std::size_t k = 0; k < e_.size(); ++k)
      if (simpson_[k] > 0.0) terms.push_back(std::log(simpson_[k]) - ll_[k]);
    const double top = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - top);
    return -(top + std::log(acc));
  }

  /// What a wide stratum's point reproduces: the stratum mean of log p, or of
  /// 1 / p (the harmonic-mean functional behind LPML, heavy in the tails).
  enum class Match { LogLik, Inverse };

  /// Deterministic equal-weight draw set: one point per posterior stratum of
  /// probability 1/count. In strata spanning several grid cells the point is
  /// placed where the log-likelihood equals the level implied by `match`;
  /// narrow strata use the quantile midpoint.
  std::vector<double> stratified_draws(std::size_t count, Match match = Match::LogLik) const {
    // Prefix integrals (trapezoid, unnormalized) of w and w * ll.
    std::vector<double> mass(w_.size(), 0.0), moment(w_.size(), 0.0), inverse(w_.size(), 0.0);
    for (std::size_t k = 1; k < w_.size(); ++k) {
      mass[k] = mass[k - 1] + 0.5 * (w_[k - 1] + w_[k]);
      moment[k] = moment[k - 1] + 0.5 * (w_[k - 1] * ll_[k - 1] + w_[k] * ll_[k]);
      // w / p(y | eps) is the prior density up to the same constant.
      inverse[k] = inverse[k - 1] + 0.5 * (std::exp(-0.5 * e_[k - 1] * e_[k - 1] - top_) +
                                           std::exp(-0.5 * e_[k] * e_[k] - top_));
    }
    auto locate = [&](double q) {  // eps with cdf(eps) = q, and its cell
      const auto it = std::lower_bound(cdf_.begin() + 1, cdf_.end(), q);
      const auto k = static_cast<std::size_t>(it - cdf_.begin());
      const double a = w_[k - 1], b = w_[k];
      const double target = (q - cdf_[k - 1]) / (cdf_[k] - cdf_[k - 1]) * 0.5 * (a + b);
      double t;
      if (std::abs(b - a) < 1e-14 * (a + b)) t = target / a;
      else t = (-a + std::sqrt(a * a + 2.0 * (b - a) * target)) / (b - a);
      return std::pair<double, std::size_t>{e_[k - 1] + t * h_, k};
    };
    std::vector<double> out(count);
    for (std::size_t s = 0; s < count; ++s) {
      const double q_lo = static_cast<double>(s) / static_cast<double>(count);
      const double q_hi = static_cast<double>(s + 1) / static_cast<double>(count);
      const auto mid = locate(0.5 * (q_lo + q_hi));
      out[s] = mid.first;
      const std::size_t k_lo = s == 0 ? 1 : locate(q_lo).second;
      const std::size_t k_hi = s + 1 == count ? w_.size() - 1 : locate(q_hi).second;
      if (k_hi < k_lo + 16) continue;
      // Grid-cell approximation of the stratum level; ll is monotone across tail strata.
      const double z = mass[k_hi] - mass[k_lo - 1];
      const double m = match == Match::Inverse ? -std::log((inverse[k_hi] - inverse[k_lo - 1]) / z)
                                               : (moment[k_hi] - moment[k_lo - 1]) / z;
      std::size_t lo = k_lo - 1, hi = k_hi;
      const bool rising = ll_[hi] > ll_[lo];
      if ((ll_[lo] - m) * (ll_[hi] - m) > 0.0) continue;
      while (hi - lo > 1) {
        const std::size_t c = (lo + hi) / 2;
        if ((ll_[c] < m) == rising) lo = c;
        else hi = c;
      }
      // Solve ll(e) = m inside the final cell by bisection on the exact map.
      double a = e_[lo], b = e_[hi];
      for (int it = 0; it < 60; ++it) {
        const double c = 0.5 * (a + b);
        if ((log_lik(c) < m) == rising) a = c;
        else b = c;
      }
      out[s] = 0.5 * (a + b);
    }
    return out;
  }

  double mu(double eps) const { return mu_at(family_, nu_, beta0_, eps); }
  double log_lik(double eps) const { return tgmrf::poisson_log_pmf(y_, mu(eps)); }

 private:
  std::int64_t y_;
  tgmrf::Family family_;
  double nu_;
  double beta0_;
  double h_ = 0.0;
  double top_ = 0.0;
  std::vector<double> e_, mu_, ll_, w_, simpson_, cdf_;
};

}  // namespace oracle
