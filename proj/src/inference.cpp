#include "tgmrf/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "tgmrf/errors.hpp"
#include "tgmrf/gmrf.hpp"
#include "tgmrf/random.hpp"

namespace tgmrf {

void ChainConfig::validate() const {
  if (burn_in == 0 || samples == 0 || thin == 0) throw InvalidArgument("burn-in, samples and thin must be positive");
  if (adaptation_window == 0) throw InvalidArgument("adaptation window must be positive");
  for (double s : {scale_epsilon, scale_beta, scale_log_nu, scale_rho})
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("proposal scales must be positive");
  for (double t : {target_coordinate, target_site})
    if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("target acceptance rates must lie in (0, 1)");
  if (!(band_low > 0.0 && band_low < band_high && band_high < 1.0))
    throw InvalidArgument("acceptance band must satisfy 0 < low < high < 1");
  if (!(nu_upper > 0.0)) throw InvalidArgument("nu upper bound must be positive");
  if (initial_nu && !(*initial_nu > 0.0 && *initial_nu <= nu_upper))
    throw InvalidArgument("initial nu must lie in (0, nu_upper]");
}

std::vector<double> PosteriorSamples::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidArgument("no parameter named '" + name + "'");
  const auto c = static_cast<int>(it - names.begin());
  std::vector<double> out(kept());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = draws(static_cast<int>(s), c);
  return out;
}

Eigen::VectorXd poisson_glm(const Eigen::MatrixXd& x, std::span<const std::int64_t> y) {
  const auto n = static_cast<int>(y.size());
  if (x.rows() != n) throw InvalidArgument("poisson_glm: design rows do not match counts");
  const auto p = static_cast<int>(x.cols());
  if (p == 0) return {};
  Eigen::VectorXd yv(n);
  for (int r = 0; r < n; ++r) yv[r] = static_cast<double>(y[r]);

  auto deviance = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = x * beta;
    double d = 0.0;
    for (int r = 0; r < n; ++r) {
      const double mu = std::exp(eta[r]);
      d += mu - (yv[r] > 0 ? yv[r] * eta[r] : 0.0);
    }
    return d;
  };

  const Eigen::MatrixXd ridge = 1e-10 * Eigen::MatrixXd::Identity(p, p);
  const Eigen::VectorXd z0 = (yv.array() + 0.5).log().matrix();
  Eigen::VectorXd beta = (x.transpose() * x + ridge).ldlt().solve(x.transpose() * z0);
  double dev = deviance(beta);
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = x * beta;
    const Eigen::VectorXd mu = eta.array().exp().matrix();
    const Eigen::VectorXd z = eta + ((yv - mu).array() / mu.array()).matrix();
    const Eigen::MatrixXd xtw = x.transpose() * mu.asDiagonal();
    Eigen::VectorXd next = (xtw * x + ridge).ldlt().solve(xtw * z);
    double next_dev = deviance(next);
    for (int half = 0; half < 30 && !(next_dev <= dev); ++half) {
      next = 0.5 * (next + beta);
      next_dev = deviance(next);
    }
    if (!next.allFinite() || !std::isfinite(next_dev)) break;
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    dev = next_dev;
    if (change < 1e-10) break;
  }
  if (!beta.allFinite()) throw NumericalError("poisson GLM initialization produced non-finite coefficients");
  return beta;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Counter {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  void record(bool ok) {
    ++proposed;
    accepted += ok ? 1 : 0;
  }
};

class Sampler {
 public:
  Sampler(const Dataset& data, Family family, const ChainConfig& config, PrecisionFactory precision,
          std::function<bool(const DependenceParams&)> reject_rho)
      : data_(data),
        family_(family),
        config_(config),
        precision_(std::move(precision)),
        reject_rho_(std::move(reject_rho)),
        n_(data.y.size()),
        p_(static_cast<std::size_t>(data.x.cols())),
        rng_(make_engine(config.seed, 0)) {}

  PosteriorSamples run();

 private:
  void initialize();
  // NaN (so the proposal is rejected) when the parameters leave the family's domain.
  double site_mu(std::size_t, double eta, double nu, double sigma, double u) const {
    try {
      return site_distribution(family_, nu, eta, sigma).quantile(u);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  }
  bool metropolis(double log_ratio) {
    if (log_ratio >= 0.0) return true;
    return std::log(unit_(rng_)) < log_ratio;
  }

  void update_epsilon(bool adapting);
  void update_beta(bool adapting);
  void update_nu(bool adapting);
  void update_rho(bool adapting);
  void adapt(Counter& window, double& scale, double target);

  void install_precision(SparsePrecision q);
  double rho_component(const DependenceParams& rho, int k) const {
    return k == 0 ? rho.rho_s : k == 1 ? rho.rho_t : rho.rho_st;
  }
  static void set_component(DependenceParams& rho, int k, double v) {
    (k == 0 ? rho.rho_s : k == 1 ? rho.rho_t : rho.rho_st) = v;
  }

  const Dataset& data_;
  Family family_;
  ChainConfig config_;
  PrecisionFactory precision_;
  std::function<bool(const DependenceParams&)> reject_rho_;
  std::size_t n_;
  std::size_t p_;
  Engine rng_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};

  // Current state and cached views.
  Eigen::VectorXd beta_;
  double nu_ = 1.0;
  DependenceParams rho_;
  std::vector<double> eps_;
  std::optional<SparsePrecision> q_;
  std::optional<CholeskyAnalysis> analysis_;
  std::vector<double> sigma_;
  std::vector<double> u_;
  Eigen::VectorXd eta_;
  std::vector<double> mu_;
  std::vector<double> ll_;
  std::vector<double> scratch_mu_;
  std::vector<double> scratch_ll_;

  // Proposal scales and acceptance windows.
  std::vector<double> scale_eps_;
  std::vector<Counter> window_eps_;
  std::vector<double> scale_beta_;
  std::vector<Counter> window_beta_;
  double scale_nu_ = 0.0;
  Counter window_nu_;
  std::array<double, 3> scale_rho_{};
  std::array<Counter, 3> window_rho_{};
  std::size_t windows_done_ = 0;

  // Post-burn-in ledger.
  Counter kept_eps_;
  std::vector<Counter> kept_beta_;
  Counter kept_nu_;
  std::array<Counter, 3> kept_rho_{};
};

void Sampler::install_precision(SparsePrecision q) {
  q_.emplace(std::move(q));
  sigma_ = marginal_std(*q_);
}

void Sampler::initialize() {
  beta_ = config_.initial_beta ? *config_.initial_beta : poisson_glm(data_.x, data_.y);
  if (static_cast<std::size_t>(beta_.size()) != p_)
    throw InvalidArgument("initial beta has " + std::to_string(beta_.size()) + " entries for " + std::to_string(p_) +
                          " covariates");
  nu_ = config_.initial_nu.value_or(std::min(1.0, config_.nu_upper));
  rho_ = config_.initial_rho.value_or(DependenceParams{});
  eps_.assign(n_, 0.0);

  auto q = precision_(rho_);
  if (q.dim() != n_) throw InvalidArgument("precision dimension does not match the dataset");
  analysis_.emplace(q.matrix());
  if (!check_pd(q, *analysis_))
    throw NumericalError("initialization: precision at rho = (" + std::to_string(rho_.rho_s) + ", " +
                         std::to_string(rho_.rho_t) + ", " + std::to_string(rho_.rho_st) +
                         ") is not positive definite");
  install_precision(std::move(q));

  eta_ = data_.x * beta_;
  u_.assign(n_, 0.5);
  mu_.resize(n_);
  ll_.resize(n_);
  for (std::size_t r = 0; r < n_; ++r) {
    const double eta = eta_[static_cast<int>(r)];
    if (!std::isfinite(eta)) throw NumericalError("initialization: non-finite linear predictor at site " + std::to_string(r));
    mu_[r] = site_mu(r, eta, nu_, sigma_[r], u_[r]);
    ll_[r] = poisson_log_pmf(data_.y[r], mu_[r]);
    if (!std::isfinite(ll_[r]))
      throw NumericalError("initialization: non-finite log-likelihood at site " + std::to_string(r) + " (y = " +
                           std::to_string(data_.y[r]) + ", mu = " + std::to_string(mu_[r]) + ")");
  }
  if (!std::isfinite(gmrf_log_density(eps_, *q_))) throw NumericalError("initialization: non-finite latent density");

  scale_eps_.assign(n_, config_.scale_epsilon);
  window_eps_.assign(n_, {});
  scale_beta_.assign(p_, config_.scale_beta);
  window_beta_.assign(p_, {});
  kept_beta_.assign(p_, {});
  scale_nu_ = config_.scale_log_nu;
  scale_rho_.fill(config_.scale_rho);
  scratch_mu_.resize(n_);
  scratch_ll_.resize(n_);
}

void Sampler::update_epsilon(bool adapting) {
  const auto& m = q_->matrix();
  for (std::size_t r = 0; r < n_; ++r) {
    double diag = 0.0, cross = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, static_cast<int>(r)); it; ++it) {
      if (static_cast<std::size_t>(it.row()) == r) diag = it.value();
      else cross += it.value() * eps_[static_cast<std::size_t>(it.row())];
    }
    const double old = eps_[r];
    const double next = old + scale_eps_[r] * normal_(rng_);
    const double u = uniformize_one(next, sigma_[r]);
    const double mu = site_mu(r, eta_[static_cast<int>(r)], nu_, sigma_[r], u);
    const double ll = poisson_log_pmf(data_.y[r], mu);
    const double gauss = -0.5 * diag * (next * next - old * old) - (next - old) * cross;
    const bool ok = metropolis(ll - ll_[r] + gauss);
    if (ok) {
      eps_[r] = next;
      u_[r] = u;
      mu_[r] = mu;
      ll_[r] = ll;
    }
    if (adapting) {
      window_eps_[r].record(ok);
    } else {
      kept_eps_.record(ok);
    }
  }
}

void Sampler::update_beta(bool adapting) {
  for (std::size_t j = 0; j < p_; ++j) {
    const double delta = scale_beta_[j] * normal_(rng_);
    const auto col = data_.x.col(static_cast<int>(j));
    double diff = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
      const double eta = eta_[static_cast<int>(r)] + delta * col[static_cast<int>(r)];
      scratch_mu_[r] = site_mu(r, eta, nu_, sigma_[r], u_[r]);
      scratch_ll_[r] = poisson_log_pmf(data_.y[r], scratch_mu_[r]);
      diff += scratch_ll_[r] - ll_[r];
    }
    const bool ok = std::isfinite(diff) && metropolis(diff);
    if (ok) {
      beta_[static_cast<int>(j)] += delta;
      eta_ += delta * col;
      mu_.swap(scratch_mu_);
      ll_.swap(scratch_ll_);
    }
    (adapting ? window_beta_[j] : kept_beta_[j]).record(ok);
  }
}

void Sampler::update_nu(bool adapting) {
  const double log_next = std::log(nu_) + scale_nu_ * normal_(rng_);
  const double next = std::exp(log_next);
  double diff = log_next - std::log(nu_);  // Jacobian of the log-scale walk
  if (next > 0.0 && next <= config_.nu_upper && std::isfinite(next)) {
    for (std::size_t r = 0; r < n_; ++r) {
      scratch_mu_[r] = site_mu(r, eta_[static_cast<int>(r)], next, sigma_[r], u_[r]);
      scratch_ll_[r] = poisson_log_pmf(data_.y[r], scratch_mu_[r]);
      diff += scratch_ll_[r] - ll_[r];
    }
  } else {
    diff = kNegInf;
  }
  const bool ok = std::isfinite(diff) && metropolis(diff);
  if (ok) {
    nu_ = next;
    mu_.swap(scratch_mu_);
    ll_.swap(scratch_ll_);
  }
  (adapting ? window_nu_ : kept_nu_).record(ok);
}

void Sampler::update_rho(bool adapting) {
  for (int k = 0; k < 3; ++k) {
    DependenceParams next = rho_;
    set_component(next, k, rho_component(rho_, k) + scale_rho_[static_cast<std::size_t>(k)] * normal_(rng_));
    bool ok = false;
    if (!(reject_rho_ && reject_rho_(next))) {
      auto q = precision_(next);
      if (check_pd(q, *analysis_)) {
        const auto sigma = marginal_std(q);
        double diff = gmrf_log_density(eps_, q) - gmrf_log_density(eps_, *q_);
        std::vector<double> u(n_);
        for (std::size_t r = 0; r < n_ && std::isfinite(diff); ++r) {
          u[r] = uniformize_one(eps_[r], sigma[r]);
          scratch_mu_[r] = site_mu(r, eta_[static_cast<int>(r)], nu_, sigma[r], u[r]);
          scratch_ll_[r] = poisson_log_pmf(data_.y[r], scratch_mu_[r]);
          diff += scratch_ll_[r] - ll_[r];
        }
        ok = std::isfinite(diff) && metropolis(diff);
        if (ok) {
          rho_ = next;
          q_.emplace(std::move(q));
          sigma_ = sigma;
          u_.swap(u);
          mu_.swap(scratch_mu_);
          ll_.swap(scratch_ll_);
        }
      }
    }
    (adapting ? window_rho_[static_cast<std::size_t>(k)] : kept_rho_[static_cast<std::size_t>(k)]).record(ok);
  }
}

// Robbins-Monro step on log scale with gain 1/sqrt(window index).
void Sampler::adapt(Counter& window, double& scale, double target) {
  if (window.proposed == 0) return;
  const double rate = static_cast<double>(window.accepted) / static_cast<double>(window.proposed);
  const double gain = 1.0 / std::sqrt(static_cast<double>(windows_done_));
  scale *= std::exp(gain * (rate - target));
  window = {};
}

PosteriorSamples Sampler::run() {
  initialize();

  PosteriorSamples out;
  out.family = family_;
  out.config = config_;
  for (const auto& name : data_.covariate_names) out.names.push_back("beta_" + name);
  out.names.insert(out.names.end(), {"nu", "rho_s", "rho_t", "rho_st"});
  const auto kept = static_cast<int>(config_.samples);
  out.draws.resize(kept, static_cast<int>(out.names.size()));
  out.log_likelihood.resize(kept, static_cast<int>(n_));
  out.mu_mean.assign(n_, 0.0);

  const std::size_t total = config_.burn_in + config_.samples * config_.thin;
  int stored = 0;
  for (std::size_t iter = 0; iter < total; ++iter) {
    const bool adapting = iter < config_.burn_in;
    update_epsilon(adapting);
    update_beta(adapting);
    if (!config_.fix_nu) update_nu(adapting);
    if (!config_.fix_rho) update_rho(adapting);

    if (adapting && (iter + 1) % config_.adaptation_window == 0) {
      ++windows_done_;
      for (std::size_t r = 0; r < n_; ++r) adapt(window_eps_[r], scale_eps_[r], config_.target_site);
      for (std::size_t j = 0; j < p_; ++j) adapt(window_beta_[j], scale_beta_[j], config_.target_coordinate);
      adapt(window_nu_, scale_nu_, config_.target_coordinate);
      for (std::size_t k = 0; k < 3; ++k) adapt(window_rho_[k], scale_rho_[k], config_.target_coordinate);
    }

    if (!adapting && (iter - config_.burn_in + 1) % config_.thin == 0) {
      if (!q_->has_factor()) throw InternalError("stored rho draw without a positive-definite factor");
      int c = 0;
      for (std::size_t j = 0; j < p_; ++j) out.draws(stored, c++) = beta_[static_cast<int>(j)];
      out.draws(stored, c++) = nu_;
      out.draws(stored, c++) = rho_.rho_s;
      out.draws(stored, c++) = rho_.rho_t;
      out.draws(stored, c++) = rho_.rho_st;
      for (std::size_t r = 0; r < n_; ++r) {
        out.log_likelihood(stored, static_cast<int>(r)) = ll_[r];
        out.mu_mean[r] += mu_[r];
      }
      ++stored;
    }
  }
  for (double& m : out.mu_mean) m /= static_cast<double>(kept);

  auto ledger = [&](const std::string& block, const Counter& c, double scale) {
    BlockAcceptance a{block, c.proposed, c.accepted, scale, false};
    a.outside_band = c.proposed > 0 && (a.rate() < config_.band_low || a.rate() > config_.band_high);
    if (a.outside_band) {
      std::ostringstream msg;
      msg << "acceptance rate of " << block << " is " << a.rate() << ", outside [" << config_.band_low << ", "
          << config_.band_high << "]";
      out.warnings.push_back(msg.str());
    }
    out.acceptance.push_back(a);
  };
  ledger("epsilon", kept_eps_, std::accumulate(scale_eps_.begin(), scale_eps_.end(), 0.0) / static_cast<double>(n_));
  for (std::size_t j = 0; j < p_; ++j) ledger(out.names[j], kept_beta_[j], scale_beta_[j]);
  if (!config_.fix_nu) ledger("nu", kept_nu_, scale_nu_);
  if (!config_.fix_rho) {
    const char* names[] = {"rho_s", "rho_t", "rho_st"};
    for (std::size_t k = 0; k < 3; ++k) ledger(names[k], kept_rho_[k], scale_rho_[k]);
  }
  return out;
}

}  // namespace

PosteriorSamples fit(const Dataset& data, const Lattice& lattice, Family family, const ChainConfig& config,
                     const SamplerHooks& hooks) {
  config.validate();
  data.validate();
  PrecisionFactory precision = hooks.precision;
  if (!precision) {
    if (data.layout != lattice.layout())
      throw InvalidArgument("dataset lattice does not match the graphs");
    precision = proposed_precision(lattice);
  }
  Sampler sampler(data, family, config, std::move(precision), hooks.reject_rho);
  return sampler.run();
}

ParameterSummary summarize(std::span<const double> draws, double level, std::string name) {
  if (draws.size() < kMinSummaryDraws)
    throw InvalidArgument("summary needs at least " + std::to_string(kMinSummaryDraws) + " draws, got " +
                          std::to_string(draws.size()));
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("HPD level must lie in (0, 1)");
  std::vector<double> x(draws.begin(), draws.end());
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument("draws must be finite");
  std::sort(x.begin(), x.end());
  const auto n = x.size();
  const double dn = static_cast<double>(n);

  ParameterSummary s;
  s.name = std::move(name);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / dn;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  s.sd = std::sqrt(ss / (dn - 1.0));

  // Shortest window holding ceil(level * n) draws.
  const auto m = static_cast<std::size_t>(std::ceil(level * dn));
  std::size_t best = 0;
  for (std::size_t i = 1; i + m - 1 < n; ++i)
    if (x[i + m - 1] - x[i] < x[best + m - 1] - x[best]) best = i;
  s.hpd_low = x[best];
  s.hpd_high = x[best + m - 1];

  if (x.front() == x.back()) {
    s.mode = x.front();
    return s;
  }
  auto quantile = [&](double p) {
    const double pos = p * (dn - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double spread = iqr > 0.0 ? std::min(s.sd, iqr / 1.34) : s.sd;
  const double h = 0.9 * spread * std::pow(dn, -0.2);
  auto density = [&](double t) {
    // Kernels beyond 8 bandwidths contribute nothing at double precision.
    const auto lo = std::lower_bound(x.begin(), x.end(), t - 8.0 * h);
    const auto hi = std::upper_bound(lo, x.end(), t + 8.0 * h);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double z = (t - *it) / h;
      acc += std::exp(-0.5 * z * z);
    }
    return acc;
  };

  constexpr int kGrid = 512;
  const double a = x.front() - 3.0 * h, b = x.back() + 3.0 * h;
  const double step = (b - a) / (kGrid - 1);
  double arg = a, top = -1.0;
  for (int g = 0; g < kGrid; ++g) {
    const double t = a + g * step;
    const double d = density(t);
    if (d > top) {
      top = d;
      arg = t;
    }
  }
  // Golden-section refinement inside the neighbouring grid cells.
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = arg - step, hi = arg + step;
  double c1 = hi - phi * (hi - lo), c2 = lo + phi * (hi - lo);
  double f1 = density(c1), f2 = density(c2);
  for (int it = 0; it < 60; ++it) {
    if (f1 > f2) {
      hi = c2;
      c2 = c1;
      f2 = f1;
      c1 = hi - phi * (hi - lo);
      f1 = density(c1);
    } else {
      lo = c1;
      c1 = c2;
      f1 = f2;
      c2 = lo + phi * (hi - lo);
      f2 = density(c2);
    }
  }
  const double refined = 0.5 * (lo + hi);
  s.mode = density(refined) >= top ? refined : arg;
  return s;
}

std::vector<ParameterSummary> summarize(const PosteriorSamples& samples, double level) {
  std::vector<ParameterSummary> out;
  for (const auto& name : samples.names) {
    const auto col = samples.column(name);
    out.push_back(summarize(col, level, name));
  }
  return out;
}

Dataset expand_time_varying(const Dataset& data, const std::vector<std::string>& columns) {
  const std::set<std::string> wanted(columns.begin(), columns.end());
  if (wanted.size() != columns.size()) throw IngestionError("time-varying column listed twice");
  for (const auto& c : wanted)
    if (std::find(data.covariate_names.begin(), data.covariate_names.end(), c) == data.covariate_names.end())
      throw IngestionError("unknown covariate '" + c + "' for time-varying expansion");
  if (wanted.empty()) return data;

  const auto& layout = data.layout;
  const Index times = layout.n_times();
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  for (int c = 0; c < data.x.cols(); ++c) {
    const auto& name = data.covariate_names[static_cast<std::size_t>(c)];
    if (!wanted.count(name)) {
      names.push_back(name);
      cols.push_back(data.x.col(c));
      continue;
    }
    for (Index t = 0; t < times; ++t) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(data.x.rows());
      for (Index i = 0; i < layout.n_regions(); ++i) {
        const auto f = static_cast<int>(layout.flat(i, t));
        v[f] = data.x(f, c);
      }
      names.push_back(name + "_t" + std::to_string(static_cast<long long>(t) + data.time_base));
      cols.push_back(std::move(v));
    }
  }
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) throw IngestionError("time-varying expansion produces duplicate column names");

  Dataset out = data;
  out.covariate_names = names;
  out.x.resize(data.x.rows(), static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.x.col(static_cast<int>(c)) = cols[c];
  return out;
}

}  // namespace tgmrf
