#include "tgmrf/selection.hpp"

#include <algorithm>
#include <cmath>

#include "tgmrf/errors.hpp"
#include "tgmrf/model.hpp"

namespace tgmrf {

namespace {

void require_matrix(const Eigen::MatrixXd& log_lik) {
  if (log_lik.rows() == 0 || log_lik.cols() == 0) throw InvalidArgument("log-likelihood matrix is empty");
  if (!log_lik.allFinite()) throw InvalidArgument("log-likelihood matrix has non-finite entries");
}

// log mean_s exp(v_s)
double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double top = v.maxCoeff();
  return top + std::log((v.array() - top).exp().sum()) - std::log(static_cast<double>(v.size()));
}

struct Parts {
  double waic;
  double p_waic;
  double lpml;
};

Parts waic_lpml(const Eigen::MatrixXd& log_lik) {
  require_matrix(log_lik);
  const double s = static_cast<double>(log_lik.rows());
  Parts out{0.0, 0.0, 0.0};
  double lppd = 0.0;
  for (int r = 0; r < log_lik.cols(); ++r) {
    const auto col = log_lik.col(r);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / s;
    lppd += log_mean_exp(col);
    out.p_waic += var;
    out.lpml -= log_mean_exp(-col);
  }
  out.waic = -2.0 * (lppd - out.p_waic);
  return out;
}

}  // namespace

double dic(const Eigen::MatrixXd& log_lik, std::span<const double> mu_mean, std::span<const std::int64_t> y) {
  return criteria(log_lik, mu_mean, y).dic;
}

double waic(const Eigen::MatrixXd& log_lik) { return waic_lpml(log_lik).waic; }

double lpml(const Eigen::MatrixXd& log_lik) { return waic_lpml(log_lik).lpml; }

CriteriaReport criteria(const Eigen::MatrixXd& log_lik, std::span<const double> mu_mean,
                        std::span<const std::int64_t> y) {
  require_matrix(log_lik);
  if (mu_mean.size() != static_cast<std::size_t>(log_lik.cols()) || y.size() != mu_mean.size())
    throw InvalidArgument("criteria: counts, mean intensities and log-likelihood columns differ in size");
  CriteriaReport out;
  out.mean_deviance = -2.0 * log_lik.rowwise().sum().mean();
  double plug_in = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    if (!(mu_mean[r] > 0.0) || !std::isfinite(mu_mean[r])) throw InvalidArgument("mean intensities must be positive");
    plug_in += poisson_log_pmf(y[r], mu_mean[r]);
  }
  out.p_dic = out.mean_deviance + 2.0 * plug_in;
  out.dic = out.mean_deviance + out.p_dic;
  const auto parts = waic_lpml(log_lik);
  out.waic = parts.waic;
  out.p_waic = parts.p_waic;
  out.lpml = parts.lpml;
  out.minus2_lpml = -2.0 * parts.lpml;
  return out;
}

CriteriaReport criteria(const PosteriorSamples& samples, const Dataset& data) {
  return criteria(samples.log_likelihood, samples.mu_mean, data.y);
}

}  // namespace tgmrf
