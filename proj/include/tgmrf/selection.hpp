#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "tgmrf/dataset.hpp"
#include "tgmrf/inference.hpp"

namespace tgmrf {

/// Model comparison criteria; lower DIC, WAIC and -2 LPML are better.
struct CriteriaReport {
  double dic = 0.0;
  double p_dic = 0.0;        // mean deviance minus deviance at the posterior mean of mu
  double mean_deviance = 0.0;
  double waic = 0.0;
  double p_waic = 0.0;
  double lpml = 0.0;
  double minus2_lpml = 0.0;
};

/// `log_lik` is draws x sites. DIC plugs in the posterior mean intensity `mu_mean`.
double dic(const Eigen::MatrixXd& log_lik, std::span<const double> mu_mean, std::span<const std::int64_t> y);
/// -2 sum_r [log mean_s p(y_r | s) - var_s log p(y_r | s)], variance over draws with divisor S.
double waic(const Eigen::MatrixXd& log_lik);
/// sum_r log CPO_r, CPO_r the harmonic mean of p(y_r | s) over draws.
double lpml(const Eigen::MatrixXd& log_lik);

CriteriaReport criteria(const Eigen::MatrixXd& log_lik, std::span<const double> mu_mean,
                        std::span<const std::int64_t> y);
CriteriaReport criteria(const PosteriorSamples& samples, const Dataset& data);

}  // namespace tgmrf
