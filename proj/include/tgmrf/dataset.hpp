#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tgmrf/graph.hpp"

namespace tgmrf {

/// Complete (region, time) panel of counts and covariates. Rows are held in
/// `layout` order; the layout is time-major (one spatial map per time slice).
struct Dataset {
  StLayout layout{1, 1, Ordering::ByTime};
  std::vector<std::int64_t> y;
  Eigen::MatrixXd x;  // layout.size() x q
  std::vector<std::string> covariate_names;
  // File labels are contiguous integers; index_base is the smallest (0 or 1).
  long long region_base = 0;
  long long time_base = 0;

  Index n_sites() const { return layout.size(); }
  Index n_covariates() const { return static_cast<Index>(x.cols()); }
  /// Throws InvalidArgument when sizes or names are inconsistent.
  void validate() const;
};

/// Header `region,time,y,<covariates...>`, one row per (region, time).
/// Region and time labels must be contiguous integers starting at 0 or 1.
/// Incomplete panels raise IngestionError naming the first absent pair.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv_file(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv_file(const std::string& path, const Dataset& data);

}  // namespace tgmrf
