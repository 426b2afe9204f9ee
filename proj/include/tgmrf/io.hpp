#pragma once

#include <Eigen/Dense>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "tgmrf/inference.hpp"
#include "tgmrf/selection.hpp"

namespace tgmrf {

/// Ordered `key=value` records. Lines starting with '#' and blank lines are
/// skipped; keys are unique.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues read_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);
void write_key_values(std::ostream& out, const KeyValues& records);
void write_key_values_file(const std::string& path, const KeyValues& records);
std::optional<std::string> lookup(const KeyValues& records, const std::string& key);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// 64-bit FNV-1a of the bytes, as "fnv1a64:<16 hex digits>".
std::string digest_bytes(const std::string& bytes);
std::string digest_file(const std::string& path);

/// Numeric CSV with a header row.
struct NumericTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};
void write_numeric_csv_file(const std::string& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values);
NumericTable read_numeric_csv_file(const std::string& path);

/// File names inside a fit output directory.
inline constexpr const char* kSamplesFile = "samples.csv";
inline constexpr const char* kLogLikFile = "loglik.csv";
inline constexpr const char* kMuMeanFile = "mu_mean.csv";
inline constexpr const char* kSummaryFile = "summary.txt";
inline constexpr const char* kManifestFile = "manifest.txt";

/// Writes draws, the per-draw log-likelihood matrix and the posterior mean
/// intensity into `dir` (which must exist).
void write_fit_outputs(const std::string& dir, const PosteriorSamples& samples);

/// What `compare` needs back from a fit directory.
struct StoredFit {
  Eigen::MatrixXd log_likelihood;
  std::vector<double> mu_mean;
};
StoredFit read_fit_outputs(const std::string& dir);

/// `<name>.mode`, `.sd`, `.hpd_low`, `.hpd_high` per parameter.
KeyValues summary_records(const std::vector<ParameterSummary>& summaries, double level);
KeyValues acceptance_records(const PosteriorSamples& samples);
KeyValues criteria_records(const CriteriaReport& report);

}  // namespace tgmrf
