#include "tgmrf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "tgmrf/errors.hpp"

namespace tgmrf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw IngestionError(path + ": invalid number '" + text + "'", line);
  return v;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IngestionError("failed writing '" + path + "'");
}

std::string join(const std::string& dir, const char* file) { return dir.empty() ? file : dir + "/" + file; }

}  // namespace

KeyValues read_key_values(std::istream& in) {
  KeyValues out;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw IngestionError("expected key=value", line);
    auto key = trim(text.substr(0, eq));
    if (key.empty()) throw IngestionError("empty key", line);
    if (!seen.insert(key).second) throw IngestionError("duplicate key '" + key + "'", line);
    out.emplace_back(std::move(key), trim(text.substr(eq + 1)));
  }
  return out;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read '" + path + "'");
  try {
    return read_key_values(in);
  } catch (const IngestionError& e) {
    throw IngestionError(path + ": " + e.what());
  }
}

void write_key_values(std::ostream& out, const KeyValues& records) {
  for (const auto& [k, v] : records) out << k << '=' << v << '\n';
}

void write_key_values_file(const std::string& path, const KeyValues& records) {
  auto out = open_output(path);
  write_key_values(out, records);
  finish(out, path);
}

std::optional<std::string> lookup(const KeyValues& records, const std::string& key) {
  for (const auto& [k, v] : records)
    if (k == key) return v;
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InternalError("number formatting failed");
  return {buf, ptr};
}

std::string digest_bytes(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return digest_bytes(bytes);
}

void write_numeric_csv_file(const std::string& path, const std::vector<std::string>& header,
                            const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols())
    throw InvalidArgument("header has " + std::to_string(header.size()) + " names for " +
                          std::to_string(values.cols()) + " columns");
  auto out = open_output(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
  finish(out, path);
}

NumericTable read_numeric_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read '" + path + "'");
  NumericTable t;
  std::string raw;
  if (!std::getline(in, raw)) throw IngestionError(path + ": empty file");
  t.header = split_commas(trim(raw));
  std::vector<std::vector<double>> rows;
  std::size_t line = 1;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = trim(raw);
    if (text.empty()) continue;
    const auto fields = split_commas(text);
    if (fields.size() != t.header.size())
      throw IngestionError(path + ": expected " + std::to_string(t.header.size()) + " fields, got " +
                               std::to_string(fields.size()),
                           line);
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_double(f, path, line));
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c)
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return t;
}

void write_fit_outputs(const std::string& dir, const PosteriorSamples& samples) {
  write_numeric_csv_file(join(dir, kSamplesFile), samples.names, samples.draws);
  std::vector<std::string> sites;
  for (Eigen::Index r = 0; r < samples.log_likelihood.cols(); ++r) sites.push_back("site" + std::to_string(r));
  write_numeric_csv_file(join(dir, kLogLikFile), sites, samples.log_likelihood);
  const Eigen::Map<const Eigen::VectorXd> mu(samples.mu_mean.data(), static_cast<Eigen::Index>(samples.mu_mean.size()));
  write_numeric_csv_file(join(dir, kMuMeanFile), {"mu_mean"}, mu);
}

StoredFit read_fit_outputs(const std::string& dir) {
  StoredFit f;
  f.log_likelihood = read_numeric_csv_file(join(dir, kLogLikFile)).values;
  const auto mu = read_numeric_csv_file(join(dir, kMuMeanFile));
  if (mu.values.cols() != 1) throw IngestionError(join(dir, kMuMeanFile) + ": expected one column");
  f.mu_mean.assign(mu.values.data(), mu.values.data() + mu.values.rows());
  if (f.log_likelihood.cols() != static_cast<Eigen::Index>(f.mu_mean.size()))
    throw IngestionError(dir + ": log-likelihood and mean intensity disagree on the number of sites");
  return f;
}

KeyValues summary_records(const std::vector<ParameterSummary>& summaries, double level) {
  KeyValues out{{"hpd_level", format_double(level)}};
  for (const auto& s : summaries) {
    out.emplace_back(s.name + ".mode", format_double(s.mode));
    out.emplace_back(s.name + ".sd", format_double(s.sd));
    out.emplace_back(s.name + ".hpd_low", format_double(s.hpd_low));
    out.emplace_back(s.name + ".hpd_high", format_double(s.hpd_high));
  }
  return out;
}

KeyValues acceptance_records(const PosteriorSamples& samples) {
  KeyValues out;
  for (const auto& a : samples.acceptance) {
    out.emplace_back("acceptance." + a.block + ".rate", format_double(a.rate()));
    out.emplace_back("acceptance." + a.block + ".final_scale", format_double(a.final_scale));
  }
  for (std::size_t k = 0; k < samples.warnings.size(); ++k)
    out.emplace_back("warning." + std::to_string(k + 1), samples.warnings[k]);
  return out;
}

KeyValues criteria_records(const CriteriaReport& report) {
  return {{"criteria.dic", format_double(report.dic)},
          {"criteria.p_dic", format_double(report.p_dic)},
          {"criteria.minus2_lpml", format_double(report.minus2_lpml)},
          {"criteria.lpml", format_double(report.lpml)},
          {"criteria.waic", format_double(report.waic)},
          {"criteria.p_waic", format_double(report.p_waic)}};
}

}  // namespace tgmrf
