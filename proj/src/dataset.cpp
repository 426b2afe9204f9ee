#include "tgmrf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tgmrf/errors.hpp"

namespace tgmrf {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

long long parse_integer(const std::string& text, const char* what, std::size_t line) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw IngestionError(std::string("invalid ") + what + " '" + text + "'", line);
  return value;
}

double parse_real(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(value)) throw std::invalid_argument("bad");
    return value;
  } catch (const std::exception&) {
    throw IngestionError("invalid covariate value '" + text + "'", line);
  }
}

// Contiguous labels base..base+n-1 with base in {0, 1}.
long long label_base(const std::set<long long>& labels, const char* what) {
  const long long base = *labels.begin();
  if (base != 0 && base != 1)
    throw IngestionError(std::string(what) + " labels must start at 0 or 1 (found " + std::to_string(base) + ")");
  if (*labels.rbegin() - base + 1 != static_cast<long long>(labels.size()))
    throw IngestionError(std::string(what) + " labels must be contiguous integers");
  return base;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void Dataset::validate() const {
  if (y.size() != layout.size()) throw InvalidArgument("count vector does not match the lattice");
  if (static_cast<Index>(x.rows()) != layout.size()) throw InvalidArgument("covariate rows do not match the lattice");
  if (covariate_names.size() != static_cast<std::size_t>(x.cols()))
    throw InvalidArgument("covariate names do not match covariate columns");
  std::set<std::string> names(covariate_names.begin(), covariate_names.end());
  if (names.size() != covariate_names.size()) throw InvalidArgument("covariate names must be unique");
  for (auto v : y)
    if (v < 0) throw InvalidArgument("counts must be non-negative");
  if (!x.allFinite()) throw InvalidArgument("covariates must be finite");
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.size() < 3 || header[0] != "region" || header[1] != "time" || header[2] != "y")
    throw IngestionError("header must start with region,time,y", line_no);
  std::vector<std::string> names(header.begin() + 3, header.end());
  {
    std::set<std::string> unique(names.begin(), names.end());
    if (unique.size() != names.size()) throw IngestionError("duplicate covariate column name", line_no);
    if (unique.count("")) throw IngestionError("empty covariate column name", line_no);
  }

  struct Row {
    long long region, time;
    std::int64_t y;
    std::vector<double> x;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::set<long long> regions, times;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw IngestionError("expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(fields.size()),
                           line_no);
    Row row{parse_integer(fields[0], "region", line_no), parse_integer(fields[1], "time", line_no),
            parse_integer(fields[2], "count", line_no), {}, line_no};
    if (row.y < 0) throw IngestionError("negative count", line_no);
    for (std::size_t c = 3; c < fields.size(); ++c) row.x.push_back(parse_real(fields[c], line_no));
    regions.insert(row.region);
    times.insert(row.time);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IngestionError("dataset has no rows");

  Dataset data;
  data.region_base = label_base(regions, "region");
  data.time_base = label_base(times, "time");
  data.layout = StLayout(regions.size(), times.size(), Ordering::ByTime);
  data.covariate_names = names;
  data.y.assign(data.layout.size(), 0);
  data.x.resize(static_cast<int>(data.layout.size()), static_cast<int>(names.size()));
  std::vector<std::size_t> seen(data.layout.size(), 0);
  for (const auto& row : rows) {
    const Index f = data.layout.flat(static_cast<Index>(row.region - data.region_base),
                                     static_cast<Index>(row.time - data.time_base));
    if (seen[f] != 0)
      throw IngestionError("duplicate row for region " + std::to_string(row.region) + ", time " +
                               std::to_string(row.time) + " (first at line " + std::to_string(seen[f]) + ")",
                           row.line);
    seen[f] = row.line;
    data.y[f] = row.y;
    for (std::size_t c = 0; c < row.x.size(); ++c) data.x(static_cast<int>(f), static_cast<int>(c)) = row.x[c];
  }
  for (Index i = 0; i < data.layout.n_regions(); ++i)
    for (Index t = 0; t < data.layout.n_times(); ++t)
      if (seen[data.layout.flat(i, t)] == 0)
        throw IngestionError("incomplete lattice: missing region " + std::to_string(i + data.region_base) +
                             ", time " + std::to_string(t + data.time_base));
  return data;
}

Dataset read_dataset_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open dataset '" + path + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  out << "region,time,y";
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < data.layout.n_regions(); ++i)
    for (Index t = 0; t < data.layout.n_times(); ++t) {
      const Index f = data.layout.flat(i, t);
      out << static_cast<long long>(i) + data.region_base << ',' << static_cast<long long>(t) + data.time_base << ','
          << data.y[f];
      for (int c = 0; c < data.x.cols(); ++c) out << ',' << format_real(data.x(static_cast<int>(f), c));
      out << '\n';
    }
}

void write_dataset_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write dataset '" + path + "'");
  write_dataset_csv(out, data);
  if (!out) throw IngestionError("failed while writing dataset '" + path + "'");
}

}  // namespace tgmrf
