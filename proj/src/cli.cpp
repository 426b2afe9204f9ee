#include "tgmrf/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "tgmrf/errors.hpp"
#include "tgmrf/inference.hpp"
#include "tgmrf/io.hpp"
#include "tgmrf/model.hpp"
#include "tgmrf/precision.hpp"
#include "tgmrf/random.hpp"
#include "tgmrf/selection.hpp"

#ifndef TGMRF_VERSION
#define TGMRF_VERSION "unknown"
#endif

namespace tgmrf::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- lattice

struct LatticeOptions {
  Index rows = 0;
  Index cols = 0;
  Index times = 0;
  std::string adjacency;
  int adjacency_base = 0;
  std::string neighborhood = "rook";
};

void add_lattice_options(CLI::App& sub, LatticeOptions& o) {
  sub.add_option("--rows", o.rows, "Grid rows (regions are rows x cols)");
  sub.add_option("--cols", o.cols, "Grid columns");
  sub.add_option("--times", o.times, "Number of time slices");
  sub.add_option("--adjacency", o.adjacency, "Region edge-list file; overrides --rows/--cols");
  sub.add_option("--adjacency-base", o.adjacency_base, "Smallest region index in the edge list")
      ->check(CLI::IsMember({0, 1}));
  sub.add_option("--neighborhood", o.neighborhood, "Grid adjacency")->check(CLI::IsMember({"rook", "queen"}));
}

bool has_spatial(const LatticeOptions& o) { return !o.adjacency.empty() || (o.rows > 0 && o.cols > 0); }

SpatialGraph spatial_graph(const LatticeOptions& o, Index n_regions = 0) {
  if (!o.adjacency.empty())
    return read_edge_list_file(o.adjacency, o.adjacency_base == 1 ? IndexBase::One : IndexBase::Zero, n_regions);
  if (o.rows == 0 || o.cols == 0) throw UsageError("the spatial graph needs --rows and --cols, or --adjacency");
  return grid_graph(o.rows, o.cols, o.neighborhood == "queen" ? GridNeighborhood::Queen : GridNeighborhood::Rook);
}

Lattice build_lattice(const LatticeOptions& o, Index n_regions = 0) {
  if (o.times == 0) throw UsageError("--times must be positive");
  return Lattice(spatial_graph(o, n_regions), path_graph(o.times));
}

// ---------------------------------------------------------------- config and manifests

Family family_option(const std::string& name) {
  try {
    return parse_family(name);
  } catch (const InvalidArgument&) {
    throw UsageError("unknown family '" + name + "' (valid: gi, gsc, gsh, ln)");
  }
}

// Applies a key=value file to options not given on the command line. Keys
// are option names, optionally prefixed "config." as in run manifests;
// other dotted keys (digests, records, criteria) are ignored.
void apply_config(CLI::App& sub, const std::string& path) {
  for (const auto& [key, value] : read_key_values_file(path)) {
    if (key == "subcommand") {
      if (value != sub.get_name())
        throw UsageError("config '" + path + "' is for '" + value + "', not '" + sub.get_name() + "'");
      continue;
    }
    std::string name = key;
    if (name.rfind("config.", 0) == 0) name = name.substr(7);
    else if (name.find('.') != std::string::npos || name == "tool_version") continue;
    if (name == "config") throw UsageError("config files cannot include other config files");
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    if (opt == nullptr) throw UsageError("unknown key '" + key + "' in config '" + path + "'");
    // Flags win; echoed defaults are left unset so presets still apply.
    if (opt->count() > 0 || value.empty() || value == opt->get_default_str()) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

// Every option value that shapes the outputs, keyed "config.<name>".
KeyValues echo_options(const CLI::App& sub, const std::map<std::string, std::string>& overrides = {}) {
  KeyValues out;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config" || name == "output" || name == "threads") continue;
    std::string value;
    if (auto it = overrides.find(name); it != overrides.end()) {
      value = it->second;
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      value = std::accumulate(r.begin(), r.end(), std::string(),
                              [](const std::string& a, const std::string& b) { return a.empty() ? b : a + "," + b; });
    } else {
      value = opt->get_default_str();
    }
    if (!value.empty() && value != "{}") out.emplace_back("config." + name, value);
  }
  return out;
}

KeyValues manifest_header(const std::string& subcommand) {
  return {{"subcommand", subcommand}, {"tool_version", TGMRF_VERSION}};
}

void append(KeyValues& to, const KeyValues& from) { to.insert(to.end(), from.begin(), from.end()); }

std::string output_dir(const std::string& given, const std::string& subcommand, std::uint64_t seed) {
  fs::path dir;
  if (!given.empty()) {
    dir = given;
  } else {
    const char* root = std::getenv(kOutputRootVariable);
    dir = fs::path(root && *root ? root : "tgmrf-runs") / (subcommand + "-seed" + std::to_string(seed));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IngestionError("cannot create output directory '" + dir.string() + "'");
  return dir.string();
}

std::string child(const std::string& dir, const std::string& name) {
  const auto path = (fs::path(dir) / name).string();
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IngestionError("cannot create output directory '" + path + "'");
  return path;
}

std::string in_dir(const std::string& dir, const char* file) { return (fs::path(dir) / file).string(); }

std::string absolute(const std::string& path) { return path.empty() ? path : fs::absolute(path).lexically_normal().string(); }

// ---------------------------------------------------------------- concurrency

void run_parallel(const std::vector<std::function<void()>>& jobs, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        jobs[k]();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- limits

std::string exact_decimal(Index num, Index den) {
  // Terminating expansions are printed exactly with at least two decimals.
  Index d = den;
  while (d % 2 == 0) d /= 2;
  while (d % 5 == 0) d /= 5;
  std::ostringstream s;
  if (d != 1) {
    s << std::setprecision(17) << static_cast<double>(num) / static_cast<double>(den);
    return s.str();
  }
  s << num / den << '.';
  Index rem = num % den;
  int digits = 0;
  do {
    rem *= 10;
    s << rem / den;
    rem %= den;
    ++digits;
  } while (rem != 0 || digits < 2);
  return s.str();
}

struct LimitsOptions {
  LatticeOptions lattice;
  std::string axis = "all";
};

int cmd_limits(const LimitsOptions& o, std::ostream& out) {
  const auto lattice = build_lattice(o.lattice);
  const std::vector<std::pair<std::string, LimitAxis>> axes{
      {"spatial", LimitAxis::Spatial}, {"temporal", LimitAxis::Temporal}, {"spatiotemporal", LimitAxis::SpatioTemporal}};
  const char* labels[] = {"rho_s_max", "rho_t_max", "rho_st_max"};
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (o.axis != "all" && o.axis != axes[k].first) continue;
    try {
      const auto r = marginal_limit_report(lattice.spatial, lattice.temporal, axes[k].second);
      const Index g = std::gcd(r.numerator, r.denominator);
      out << labels[k] << " = " << exact_decimal(r.numerator, r.denominator) << " (" << r.numerator / g << "/"
          << r.denominator / g << "; binding region " << r.region << ", time " << r.time << ")\n";
    } catch (const DomainError& e) {
      if (o.axis != "all") throw;
      out << labels[k] << " undefined: " << e.what() << "\n";
    }
  }
  return kSuccess;
}

// ---------------------------------------------------------------- simulate

struct TruthOptions {
  std::string preset;
  std::vector<double> beta;
  std::vector<double> rho;
};

struct SimulateOptions {
  LatticeOptions lattice;
  TruthOptions truth;
  std::string family = "gi";
  std::optional<double> nu;
  std::uint64_t seed = 1;
  std::string output;
};

// Lattice and truth after applying a preset; explicit flags win.
struct Design {
  Lattice lattice;
  Truth truth;
  LatticeOptions spec;
};

Design resolve_design(const CLI::App& sub, LatticeOptions lattice, const TruthOptions& t, Family family,
                      std::optional<double> nu) {
  Truth truth;
  truth.nu = nu.value_or(default_nu(family));
  if (!t.preset.empty()) {
    Scenario sc;
    try {
      sc = scenario_preset(t.preset);
    } catch (const InvalidArgument&) {
      throw UsageError("unknown preset '" + t.preset + "' (valid: scenario1, scenario2, scenario3)");
    }
    if (sub.get_option("--rows")->count() == 0 && lattice.adjacency.empty()) lattice.rows = sc.rows;
    if (sub.get_option("--cols")->count() == 0 && lattice.adjacency.empty()) lattice.cols = sc.cols;
    if (sub.get_option("--times")->count() == 0) lattice.times = sc.times;
    truth.beta = sc.beta;
    truth.rho = sc.rho;
  }
  if (!t.beta.empty()) truth.beta = Eigen::Map<const Eigen::VectorXd>(t.beta.data(), static_cast<Eigen::Index>(t.beta.size()));
  if (!t.rho.empty()) {
    if (t.rho.size() != 3) throw UsageError("--rho takes three values: rho_s,rho_t,rho_st");
    truth.rho = {t.rho[0], t.rho[1], t.rho[2]};
  }
  if (truth.beta.size() == 0) throw UsageError("give --preset or --beta");
  if (truth.beta.size() != 2) throw UsageError("--beta takes two values: intercept,x1");
  if (!(truth.nu > 0.0)) throw UsageError("--nu must be positive");
  return {build_lattice(lattice), truth, lattice};
}

KeyValues truth_records(const Truth& truth, Family family, std::uint64_t seed) {
  return {{"family", std::string(family_name(family))},
          {"beta.intercept", format_double(truth.beta[0])},
          {"beta.x1", format_double(truth.beta[1])},
          {"nu", format_double(truth.nu)},
          {"rho_s", format_double(truth.rho.rho_s)},
          {"rho_t", format_double(truth.rho.rho_t)},
          {"rho_st", format_double(truth.rho.rho_st)},
          {"seed", std::to_string(seed)}};
}

constexpr const char* kDesignNote = "intercept plus x1 ~ N(0,1), drawn from the simulation seed";

// Writes data.csv and truth.txt into dir; returns the dataset.
Dataset simulate_into(const std::string& dir, const Design& design, Family family, std::uint64_t seed) {
  const auto x = standard_design(design.lattice, seed);
  auto data = simulate_counts(design.lattice, x, design.truth, family, seed);
  write_dataset_csv_file(in_dir(dir, "data.csv"), data);
  write_key_values_file(in_dir(dir, "truth.txt"), truth_records(design.truth, family, seed));
  return data;
}

int cmd_simulate(const CLI::App& sub, const SimulateOptions& o, std::ostream& out) {
  const auto start = Clock::now();
  const Family family = family_option(o.family);
  const auto design = resolve_design(sub, o.lattice, o.truth, family, o.nu);
  const auto dir = output_dir(o.output, "simulate", o.seed);
  const auto data = simulate_into(dir, design, family, o.seed);

  auto manifest = manifest_header("simulate");
  append(manifest, echo_options(sub, {{"rows", std::to_string(design.spec.rows)},
                                      {"cols", std::to_string(design.spec.cols)},
                                      {"times", std::to_string(design.spec.times)}}));
  manifest.emplace_back("digest.data", digest_file(in_dir(dir, "data.csv")));
  manifest.emplace_back("digest.truth", digest_file(in_dir(dir, "truth.txt")));
  manifest.emplace_back("record.design", kDesignNote);
  manifest.emplace_back("record.sites", std::to_string(data.n_sites()));
  manifest.emplace_back("record.wall_clock_seconds", format_double(seconds_since(start)));
  write_key_values_file(in_dir(dir, kManifestFile), manifest);
  out << "wrote " << data.n_sites() << " rows to " << in_dir(dir, "data.csv") << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  LatticeOptions lattice;
  TruthOptions truth;
  std::string data;
  std::string family = "gi";
  std::string truth_family;
  std::optional<double> truth_nu;
  std::size_t burn_in = 5000;
  std::size_t samples = 1000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
  double nu_upper = 100.0;
  double level = 0.90;
  std::size_t chains = 1;
  std::size_t replicates = 1;
  unsigned threads = 0;
  std::vector<std::string> time_varying;
  std::string output;
};

struct FitContext {
  const FitOptions* options;
  Family family;
  ChainConfig config;
  // Echo overrides that turn a child run into a plain single-chain fit.
  std::map<std::string, std::string> overrides{{"chains", "1"}, {"replicates", "1"}, {"preset", ""},
                                               {"beta", ""},     {"rho", ""},        {"truth-family", ""},
                                               {"truth-nu", ""}};
};

struct FitResult {
  std::vector<ParameterSummary> summaries;
};

// One chain on one dataset, written as a self-contained, re-runnable fit directory.
FitResult fit_into(const FitContext& ctx, const std::string& dir, const Dataset& raw, const std::string& data_path,
                   const Lattice& lattice, std::uint64_t seed, const CLI::App& sub, std::mutex& log_mutex,
                   std::ostream& log) {
  const auto start = Clock::now();
  const auto data = expand_time_varying(raw, ctx.options->time_varying);
  auto overrides = ctx.overrides;
  overrides["data"] = data_path;
  overrides["seed"] = std::to_string(seed);
  ChainConfig config = ctx.config;
  config.seed = seed;
  const auto samples = fit(data, lattice, ctx.family, config);
  write_fit_outputs(dir, samples);
  FitResult result{summarize(samples, ctx.options->level)};
  write_key_values_file(in_dir(dir, kSummaryFile), summary_records(result.summaries, ctx.options->level));

  auto manifest = manifest_header("fit");
  append(manifest, echo_options(sub, overrides));
  manifest.emplace_back("digest.data", digest_file(data_path));
  append(manifest, acceptance_records(samples));
  append(manifest, criteria_records(criteria(samples, data)));
  manifest.emplace_back("record.wall_clock_seconds", format_double(seconds_since(start)));
  write_key_values_file(in_dir(dir, kManifestFile), manifest);

  std::lock_guard lock(log_mutex);
  log << "checkpoint: fit " << dir << " done in " << std::fixed << std::setprecision(1) << seconds_since(start)
      << " s" << std::defaultfloat << "\n";
  for (const auto& w : samples.warnings) log << "warning: " << dir << ": " << w << "\n";
  return result;
}

int cmd_fit(const CLI::App& sub, FitOptions o, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  FitContext ctx{&o, family_option(o.family), {}};
  ctx.config.burn_in = o.burn_in;
  ctx.config.samples = o.samples;
  ctx.config.thin = o.thin;
  ctx.config.nu_upper = o.nu_upper;
  ctx.config.validate();
  if (o.samples < kMinSummaryDraws)
    throw UsageError("--samples must be at least " + std::to_string(kMinSummaryDraws) + " for posterior summaries");
  if (o.chains == 0 || o.replicates == 0) throw UsageError("--chains and --replicates must be positive");
  if (!(o.level > 0.0 && o.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  const bool simulated = !o.truth.preset.empty() || !o.truth.beta.empty();
  if (simulated == !o.data.empty())
    throw UsageError(simulated ? "give either --data or simulation flags, not both"
                               : "fit needs --data, or --preset for simulated replicates");
  if (o.replicates > 1 && !simulated) throw UsageError("--replicates needs --preset (replicates are simulated)");
  o.data = absolute(o.data);

  const auto dir = output_dir(o.output, "fit", o.seed);
  std::mutex log_mutex;
  std::vector<std::function<void()>> jobs;
  std::vector<FitResult> results;
  std::vector<std::string> job_dirs;
  std::optional<Design> design;
  std::vector<std::pair<Dataset, std::string>> datasets;  // per replicate, with path

  if (simulated) {
    const Family truth_family = o.truth_family.empty() ? ctx.family : family_option(o.truth_family);
    design.emplace(resolve_design(sub, o.lattice, o.truth, truth_family, o.truth_nu));
    ctx.overrides["rows"] = std::to_string(design->spec.rows);
    ctx.overrides["cols"] = std::to_string(design->spec.cols);
    ctx.overrides["times"] = std::to_string(design->spec.times);
    for (std::size_t r = 0; r < o.replicates; ++r) {
      const auto rdir = o.replicates == 1 ? dir : child(dir, "replicate-" + std::to_string(r + 1));
      const std::uint64_t sim_seed = o.replicates == 1 ? o.seed : derive_seed(o.seed, r);
      auto data = simulate_into(rdir, *design, truth_family, sim_seed);
      datasets.emplace_back(std::move(data), absolute(in_dir(rdir, "data.csv")));
    }
  } else {
    auto data = read_dataset_csv_file(o.data);
    datasets.emplace_back(std::move(data), o.data);
  }

  std::optional<Lattice> lattice;
  if (design) {
    lattice.emplace(design->lattice);
  } else {
    const auto& layout = datasets.front().first.layout;
    if (!has_spatial(o.lattice)) throw UsageError("fit needs the spatial graph: --rows and --cols, or --adjacency");
    auto spec = o.lattice;
    if (spec.times == 0) spec.times = layout.n_times();
    lattice.emplace(build_lattice(spec, o.lattice.adjacency.empty() ? 0 : layout.n_regions()));
    if (lattice->layout() != layout)
      throw IngestionError("dataset has " + std::to_string(layout.n_regions()) + " regions x " +
                           std::to_string(layout.n_times()) + " times but the lattice has " +
                           std::to_string(lattice->spatial.size()) + " x " + std::to_string(lattice->temporal.size()));
  }

  results.resize(datasets.size() * o.chains);
  for (std::size_t r = 0; r < datasets.size(); ++r) {
    const auto rdir = datasets.size() == 1 ? dir : (fs::path(dir) / ("replicate-" + std::to_string(r + 1))).string();
    const std::uint64_t rseed = datasets.size() == 1 ? o.seed : derive_seed(derive_seed(o.seed, r), 1);
    for (std::size_t c = 0; c < o.chains; ++c) {
      const auto cdir = o.chains == 1 ? rdir : child(rdir, "chain-" + std::to_string(c + 1));
      const std::uint64_t cseed = o.chains == 1 ? rseed : derive_seed(rseed, 1000 + c);
      const std::size_t slot = r * o.chains + c;
      job_dirs.push_back(cdir);
      jobs.emplace_back([&, r, cdir, cseed, slot] {
        results[slot] = fit_into(ctx, cdir, datasets[r].first, datasets[r].second, *lattice, cseed, sub, log_mutex, err);
      });
    }
  }
  run_parallel(jobs, o.threads);

  if (jobs.size() == 1) {
    for (const auto& s : results.front().summaries)
      out << s.name << " mode " << format_double(s.mode) << " sd " << format_double(s.sd) << " hpd ["
          << format_double(s.hpd_low) << ", " << format_double(s.hpd_high) << "]\n";
    return kSuccess;
  }

  // Parent directory: one manifest plus the per-run modes and their average.
  const auto& names = results.front().summaries;
  std::vector<std::string> header{"run"};
  for (const auto& s : names) header.push_back(s.name + ".mode");
  Eigen::MatrixXd modes(static_cast<Eigen::Index>(results.size()), static_cast<Eigen::Index>(names.size() + 1));
  for (std::size_t k = 0; k < results.size(); ++k) {
    modes(static_cast<Eigen::Index>(k), 0) = static_cast<double>(k + 1);
    for (std::size_t j = 0; j < names.size(); ++j)
      modes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j + 1)) = results[k].summaries[j].mode;
  }
  write_numeric_csv_file(in_dir(dir, "runs.csv"), header, modes);
  KeyValues summary;
  for (std::size_t j = 0; j < names.size(); ++j) {
    const double mean = modes.col(static_cast<Eigen::Index>(j + 1)).mean();
    summary.emplace_back(names[j].name + ".mean_mode", format_double(mean));
    out << names[j].name << " mean mode over " << results.size() << " runs " << format_double(mean) << "\n";
  }
  write_key_values_file(in_dir(dir, kSummaryFile), summary);
  auto manifest = manifest_header("fit");
  append(manifest, echo_options(sub, {{"data", o.data}}));
  for (std::size_t r = 0; r < datasets.size(); ++r)
    manifest.emplace_back("digest.data" + (datasets.size() == 1 ? std::string() : "." + std::to_string(r + 1)),
                          digest_file(datasets[r].second));
  for (std::size_t k = 0; k < job_dirs.size(); ++k)
    manifest.emplace_back("record.run." + std::to_string(k + 1), fs::relative(job_dirs[k], dir).string());
  manifest.emplace_back("record.wall_clock_seconds", format_double(seconds_since(start)));
  write_key_values_file(in_dir(dir, kManifestFile), manifest);
  return kSuccess;
}

// ---------------------------------------------------------------- compare

struct CompareOptions {
  std::vector<std::string> dirs;
};

int cmd_compare(const CompareOptions& o, std::ostream& out) {
  if (o.dirs.size() < 2) throw UsageError("compare needs at least two fit directories");
  struct Row {
    std::string label;
    CriteriaReport report;
  };
  std::vector<Row> rows;
  std::string digest;
  std::vector<std::int64_t> y;
  for (const auto& dir : o.dirs) {
    const auto manifest = read_key_values_file(in_dir(dir, kManifestFile));
    if (lookup(manifest, "subcommand") != "fit") throw IngestionError("'" + dir + "' is not a fit output directory");
    const auto d = lookup(manifest, "digest.data");
    const auto path = lookup(manifest, "config.data");
    if (!d || !path) throw IngestionError("'" + dir + "' has no single-dataset reference (pass a chain or replicate directory)");
    if (digest.empty()) {
      digest = *d;
      if (digest_file(*path) != digest) throw IngestionError("dataset '" + *path + "' changed since '" + dir + "' was fitted");
      y = read_dataset_csv_file(*path).y;
    } else if (*d != digest) {
      throw IngestionError("'" + dir + "' was fitted to different data (digest " + *d + " vs " + digest +
                           "); criteria are only comparable on identical data");
    }
    const auto stored = read_fit_outputs(dir);
    if (stored.mu_mean.size() != y.size()) throw IngestionError("'" + dir + "' does not match the dataset size");
    rows.push_back({lookup(manifest, "config.family").value_or("?") + " (" + dir + ")",
                    criteria(stored.log_likelihood, stored.mu_mean, y)});
  }

  // Ties share the mark, so identical fits print identical rows.
  auto best = [&](auto get) {
    double b = get(rows.front().report);
    for (const auto& r : rows) b = std::min(b, get(r.report));
    return b;
  };
  const double bd = best([](const CriteriaReport& c) { return c.dic; });
  const double bl = best([](const CriteriaReport& c) { return c.minus2_lpml; });
  const double bw = best([](const CriteriaReport& c) { return c.waic; });
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  auto cell = [](double v, bool mark) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v << (mark ? "*" : " ");
    return s.str();
  };
  out << std::left << std::setw(static_cast<int>(width)) << "model" << std::right << std::setw(14) << "DIC"
      << std::setw(14) << "-2*LPML" << std::setw(14) << "WAIC" << "\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& c = rows[k].report;
    out << std::left << std::setw(static_cast<int>(width)) << rows[k].label << std::right << std::setw(14)
        << cell(c.dic, c.dic == bd) << std::setw(14) << cell(c.minus2_lpml, c.minus2_lpml == bl) << std::setw(14)
        << cell(c.waic, c.waic == bw)
        << "\n";
  }
  out << "* best (lowest) value per column\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatio-temporal transformed GMRF models for areal counts", "tgmrf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TGMRF_VERSION);
  app.option_defaults()->always_capture_default();

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value file; command-line flags win");
  };

  LimitsOptions lo;
  auto* limits = app.add_subcommand("limits", "Dominance limits of each dependence parameter");
  add_config(limits);
  add_lattice_options(*limits, lo.lattice);
  limits->add_option("--axis", lo.axis, "Which limit to print")
      ->check(CLI::IsMember({"all", "spatial", "temporal", "spatiotemporal"}));

  SimulateOptions so;
  auto* simulate = app.add_subcommand("simulate", "Simulate a Poisson count dataset from a TGMRF");
  add_config(simulate);
  add_lattice_options(*simulate, so.lattice);
  simulate->add_option("--preset", so.truth.preset, "scenario1 | scenario2 | scenario3");
  simulate->add_option("--family", so.family, "gi | gsc | gsh | ln");
  simulate->add_option("--beta", so.truth.beta, "intercept,x1")->delimiter(',');
  simulate->add_option("--rho", so.truth.rho, "rho_s,rho_t,rho_st")->delimiter(',');
  simulate->add_option("--nu", so.nu, "Dispersion (default depends on the family)");
  simulate->add_option("--seed", so.seed, "Random seed");
  simulate->add_option("--output", so.output, "Output directory");

  FitOptions fo;
  auto* fitting = app.add_subcommand("fit", "Fit a TGMRF model by MCMC");
  add_config(fitting);
  add_lattice_options(*fitting, fo.lattice);
  fitting->add_option("--data", fo.data, "Dataset CSV (region,time,y,covariates...)");
  fitting->add_option("--family", fo.family, "gi | gsc | gsh | ln");
  fitting->add_option("--burn-in", fo.burn_in, "Burn-in iterations");
  fitting->add_option("--samples", fo.samples, "Kept draws");
  fitting->add_option("--thin", fo.thin, "Thinning interval");
  fitting->add_option("--seed", fo.seed, "Random seed");
  fitting->add_option("--nu-upper", fo.nu_upper, "Upper end of the flat prior on nu");
  fitting->add_option("--level", fo.level, "HPD interval probability");
  fitting->add_option("--time-varying", fo.time_varying, "Covariates given one coefficient per time slice")
      ->delimiter(',');
  fitting->add_option("--chains", fo.chains, "Independent chains (run concurrently)");
  fitting->add_option("--replicates", fo.replicates, "Simulated replicate datasets (needs --preset)");
  fitting->add_option("--threads", fo.threads, "Worker threads (0: all cores)");
  fitting->add_option("--preset", fo.truth.preset, "Simulate the data from a preset instead of --data");
  fitting->add_option("--beta", fo.truth.beta, "Simulation truth: intercept,x1")->delimiter(',');
  fitting->add_option("--rho", fo.truth.rho, "Simulation truth: rho_s,rho_t,rho_st")->delimiter(',');
  fitting->add_option("--truth-family", fo.truth_family, "Family of the simulated data (default: --family)");
  fitting->add_option("--truth-nu", fo.truth_nu, "Dispersion of the simulated data");
  fitting->add_option("--output", fo.output, "Output directory");

  CompareOptions co;
  auto* compare = app.add_subcommand("compare", "Compare fits by DIC, -2*LPML and WAIC");
  compare->add_option("dirs", co.dirs, "Fit output directories")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    for (CLI::App* sub : {limits, simulate, fitting})
      if (sub->parsed() && !config_path.empty()) apply_config(*sub, config_path);
    if (limits->parsed()) return cmd_limits(lo, out);
    if (simulate->parsed()) return cmd_simulate(*simulate, so, out);
    if (fitting->parsed()) return cmd_fit(*fitting, fo, out, err);
    return cmd_compare(co, out);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IngestionError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace tgmrf::cli
