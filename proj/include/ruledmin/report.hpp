#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ruledmin/config.hpp"

namespace ruledmin {

/// Everything a command needs; mirrors the key = value config file.
struct RunConfig {
  std::string surface = "equilateral-torus";
  std::uint64_t seed = 1;
  std::size_t samples = 100;
  std::size_t oracle_samples = 20;
  std::vector<double> thetas{0.0, 0.5, 1.0, 1.5};
  int grid_u = 64;
  int grid_v = 64;
  int substeps = 12;
  bool integrate = false;
  bool equivariance = false;
  double equivariance_theta = 0.7853981633974483;
  std::size_t equivariance_points = 500;
  std::string output;  // report path, empty for stdout
  std::string csv;     // export path
  int threads = 1;
  Tolerances tol;

  /// Throws ConfigError on a non-positive tolerance or empty sample count.
  void validate() const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Apply one `key = value` setting. Unknown keys throw ConfigError.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
/// Read a config file of `key = value` lines; `#` starts a comment.
RunConfig load_config_file(const std::string& path, RunConfig base = {});
/// Thread count from RULEDMIN_THREADS, or `fallback` when unset or invalid.
int threads_from_env(int fallback = 1);
std::vector<double> parse_theta_list(const std::string& text);

struct CheckRecord {
  std::string id;
  std::string anchor;  // identity or property the check measures
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  /// Controls carry checks that are meant to fail.
  bool expected = true;
  std::map<std::string, double> details;

  bool as_expected() const { return pass == expected; }
};

struct Report {
  std::string command;
  RunConfig config;
  std::vector<CheckRecord> checks;
  std::map<std::string, std::string> skipped;  // check id -> reason
  std::map<std::string, double> notes;

  void add(CheckRecord c) { checks.push_back(std::move(c)); }
  bool all_as_expected() const;
  /// Schema "1", checks sorted by id, numbers rounded to 12 significant digits.
  std::string to_json() const;
};

/// 0 when every check behaves as expected, 1 otherwise.
int exit_code(const Report& report);

/// Round to 12 significant digits (the report's fixed precision).
double report_round(double x);

/// Run f(i) for i < count on `threads` workers; results are stored by index.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& f);

Report cmd_surface_verify(const RunConfig& config);
Report cmd_ruled_verify(const RunConfig& config);
Report cmd_family_sweep(const RunConfig& config);

/// Writes the sample grid CSV to config.csv (or returns it when empty) and a summary report.
struct ExportResult {
  std::string csv;
  Report report;
};
ExportResult cmd_export(const RunConfig& config);

/// Catalog manifest: name, declared and measured flags, residuals, provenance.
std::string catalog_manifest_json(std::uint64_t seed = 1);

/// Header of the sample-grid CSV for codimension parameter n.
std::string export_csv_header(int n);

}  // namespace ruledmin
