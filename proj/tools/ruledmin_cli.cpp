#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ruledmin/error.hpp"
#include "ruledmin/report.hpp"

namespace {

using namespace ruledmin;

struct Flags {
  std::string config_path;
  std::string surface;
  long long seed = -1;
  long long samples = -1;
  std::string theta;
  std::string grid;
  std::string output;
  std::string csv;
  bool equivariance = false;
  bool integrate = false;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file");
  cmd->add_option("--surface", f.surface, "catalog entry");
  cmd->add_option("--seed", f.seed, "sampling seed");
  cmd->add_option("--samples", f.samples, "number of sample points");
  cmd->add_option("--output", f.output, "report path (stdout when omitted)");
  cmd->add_option("--set", f.settings, "extra key=value setting, repeatable");
}

RunConfig build_config(const Flags& f) {
  RunConfig c;
  c.threads = threads_from_env(1);
  if (!f.config_path.empty()) c = load_config_file(f.config_path, c);
  if (!f.surface.empty()) c.surface = f.surface;
  if (f.seed >= 0) c.seed = static_cast<std::uint64_t>(f.seed);
  if (f.samples == 0 || f.samples < -1) throw ConfigError("--samples must be at least 1");
  if (f.samples > 0) c.samples = static_cast<std::size_t>(f.samples);
  if (!f.theta.empty()) c.thetas = parse_theta_list(f.theta);
  if (!f.grid.empty()) apply_setting(c, "grid", f.grid);
  if (!f.output.empty()) c.output = f.output;
  if (!f.csv.empty()) c.csv = f.csv;
  if (f.equivariance) c.equivariance = true;
  if (f.integrate) c.integrate = true;
  for (const auto& kv : f.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
    apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.validate();
  return c;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ruled minimal submanifolds from 1-isotropic surfaces"};
  app.require_subcommand(1);
  Flags f;

  auto* surface = app.add_subcommand("surface-verify", "minimality, isotropy and structure equations");
  add_common(surface, f);
  auto* ruled = app.add_subcommand("ruled-verify", "cone shape operators against the oracle");
  add_common(ruled, f);
  auto* family = app.add_subcommand("family-sweep", "associated family over a list of angles");
  add_common(family, f);
  family->add_option("--theta", f.theta, "comma-separated angles");
  family->add_option("--grid", f.grid, "integration grid, e.g. 64x64");
  family->add_flag("--integrate", f.integrate, "integrate g_theta on the grid");
  family->add_flag("--equivariance", f.equivariance, "Procrustes congruence test");
  auto* exporter = app.add_subcommand("export", "sample-grid CSV and summary report");
  add_common(exporter, f);
  exporter->add_option("--grid", f.grid, "grid size, e.g. 64x64");
  exporter->add_option("--csv", f.csv, "CSV path (stdout when omitted)");
  auto* catalog = app.add_subcommand("catalog", "catalog manifest");
  catalog->add_option("--seed", f.seed, "sampling seed");
  catalog->add_option("--output", f.output, "manifest path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config = build_config(f);
    if (catalog->parsed()) {
      emit(catalog_manifest_json(config.seed), config.output);
      return 0;
    }
    Report report;
    if (surface->parsed()) report = cmd_surface_verify(config);
    else if (ruled->parsed()) report = cmd_ruled_verify(config);
    else if (family->parsed()) report = cmd_family_sweep(config);
    else {
      ExportResult res = cmd_export(config);
      if (config.csv.empty()) {
        std::cout << res.csv;
        if (config.output.empty()) return exit_code(res.report);
      }
      report = std::move(res.report);
    }
    emit(report.to_json(), config.output);
    return exit_code(report);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const GeometryError& e) {
    std::cerr << e.what() << "\n";
    const bool usage = e.kind() == ErrorKind::unknown_surface || e.kind() == ErrorKind::isotropy_required ||
                       e.kind() == ErrorKind::invalid_parameters || e.kind() == ErrorKind::invalid_argument;
    return usage ? 2 : 1;
  }
}
