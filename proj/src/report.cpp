#include "ruledmin/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ruledmin/catalog.hpp"
#include "ruledmin/error.hpp"
#include "ruledmin/family.hpp"
#include "ruledmin/ruled.hpp"
#include "ruledmin/surface.hpp"

namespace ruledmin {

namespace {

using nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': " + value);
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for '" + key + "': " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ConfigError("invalid boolean for '" + key + "': " + value);
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const long long x = parse_int(key, value);
  if (x < 1) throw ConfigError("'" + key + "' must be at least 1");
  return static_cast<std::size_t>(x);
}

std::string theta_label(double theta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", theta);
  return buf;
}

ordered_json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return report_round(x);
}

CheckRecord check_le(std::string id, std::string anchor, double measured, double tolerance) {
  CheckRecord c;
  c.id = std::move(id);
  c.anchor = std::move(anchor);
  c.measured = measured;
  c.tolerance = tolerance;
  c.pass = std::isfinite(measured) && measured <= tolerance;
  return c;
}

CheckRecord check_ge(std::string id, std::string anchor, double measured, double threshold) {
  CheckRecord c = check_le(std::move(id), std::move(anchor), measured, threshold);
  c.pass = std::isfinite(measured) && measured >= threshold;
  return c;
}

template <class T>
std::vector<T> collect(std::size_t count, int threads, const std::function<T(std::size_t)>& f) {
  std::vector<T> out(count);
  parallel_for(count, threads, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int expected_rank(int n) { return n == 3 ? 3 : 4; }

// |alpha|^2 predicted by the shape-operator entries from K, h, phi and V, W.
double norm_from_invariants(const AdaptedFrameData& f, const ShapeData& d, const ConePoint& cp) {
  const double om2 = d.omega * d.omega;
  const double vw = f.a(1) * f.a(1) + f.a(2) * f.a(2) + f.b(1) * f.b(1) + f.b(2) * f.b(2);
  const double phi2 = d.phi[0] * d.phi[0] + d.phi[1] * d.phi[1];
  const double h2 = d.h[0] * d.h[0] + d.h[1] * d.h[1];
  return (2.0 * (1.0 - f.gauss_curvature) + 4.0 * h2 + 4.0 * (phi2 + cp.s * cp.s * vw) / om2) / om2;
}

}  // namespace

void RunConfig::validate() const {
  const std::map<std::string, double> tols{{"jet", tol.jet},           {"lin", tol.lin},
                                           {"frame", tol.frame},       {"minimality", tol.minimality},
                                           {"rank", tol.rank},         {"isotropy", tol.isotropy},
                                           {"slice", tol.slice},       {"loop_closure", tol.loop_closure}};
  for (const auto& [name, value] : tols)
    if (!(value > 0.0)) throw ConfigError("tolerance '" + name + "' must be positive");
  if (samples < 1 || oracle_samples < 1 || equivariance_points < 1)
    throw ConfigError("sample counts must be at least 1");
  if (grid_u < 2 || grid_v < 2) throw ConfigError("grid needs at least 2 x 2 nodes");
  if (substeps < 1) throw ConfigError("substeps must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (thetas.empty()) throw ConfigError("theta list is empty");
}

std::vector<double> parse_theta_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double("theta", item));
  }
  if (out.empty()) throw ConfigError("theta list is empty");
  return out;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key), value = trim(raw_value);
  if (key == "surface") c.surface = value;
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "samples") c.samples = parse_count(key, value);
  else if (key == "oracle_samples") c.oracle_samples = parse_count(key, value);
  else if (key == "theta") c.thetas = parse_theta_list(value);
  else if (key == "grid") {
    const auto x = value.find('x');
    if (x == std::string::npos) throw ConfigError("grid must look like 64x64");
    c.grid_u = static_cast<int>(parse_int(key, value.substr(0, x)));
    c.grid_v = static_cast<int>(parse_int(key, value.substr(x + 1)));
  } else if (key == "substeps") c.substeps = static_cast<int>(parse_int(key, value));
  else if (key == "integrate") c.integrate = parse_bool(key, value);
  else if (key == "equivariance") c.equivariance = parse_bool(key, value);
  else if (key == "equivariance_theta") c.equivariance_theta = parse_double(key, value);
  else if (key == "equivariance_points") c.equivariance_points = parse_count(key, value);
  else if (key == "output") c.output = value;
  else if (key == "csv") c.csv = value;
  else if (key == "threads") c.threads = static_cast<int>(parse_int(key, value));
  else if (key == "tol.jet") c.tol.jet = parse_double(key, value);
  else if (key == "tol.lin") c.tol.lin = parse_double(key, value);
  else if (key == "tol.frame") c.tol.frame = parse_double(key, value);
  else if (key == "tol.minimality") c.tol.minimality = parse_double(key, value);
  else if (key == "tol.rank") c.tol.rank = parse_double(key, value);
  else if (key == "tol.isotropy") c.tol.isotropy = parse_double(key, value);
  else if (key == "tol.slice") c.tol.slice = parse_double(key, value);
  else if (key == "tol.loop_closure") c.tol.loop_closure = parse_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

int threads_from_env(int fallback) {
  const char* env = std::getenv("RULEDMIN_THREADS");
  if (!env) return fallback;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1 || n > 1024) return fallback;
  return static_cast<int>(n);
}

double report_round(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& f) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

bool Report::all_as_expected() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.as_expected(); });
}

int exit_code(const Report& report) { return report.all_as_expected() ? 0 : 1; }

std::string Report::to_json() const {
  ordered_json j;
  j["schema"] = "1";
  j["command"] = command;
  j["surface"] = config.surface;
  j["seed"] = config.seed;
  ordered_json cfg;
  cfg["samples"] = config.samples;
  cfg["oracle_samples"] = config.oracle_samples;
  ordered_json th = ordered_json::array();
  for (double t : config.thetas) th.push_back(number(t));
  cfg["thetas"] = th;
  cfg["grid"] = std::to_string(config.grid_u) + "x" + std::to_string(config.grid_v);
  cfg["substeps"] = config.substeps;
  cfg["integrate"] = config.integrate;
  cfg["equivariance"] = config.equivariance;
  ordered_json tol;
  tol["frame"] = number(config.tol.frame);
  tol["isotropy"] = number(config.tol.isotropy);
  tol["jet"] = number(config.tol.jet);
  tol["lin"] = number(config.tol.lin);
  tol["loop_closure"] = number(config.tol.loop_closure);
  tol["minimality"] = number(config.tol.minimality);
  tol["rank"] = number(config.tol.rank);
  tol["slice"] = number(config.tol.slice);
  cfg["tolerances"] = tol;
  j["config"] = cfg;
  ordered_json env;
  env["library"] = "ruledmin";
  env["version"] = "0.1.0";
  env["threads"] = config.threads;
  j["environment"] = env;

  std::vector<const CheckRecord*> sorted;
  for (const auto& c : checks) sorted.push_back(&c);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const CheckRecord* a, const CheckRecord* b) { return a->id < b->id; });
  ordered_json arr = ordered_json::array();
  for (const CheckRecord* c : sorted) {
    ordered_json r;
    r["id"] = c->id;
    r["anchor"] = c->anchor;
    r["measured"] = number(c->measured);
    r["tolerance"] = number(c->tolerance);
    r["pass"] = c->pass;
    if (!c->expected) r["expected"] = false;
    if (!c->details.empty()) {
      ordered_json d;
      for (const auto& [k, v] : c->details) d[k] = number(v);
      r["details"] = d;
    }
    arr.push_back(r);
  }
  j["checks"] = arr;
  ordered_json sk = ordered_json::object();
  for (const auto& [k, v] : skipped) sk[k] = v;
  j["skipped"] = sk;
  ordered_json notes_j = ordered_json::object();
  for (const auto& [k, v] : notes) notes_j[k] = number(v);
  j["notes"] = notes_j;
  j["all_pass"] = all_as_expected();
  return j.dump(2) + "\n";
}

Report cmd_surface_verify(const RunConfig& config) {
  config.validate();
  Report rep;
  rep.command = "surface-verify";
  rep.config = config;
  const CatalogEntry entry = load_entry(config.surface, false);
  const SurfaceModel& model = entry.model;
  const Tolerances& tol = config.tol;
  const FlagVerification ver = verify_flags(model, entry.declared, 24, config.seed, tol);

  auto flags = check_le("catalog.flags", "declared flags re-measured on a seeded sample",
                        static_cast<double>(ver.mismatches.size()), 0.0);
  for (const auto& [k, v] : ver.residuals) flags.details[k] = v;
  rep.add(flags);
  if (entry.control) rep.notes["control_entry"] = 1.0;

  const auto pts = sample_domain(model.domain(), config.samples, config.seed, 0.05);
  const auto minimality = collect<double>(pts.size(), config.threads, [&](std::size_t i) {
    try {
      return second_form(model, pts[i], tol).minimality_residual;
    } catch (const GeometryError&) {
      return kNaN;
    }
  });
  double min_max = 0.0;
  for (double m : minimality) min_max = std::max(min_max, std::isfinite(m) ? m : 1.0);
  rep.add(check_le("surface.minimality", "alpha(e1,e1) + alpha(e2,e2) = 0", min_max, tol.minimality));

  const IsotropyReport iso = is_one_isotropic(model, pts, tol);
  auto iso_check = check_le("surface.isotropy", "kappa = mu (circular first curvature ellipse)", iso.max_defect,
                            tol.isotropy);
  iso_check.expected = entry.declared.one_isotropic;
  double mu_max = 0.0, kappa_min = 1e300;
  for (const auto& p : iso.points) {
    mu_max = std::max(mu_max, p.mu);
    kappa_min = std::min(kappa_min, p.kappa);
  }
  iso_check.details["mu_max"] = mu_max;
  iso_check.details["kappa_min"] = kappa_min;
  if (entry.control && !iso_check.pass) rep.notes["control_isotropy_failed"] = 1.0;
  rep.add(iso_check);

  if (entry.declared.flat) {
    double kmax = 0.0;
    for (const auto& p : pts) kmax = std::max(kmax, std::abs(intrinsic_curvature(model, p)));
    rep.add(check_le("surface.flatness", "K = 0", kmax, 1e-8));
  }

  if (!entry.declared.one_isotropic) {
    for (const char* id : {"surface.conn", "surface.gauss", "surface.omegas", "surface.ricci"})
      rep.skipped[id] = "adapted frame requires a 1-isotropic surface";
    return rep;
  }

  struct Res {
    StructureResiduals r;
    bool ok = false;
  };
  const auto res = collect<Res>(pts.size(), config.threads, [&](std::size_t i) {
    try {
      return Res{structure_residuals(adapted_frame(model, pts[i], tol)), true};
    } catch (const GeometryError&) {
      return Res{};
    }
  });
  double conn = 0.0, omegas = 0.0, gauss = 0.0, ricci = 0.0;
  std::size_t failed = 0;
  for (const auto& r : res) {
    if (!r.ok) {
      ++failed;
      continue;
    }
    conn = std::max(conn, r.r.conn);
    omegas = std::max(omegas, r.r.omegas);
    gauss = std::max(gauss, std::abs(r.r.gauss));
    ricci = std::max(ricci, r.r.ricci_max());
  }
  auto c1 = check_le("surface.conn", "omega_45 = -(1/lambda) omega_35, omega_46 = -(1/lambda) omega_36", conn, 1e-6);
  c1.details["frame_failures"] = static_cast<double>(failed);
  if (failed) c1.pass = false;
  rep.add(c1);
  rep.add(check_le("surface.omegas", "lambda c = J a, lambda d = J b (component form)", omegas, 1e-6));
  rep.add(check_le("surface.gauss", "K = 1 - kappa^2 - mu^2", gauss, 1e-6));
  rep.add(check_le("surface.ricci", "normal curvature identities of the adapted frame", ricci, 1e-5));
  return rep;
}

Report cmd_ruled_verify(const RunConfig& config) {
  config.validate();
  Report rep;
  rep.command = "ruled-verify";
  rep.config = config;
  const CatalogEntry entry = load_entry(config.surface, false);
  if (!entry.declared.one_isotropic)
    throw GeometryError(ErrorKind::isotropy_required, "ruled-verify needs a 1-isotropic surface");
  const SurfaceModel& model = entry.model;
  const Tolerances& tol = config.tol;
  const int n = model.n();
  const auto cps = sample_cone_points(model, config.samples, config.seed, 0.05, tol);

  struct PointData {
    double trace = kNaN, radial = kNaN, homogeneity = kNaN, norm_sq = kNaN, h = kNaN;
    double length_printed = kNaN, norm_formula = kNaN, normalized_scalar = kNaN;
    int rank = -1;
    double genuine_fraction = kNaN;
  };
  const auto data = collect<PointData>(cps.size(), config.threads, [&](std::size_t i) {
    PointData pd;
    const ConePoint& cp = cps[i];
    try {
      const AdaptedFrameData f = adapted_frame(model, cp.p, tol);
      const ShapeData d = shape_operators(f, cp, tol);
      pd.trace = std::max(std::abs(d.a_xi.trace()), std::abs(d.a_eta.trace())) / d.omega;
      pd.radial = radial_nullity_residual(d, cp);
      const SecondFormInvariants inv = second_form_invariants(d, cp, tol);
      pd.norm_sq = inv.norm_sq;
      if (inv.normalized_scalar) pd.normalized_scalar = *inv.normalized_scalar;
      pd.rank = inv.rank;
      pd.h = std::max(std::abs(d.h[0]), std::abs(d.h[1]));
      pd.length_printed = length_identity(f, d, cp);
      pd.norm_formula = std::abs(norm_from_invariants(f, d, cp) - inv.norm_sq);
      const double r = 2.5;
      ConePoint scaled{r * cp.s, cp.p, r * cp.t};
      const double scaled_norm = second_form_invariants(shape_operators(f, scaled, tol), scaled, tol).norm_sq;
      pd.homogeneity = std::abs(scaled_norm * r * r - inv.norm_sq) / inv.norm_sq;
      if (n == 4) {
        int good = 0;
        for (int k = 0; k < 36; ++k) {
          const double psi = 2.0 * std::numbers::pi * k / 36.0;
          const Eigen::MatrixXd m = std::cos(psi) * d.a_xi + std::sin(psi) * d.a_eta;
          const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m / d.omega);
          const auto& sv = svd.singularValues();
          int rk = 0;
          for (Eigen::Index q = 0; q < sv.size(); ++q)
            if (sv[q] > tol.rank * sv[0]) ++rk;
          if (rk == 4) ++good;
        }
        pd.genuine_fraction = good / 36.0;
      }
    } catch (const GeometryError&) {
    }
    return pd;
  });

  double trace = 0.0, radial = 0.0, homog = 0.0, hmax = 0.0, formula = 0.0, genuine = 1.0;
  std::size_t rank_ok = 0, usable = 0;
  std::vector<double> norms, lengths, scalars;
  for (const auto& pd : data) {
    if (!std::isfinite(pd.norm_sq)) continue;
    ++usable;
    trace = std::max(trace, pd.trace);
    radial = std::max(radial, pd.radial);
    homog = std::max(homog, pd.homogeneity);
    hmax = std::max(hmax, pd.h);
    formula = std::max(formula, pd.norm_formula);
    if (pd.rank == expected_rank(n)) ++rank_ok;
    norms.push_back(pd.norm_sq);
    lengths.push_back(pd.length_printed);
    if (std::isfinite(pd.normalized_scalar)) scalars.push_back(pd.normalized_scalar);
    if (n == 4) genuine = std::min(genuine, pd.genuine_fraction);
  }
  if (usable < cps.size()) rep.skipped["ruled.points"] = std::to_string(cps.size() - usable) + " singular points";
  rep.add(check_le("ruled.trace", "tr A_xi = tr A_eta = 0", trace, 1e-10));
  rep.add(check_le("ruled.radial_nullity", "A (s d/ds + t d/dt) = 0", radial, 1e-8));
  rep.add(check_le("ruled.homogeneity", "|alpha|^2(r x) = |alpha|^2(x) / r^2", homog, 1e-6));
  auto rank = check_ge("ruled.rank", "rank of the shape operators = " + std::to_string(expected_rank(n)),
                       usable ? static_cast<double>(rank_ok) / static_cast<double>(usable) : 0.0, 0.99);
  rank.details["expected_rank"] = expected_rank(n);
  rep.add(rank);
  rep.add(check_le("ruled.norm_formula",
                   "|alpha|^2 = (2(1-K) + 4|h|^2 + 4(|phi|^2 + s^2(|V|^2+|W|^2))/Omega^2) / Omega^2", formula, 1e-9));
  if (n == 4) rep.add(check_ge("ruled.genuineness", "rank(cos psi A_xi + sin psi A_eta) = 4", genuine, 1.0));

  rep.notes["norm_sq_mean"] = mean_of(norms);
  rep.notes["norm_sq_std"] = stddev_of(norms);
  rep.notes["length_identity_mean"] = mean_of(lengths);
  if (!scalars.empty()) rep.notes["normalized_scalar_mean"] = mean_of(scalars);
  if (entry.declared.flat) {
    rep.add(check_le("ruled.norm_constancy", "|alpha_F|^2 constant on the slice", stddev_of(norms), 1e-6));
    rep.add(check_le("ruled.h_zero", "h_1 = h_2 = 0", hmax, 1e-6));
    rep.add(check_le("ruled.scalar_constancy", "normalized scalar curvature constant on the slice",
                     scalars.size() == usable ? stddev_of(scalars) : kNaN, 1e-6));
    rep.notes["norm_sq_published"] = 8.0;
    rep.notes["normalized_scalar_published"] = -1.0 / 3.0;
  }

  // Singular set on the slice and at the vertex.
  std::size_t singular = 0;
  for (const auto& cp : cps) singular += is_singular(model, cp, tol) ? 1 : 0;
  const bool vertex = is_singular(model, ConePoint{0.0, cps.front().p, Eigen::VectorXd::Zero(n - 2)}, tol);
  auto sing = check_le("ruled.singular_set", "singular points = vertex and s = 0 with v orthogonal to N_2",
                       static_cast<double>(singular) + (vertex ? 0.0 : 1.0), 0.0);
  sing.details["slice_singular"] = static_cast<double>(singular);
  sing.details["vertex_singular"] = vertex ? 1.0 : 0.0;
  rep.add(sing);

  // Closed form against the finite-difference oracle.
  const std::size_t m = std::min(config.oracle_samples, cps.size());
  const auto diffs = collect<double>(m, config.threads, [&](std::size_t i) {
    try {
      const ShapeData d = shape_operators(model, cps[i], tol);
      const FdShapeData fd = shape_operators_fd(model, cps[i], FdOptions{}, tol);
      return std::max((d.a_xi - fd.a_xi).cwiseAbs().maxCoeff(), (d.a_eta - fd.a_eta).cwiseAbs().maxCoeff());
    } catch (const GeometryError&) {
      return kNaN;
    }
  });
  double worst = 0.0;
  std::size_t skipped = 0;
  for (double x : diffs) {
    if (std::isfinite(x)) worst = std::max(worst, x);
    else ++skipped;
  }
  auto oracle = check_le("ruled.oracle", "shape operators: closed form = finite differences of G", worst, 1e-4);
  oracle.details["points"] = static_cast<double>(m - skipped);
  oracle.details["skipped"] = static_cast<double>(skipped);
  rep.add(oracle);
  return rep;
}

Report cmd_family_sweep(const RunConfig& config) {
  config.validate();
  Report rep;
  rep.command = "family-sweep";
  rep.config = config;
  const CatalogEntry entry = load_entry(config.surface, false);
  if (!entry.declared.one_isotropic)
    throw GeometryError(ErrorKind::isotropy_required, "family-sweep needs a 1-isotropic surface");
  const SurfaceModel& model = entry.model;
  const Tolerances& tol = config.tol;
  const int n = model.n();
  const int nc = n + 1;
  const auto cps = sample_cone_points(model, config.samples, config.seed, 0.05, tol);

  struct Base {
    AdaptedFrameData frame;
    ShapeData shape;
  };
  const auto bases = collect<Base>(cps.size(), config.threads, [&](std::size_t i) {
    AdaptedFrameData f = adapted_frame(model, cps[i].p, tol);
    ShapeData d = shape_operators(f, cps[i], tol);
    return Base{std::move(f), std::move(d)};
  });

  for (double theta : config.thetas) {
    const std::string tag = "@theta=" + theta_label(theta);
    struct Out {
      double printed = 0.0, consistent = 0.0, gauss = 0.0, isometry = 0.0, norm = 0.0, repeat = 0.0;
      int rank = 0;
    };
    const auto outs = collect<Out>(cps.size(), config.threads, [&](std::size_t i) {
      const Base& b = bases[i];
      const FamilyMember m = rotate_family(b.frame, b.shape, cps[i], theta, tol);
      Out o;
      for (int a = 0; a < nc; ++a)
        for (int c = 0; c < nc; ++c) {
          const FormsCheck fc =
              verify_forms_relation(b.shape, m, Eigen::VectorXd::Unit(nc, a), Eigen::VectorXd::Unit(nc, c));
          o.printed = std::max(o.printed, fc.printed_residual);
          o.consistent = std::max(o.consistent, fc.consistent_residual);
        }
      const auto r0 = curvature_tensor(b.shape.a_xi, b.shape.a_eta, b.shape.omega);
      const auto r1 = curvature_tensor(m.a_xi, m.a_eta, m.omega);
      for (std::size_t k = 0; k < r0.size(); ++k) o.gauss = std::max(o.gauss, std::abs(r0[k] - r1[k]));
      o.isometry = std::max({std::abs(m.xi.norm() - m.omega), std::abs(m.eta.norm() - m.omega),
                             std::abs(m.xi.dot(m.eta))});
      o.norm = std::abs(pair_norm_sq(m.a_xi, m.a_eta, m.omega) - pair_norm_sq(b.shape.a_xi, b.shape.a_eta,
                                                                             b.shape.omega));
      o.rank = stacked_rank(m.a_xi / m.omega, m.a_eta / m.omega, tol.rank);
      const FamilyMember half_turn = rotate_family(m, std::numbers::pi);
      o.repeat = std::max((half_turn.a_xi - m.a_xi).cwiseAbs().maxCoeff(),
                          (half_turn.a_eta - m.a_eta).cwiseAbs().maxCoeff()) / m.omega;
      return o;
    });
    Out worst;
    std::map<int, double> ranks;
    for (const auto& o : outs) {
      worst.printed = std::max(worst.printed, o.printed);
      worst.consistent = std::max(worst.consistent, o.consistent);
      worst.gauss = std::max(worst.gauss, o.gauss);
      worst.isometry = std::max(worst.isometry, o.isometry);
      worst.norm = std::max(worst.norm, o.norm);
      worst.repeat = std::max(worst.repeat, o.repeat);
      ranks[o.rank] += 1.0;
    }
    auto printed = check_le("family.forms" + tag,
                            "alpha_theta = Psi(R_{-theta} alpha + 2 kappa sin(theta/2) beta(J_{-theta/2} X, Y))",
                            worst.printed, 1e-8);
    printed.details["consistent_variant_residual"] = worst.consistent;
    rep.add(printed);
    rep.add(check_le("family.forms_consistent" + tag,
                     "alpha_theta = Psi(R_{-theta} alpha + 2 kappa sin(theta/2) beta'(J J_{-theta/2} X, Y))",
                     worst.consistent, 1e-8));
    rep.add(check_le("family.gauss" + tag, "R_theta(X,Y,Z,W) = R(X,Y,Z,W)", worst.gauss, 1e-8));
    rep.add(check_le("family.normal_isometry" + tag, "|xi_theta| = |eta_theta| = Omega, <xi_theta, eta_theta> = 0",
                     worst.isometry, 1e-9));
    rep.add(check_le("family.norm" + tag, "|alpha_theta|^2 = |alpha|^2", worst.norm, 1e-9));
    for (const auto& [r, count] : ranks) rep.notes["rank_histogram" + tag + ".rank=" + std::to_string(r)] = count;
    rep.notes["half_turn_difference" + tag] = worst.repeat;
  }

  if (config.integrate) {
    const GridSpec grid{config.grid_u, config.grid_v, config.substeps};
    for (double theta : config.thetas) {
      const std::string tag = "@theta=" + theta_label(theta);
      try {
        const FamilyGrid g = integrate_surface_family(model, theta, grid, tol);
        const FamilyIntegrationReport ir = check_integrated_family(model, g, 16, config.seed, tol);
        rep.add(check_le("family.loop_closure" + tag, "integrated frame closes around every cell",
                         ir.max_loop_closure, tol.loop_closure));
        rep.add(check_le("family.metric" + tag, "first fundamental form of g_theta = that of g",
                         ir.max_metric_error, 1e-6));
        auto ell = check_le("family.ellipse" + tag, "curvature ellipse of g_theta: circle of radius kappa",
                            std::max(ir.max_kappa_error, ir.max_circularity), 1e-5);
        ell.details["kappa_error"] = ir.max_kappa_error;
        ell.details["circularity"] = ir.max_circularity;
        rep.add(ell);
        if (theta == 0.0)
          rep.add(check_le("family.identity" + tag, "g_0 = g", ir.base_deviation, 1e-7));
      } catch (const GeometryError& e) {
        if (e.kind() != ErrorKind::integration_diverged) throw;
        rep.add(check_le("family.loop_closure" + tag, "integrated frame closes around every cell", kNaN,
                         tol.loop_closure));
      }
      // Integrated oracle on a few cone points.
      double worst = 0.0, consistent = 0.0, printed = 0.0;
      const std::size_t m = std::min<std::size_t>(config.oracle_samples, cps.size());
      for (std::size_t i = 0; i < m; ++i) {
        try {
          const IntegratedShapeData od = family_shape_operators_integrated(model, theta, cps[i], 1e-2, tol);
          const FamilyMember mem = rotate_family(bases[i].frame, bases[i].shape, cps[i], theta, tol);
          worst = std::max({worst, (od.a_xi - mem.a_xi).cwiseAbs().maxCoeff(),
                            (od.a_eta - mem.a_eta).cwiseAbs().maxCoeff()});
          for (int a = 0; a < nc; ++a)
            for (int c = 0; c < nc; ++c) {
              const FormsCheck fc = verify_forms_relation(bases[i].shape, theta, od.a_xi, od.a_eta,
                                                          Eigen::VectorXd::Unit(nc, a), Eigen::VectorXd::Unit(nc, c));
              consistent = std::max(consistent, fc.consistent_residual);
              printed = std::max(printed, fc.printed_residual);
            }
        } catch (const GeometryError&) {
          rep.skipped["family.integrated_oracle" + tag] = "patch stencil left the domain at some points";
        }
      }
      auto oc = check_le("family.integrated_oracle" + tag, "rotated shape operators = integrated G_theta", worst,
                         1e-4);
      oc.details["forms_consistent_residual"] = consistent;
      oc.details["forms_printed_residual"] = printed;
      rep.add(oc);
    }
  }

  if (config.equivariance) {
    const std::string tag = "@theta=" + theta_label(config.equivariance_theta);
    if (!measured_pseudoholomorphic(model, tol)) {
      rep.skipped["family.equivariance" + tag] = "surface is not pseudoholomorphic";
    } else {
      const FamilyGrid g = integrate_surface_family(model, config.equivariance_theta,
                                                    GridSpec{config.grid_u, config.grid_v, config.substeps}, tol);
      const EquivarianceReport er = equivariance_check(model, g, config.equivariance_points, config.seed,
                                                       std::nullopt, tol);
      const EquivarianceReport flipped = equivariance_check(model, g, config.equivariance_points, config.seed,
                                                            config.equivariance_theta, tol);
      auto ec = check_le("family.equivariance" + tag, "F_g o S_{-theta} congruent to F_theta", er.rms, 1e-4);
      ec.details["determinant"] = er.determinant;
      ec.details["opposite_rotation_rms"] = flipped.rms;
      rep.add(ec);
    }
  }
  return rep;
}

std::string export_csv_header(int n) {
  std::string h = "s,u,v";
  for (int k = 1; k <= n - 2; ++k) h += ",t" + std::to_string(k);
  return h + ",Omega,normSq,rank,singular";
}

ExportResult cmd_export(const RunConfig& config) {
  config.validate();
  const CatalogEntry entry = load_entry(config.surface, false);
  const SurfaceModel& model = entry.model;
  const Tolerances& tol = config.tol;
  const int n = model.n();
  const int nu = config.grid_u, nv = config.grid_v;
  const Domain& dom = model.domain();

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<ConePoint> cps;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      // Periodic directions skip the duplicate end node.
      const double a = dom.periodic_u ? static_cast<double>(i) / nu : static_cast<double>(i) / (nu - 1);
      const double b = dom.periodic_v ? static_cast<double>(j) / nv : static_cast<double>(j) / (nv - 1);
      Eigen::VectorXd x(n - 1);
      do {
        for (int k = 0; k < n - 1; ++k) x[k] = unit(rng);
      } while (x.norm() < 0.1 || x.norm() > 1.0);
      x.normalize();
      cps.push_back(ConePoint{x[0], dom.at(a, b), x.tail(n - 2)});
    }

  auto fmt = [](double x) {
    if (!std::isfinite(x)) return std::string("nan");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::string(buf);
  };
  const auto rows = collect<std::string>(cps.size(), config.threads, [&](std::size_t i) {
    const ConePoint& cp = cps[i];
    std::string row = fmt(cp.s) + "," + fmt(cp.p.u) + "," + fmt(cp.p.v);
    for (int k = 0; k < n - 2; ++k) row += "," + fmt(cp.t[k]);
    try {
      const AdaptedFrameData f = adapted_frame(model, cp.p, tol);
      const bool sing = is_singular(f, cp, tol);
      const double om = omega_norm(f, cp);
      if (sing) return row + "," + fmt(om) + ",nan,0,1";
      const SecondFormInvariants inv = second_form_invariants(shape_operators(f, cp, tol), cp, tol);
      return row + "," + fmt(om) + "," + fmt(inv.norm_sq) + "," + std::to_string(inv.rank) + ",0";
    } catch (const GeometryError&) {
      return row + ",nan,nan,0,1";
    }
  });
  ExportResult out;
  out.csv = export_csv_header(n) + "\n";
  std::size_t singular = 0;
  for (const auto& r : rows) {
    out.csv += r + "\n";
    if (r.back() == '1') ++singular;
  }
  if (!config.csv.empty()) {
    std::ofstream f(config.csv, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + config.csv);
    f << out.csv;
  }
  out.report.command = "export";
  out.report.config = config;
  out.report.notes["rows"] = static_cast<double>(rows.size());
  out.report.notes["singular_rows"] = static_cast<double>(singular);
  out.report.add(check_le("export.rows", "one row per grid node",
                          std::abs(static_cast<double>(rows.size()) - static_cast<double>(nu) * nv), 0.0));
  return out;
}

std::string catalog_manifest_json(std::uint64_t seed) {
  auto flags_json = [](const SurfaceFlags& f) {
    ordered_json j;
    j["minimal"] = f.minimal;
    j["substantial"] = f.substantial;
    j["one_isotropic"] = f.one_isotropic;
    j["pseudoholomorphic"] = f.pseudoholomorphic;
    j["regular"] = f.regular;
    j["flat"] = f.flat;
    return j;
  };
  ordered_json entries = ordered_json::array();
  for (const auto& name : catalog_names()) {
    CatalogEntry e = load_entry(name, false);
    e.verification = verify_flags(e.model, e.declared, 24, seed);
    ordered_json j;
    j["name"] = e.name;
    j["ambient_dim"] = e.model.ambient_dim();
    j["periodic_u"] = e.model.domain().periodic_u;
    j["periodic_v"] = e.model.domain().periodic_v;
    j["control"] = e.control;
    j["provenance"] = e.provenance;
    j["declared"] = flags_json(e.declared);
    j["measured"] = flags_json(e.verification.computed);
    ordered_json res;
    for (const auto& [k, v] : e.verification.residuals) res[k] = number(v);
    j["residuals"] = res;
    j["mismatches"] = e.verification.mismatches;
    entries.push_back(j);
  }
  ordered_json out;
  out["schema"] = "1";
  out["seed"] = seed;
  out["entries"] = entries;
  return out.dump(2) + "\n";
}

}  // namespace ruledmin
