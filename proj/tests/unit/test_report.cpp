#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "ruledmin/error.hpp"
#include "ruledmin/report.hpp"

using namespace ruledmin;

namespace {

RunConfig small(const std::string& surface) {
  RunConfig c;
  c.surface = surface;
  c.samples = 40;
  c.oracle_samples = 4;
  return c;
}

const CheckRecord* find(const Report& r, const std::string& id) {
  for (const auto& c : r.checks)
    if (c.id == id) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("settings and config files") {
  RunConfig c;
  apply_setting(c, " surface ", " boruvka-sphere ");
  apply_setting(c, "theta", "0, 0.25,3");
  apply_setting(c, "grid", "32x16");
  apply_setting(c, "tol.rank", "1e-5");
  apply_setting(c, "integrate", "true");
  CHECK(c.surface == "boruvka-sphere");
  CHECK(c.thetas == std::vector<double>{0.0, 0.25, 3.0});
  CHECK(c.grid_u == 32);
  CHECK(c.grid_v == 16);
  CHECK(c.tol.rank == 1e-5);
  CHECK(c.integrate);
  CHECK_THROWS_AS(apply_setting(c, "colour", "blue"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "seed", "seven"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "samples", "0"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "grid", "64"), ConfigError);

  const std::string path = "ruledmin_test_config.txt";
  {
    std::ofstream f(path);
    f << "# comment\nsurface = equilateral-torus\nseed = 42  # trailing\n\nsamples = 7\ntol.isotropy = 2e-6\n";
  }
  const RunConfig loaded = load_config_file(path);
  CHECK(loaded.seed == 42);
  CHECK(loaded.samples == 7);
  CHECK(loaded.tol.isotropy == 2e-6);
  {
    std::ofstream f(path);
    f << "surface\n";
  }
  CHECK_THROWS_AS(load_config_file(path), ConfigError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config_file("does-not-exist.cfg"), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.tol.minimality = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.tol.loop_closure = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.thetas.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_theta_list(" , "), ConfigError);
}

TEST_CASE("thread count from the environment") {
  ::setenv("RULEDMIN_THREADS", "3", 1);
  CHECK(threads_from_env(1) == 3);
  ::setenv("RULEDMIN_THREADS", "zero", 1);
  CHECK(threads_from_env(2) == 2);
  ::unsetenv("RULEDMIN_THREADS");
  CHECK(threads_from_env(5) == 5);
}

TEST_CASE("fixed precision and parallel loop") {
  CHECK(report_round(0.1 + 0.2) == 0.3);
  CHECK(report_round(1.0 / 3.0) == 0.333333333333);
  CHECK(report_round(0.0) == 0.0);
  std::vector<int> hits(97, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += static_cast<int>(i); });
  for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == static_cast<int>(i));
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 7) throw std::runtime_error("boom");
  }));
}

TEST_CASE("surface-verify on the torus and the control") {
  RunConfig c = small("equilateral-torus");
  c.seed = 7;
  const Report torus = cmd_surface_verify(c);
  CHECK(exit_code(torus) == 0);
  for (const char* id : {"surface.minimality", "surface.isotropy", "surface.conn", "surface.omegas", "surface.ricci",
                         "surface.flatness", "catalog.flags"})
    CHECK(find(torus, id) != nullptr);

  const Report control = cmd_surface_verify(small("clifford-control"));
  const CheckRecord* iso = find(control, "surface.isotropy");
  REQUIRE(iso != nullptr);
  CHECK_FALSE(iso->pass);
  CHECK_FALSE(iso->expected);
  CHECK(control.notes.at("control_isotropy_failed") == 1.0);
  CHECK(control.skipped.count("surface.conn") == 1);
  CHECK(exit_code(control) == 0);

  CHECK_THROWS_AS(cmd_surface_verify(small("nope")), GeometryError);
}

TEST_CASE("ruled-verify reports the measured constant") {
  const Report r = cmd_ruled_verify(small("equilateral-torus"));
  CHECK(exit_code(r) == 0);
  CHECK(std::abs(r.notes.at("norm_sq_mean") - 6.0) < 1e-9);
  CHECK(r.notes.at("norm_sq_published") == 8.0);
  CHECK(std::abs(r.notes.at("length_identity_mean") - 8.0) < 1e-9);
  CHECK(find(r, "ruled.norm_constancy")->pass);
  CHECK(find(r, "ruled.rank")->details.at("expected_rank") == 3.0);
  CHECK_THROWS_AS(cmd_ruled_verify(small("clifford-control")), GeometryError);
}

TEST_CASE("family sweep records every angle") {
  RunConfig c = small("boruvka-sphere");
  c.thetas = {0.0, 0.5, 4.0};
  const Report r = cmd_family_sweep(c);
  for (const char* t : {"0", "0.5", "4"}) {
    CAPTURE(t);
    const std::string tag = std::string("@theta=") + t;
    CHECK(find(r, "family.forms_consistent" + tag)->pass);
    CHECK(find(r, "family.gauss" + tag)->pass);
    CHECK(find(r, "family.normal_isometry" + tag)->pass);
    CHECK(find(r, "family.norm" + tag)->pass);
    CHECK(r.notes.count("half_turn_difference" + tag) == 1);
  }
  CHECK(find(r, "family.forms@theta=0")->measured == 0.0);
  CHECK(find(r, "family.gauss@theta=0")->measured == 0.0);
}

TEST_CASE("reports are deterministic and well formed") {
  RunConfig c = small("boruvka-sphere");
  c.seed = 99;
  const std::string a = cmd_ruled_verify(c).to_json();
  const std::string b = cmd_ruled_verify(c).to_json();
  CHECK(a == b);
  c.threads = 3;
  RunConfig single = c;
  single.threads = 1;
  const auto strip = [](std::string s) {
    auto j = nlohmann::json::parse(s);
    j.erase("environment");
    return j.dump();
  };
  CHECK(strip(cmd_ruled_verify(c).to_json()) == strip(cmd_ruled_verify(single).to_json()));

  const auto j = nlohmann::json::parse(a);
  CHECK(j["schema"] == "1");
  CHECK(j["seed"] == 99);
  std::string previous;
  for (const auto& check : j["checks"]) {
    CHECK(check.contains("anchor"));
    CHECK_FALSE(check["anchor"].get<std::string>().empty());
    CHECK(check["id"].get<std::string>() >= previous);
    previous = check["id"].get<std::string>();
  }
}

TEST_CASE("export grid") {
  RunConfig c = small("boruvka-sphere");
  c.grid_u = 4;
  c.grid_v = 5;
  const ExportResult e = cmd_export(c);
  CHECK(export_csv_header(4) == "s,u,v,t1,t2,Omega,normSq,rank,singular");
  CHECK(e.csv.rfind("s,u,v,t1,t2,Omega,normSq,rank,singular\n", 0) == 0);
  CHECK(std::count(e.csv.begin(), e.csv.end(), '\n') == 21);
  CHECK(e.csv == cmd_export(c).csv);
  CHECK(exit_code(e.report) == 0);
  CHECK(export_csv_header(3) == "s,u,v,t1,Omega,normSq,rank,singular");
}

TEST_CASE("catalog manifest") {
  const auto j = nlohmann::json::parse(catalog_manifest_json(1));
  CHECK(j["entries"].size() == 4);
  for (const auto& e : j["entries"]) {
    CHECK(e["mismatches"].empty());
    CHECK(e["declared"] == e["measured"]);
  }
}
