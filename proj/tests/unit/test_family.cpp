#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ruledmin/catalog.hpp"
#include "ruledmin/error.hpp"
#include "ruledmin/family.hpp"

using namespace ruledmin;

namespace {

constexpr double kPi = std::numbers::pi;

struct Base {
  AdaptedFrameData frame;
  ShapeData shape;
  ConePoint cp;
};

std::vector<Base> bases(const SurfaceModel& m, std::size_t count, std::uint64_t seed) {
  std::vector<Base> out;
  for (const auto& cp : sample_cone_points(m, count, seed)) {
    AdaptedFrameData f = adapted_frame(m, cp.p);
    ShapeData d = shape_operators(f, cp);
    out.push_back({std::move(f), std::move(d), cp});
  }
  return out;
}

double scalar_gap(const FamilyMember& x, const FamilyMember& y) {
  double g = 0.0;
  for (int i = 0; i < 2; ++i)
    g = std::max({g, std::abs(x.a[i] - y.a[i]), std::abs(x.b[i] - y.b[i]), std::abs(x.phi[i] - y.phi[i]),
                  std::abs(x.h[i] - y.h[i])});
  return g;
}

Eigen::VectorXd unit(int size, int k) { return Eigen::VectorXd::Unit(size, k); }

}  // namespace

TEST_CASE("rotation operators") {
  for (double theta : {0.0, 0.4, 2.0, 5.5}) {
    const RotationOperators r = RotationOperators::at(theta, 4);
    CHECK((r.reflection * r.reflection - Eigen::Matrix2d::Identity()).norm() < 1e-15);
    CHECK(std::abs(r.reflection.determinant() + 1.0) < 1e-15);
    CHECK(std::abs(r.normal_rotation.determinant() - 1.0) < 1e-15);
    const Eigen::MatrixXd j = horizontal_complex_structure(4);
    const Eigen::MatrixXd expected = std::cos(theta) * Eigen::MatrixXd::Identity(5, 5) + std::sin(theta) * j;
    CHECK((r.complex_rotation - expected).norm() < 1e-15);
  }
  const Eigen::MatrixXd j = horizontal_complex_structure(3);
  CHECK((j * unit(4, 1) - unit(4, 2)).norm() == 0.0);
  CHECK((j * unit(4, 0) - unit(4, 0)).norm() == 0.0);

  const double om = 1.7;
  const Eigen::Vector2d b11 = traceless_form(unit(4, 1), unit(4, 1), om);
  const Eigen::Vector2d b22 = traceless_form(unit(4, 2), unit(4, 2), om);
  const Eigen::Vector2d b12 = traceless_form(unit(4, 1), unit(4, 2), om);
  CHECK((b11 - Eigen::Vector2d(1.0 / (om * om), 0.0)).norm() < 1e-15);
  CHECK((b22 + b11).norm() < 1e-15);
  CHECK((b12 - Eigen::Vector2d(0.0, -1.0 / (om * om))).norm() < 1e-15);
  CHECK(traceless_form(unit(4, 3), unit(4, 1), om).norm() == 0.0);
  CHECK(traceless_form(unit(4, 0), unit(4, 0), om).norm() == 0.0);
}

TEST_CASE("identity member and quarter turn") {
  const SurfaceModel sphere = boruvka_sphere().model;
  for (const auto& b : bases(sphere, 10, 3)) {
    const FamilyMember m0 = rotate_family(b.frame, b.shape, b.cp, 0.0);
    CHECK((m0.a_xi - b.shape.a_xi).norm() == 0.0);
    CHECK((m0.a_eta - b.shape.a_eta).norm() == 0.0);
    const FamilyMember q = rotate_family(b.frame, b.shape, b.cp, kPi / 2);
    CHECK(std::abs(q.a[0] - b.frame.a(2)) < 1e-15);
    CHECK(std::abs(q.a[1] + b.frame.a(1)) < 1e-15);
    CHECK(std::abs(q.kappa - b.shape.kappa) == 0.0);
    CHECK(std::abs(q.a_xi.trace()) < 1e-14);
    CHECK(std::abs(q.a_eta.trace()) < 1e-14);
  }
}

TEST_CASE("family composition is additive in the angle") {
  const SurfaceModel sphere = boruvka_sphere().model;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  for (const auto& b : bases(sphere, 10, 4)) {
    const double t1 = angle(rng), t2 = angle(rng);
    const FamilyMember once = rotate_family(b.frame, b.shape, b.cp, t1 + t2);
    const FamilyMember twice = rotate_family(rotate_family(b.frame, b.shape, b.cp, t1), t2);
    CHECK(scalar_gap(once, twice) <= 1e-10);
    CHECK((once.a_xi - twice.a_xi).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("norm and normal isometry are preserved") {
  for (const char* name : {"equilateral-torus", "boruvka-sphere"}) {
    CAPTURE(name);
    const SurfaceModel m = load_entry(name, false).model;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    for (const auto& b : bases(m, 20, 5)) {
      const FamilyMember f = rotate_family(b.frame, b.shape, b.cp, angle(rng));
      const double base = pair_norm_sq(b.shape.a_xi, b.shape.a_eta, b.shape.omega);
      CHECK(std::abs(pair_norm_sq(f.a_xi, f.a_eta, f.omega) - base) <= 1e-9);
      CHECK(std::abs(f.xi.norm() - f.omega) <= 1e-9);
      CHECK(std::abs(f.eta.norm() - f.omega) <= 1e-9);
      CHECK(std::abs(f.xi.dot(f.eta)) <= 1e-9);
    }
  }
}

TEST_CASE("forms relation") {
  const SurfaceModel torus = equilateral_torus().model;
  const auto bs = bases(torus, 50, 6);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  std::normal_distribution<double> normal;
  for (const auto& b : bs) {
    const int nc = b.shape.n + 1;
    Eigen::VectorXd x(nc), y(nc);
    for (int k = 0; k < nc; ++k) {
      x[k] = normal(rng);
      y[k] = normal(rng);
    }
    const FormsCheck zero = verify_forms_relation(b.shape, rotate_family(b.frame, b.shape, b.cp, 0.0), x, y);
    CHECK(zero.printed_residual == 0.0);
    CHECK(zero.consistent_residual == 0.0);
    const FamilyMember m = rotate_family(b.frame, b.shape, b.cp, angle(rng));
    CHECK(verify_forms_relation(b.shape, m, x, y).consistent_residual <= 1e-8);
  }

  // The correction term at X = Y = E_1 has xi-coefficient kappa sin(theta) / Omega^2.
  const double theta = 0.9, om = 1.3, kappa = 0.6;
  const Eigen::VectorXd half = RotationOperators::at(-theta / 2, 3).complex_rotation * unit(4, 1);
  const Eigen::Vector2d beta = 2.0 * kappa * std::sin(theta / 2) * traceless_form(half, unit(4, 1), om);
  CHECK(std::abs(beta[0] - kappa * std::sin(theta) / (om * om)) < 1e-15);
}

TEST_CASE("Gauss compatibility") {
  const SurfaceModel torus = equilateral_torus().model;
  const auto sample = sample_cone_points(torus, 100, 12);
  CHECK(gauss_compatibility(torus, 0.0, sample).max_residual == 0.0);
  CHECK(gauss_compatibility(torus, kPi / 3, sample).max_residual <= 1e-8);
  const GaussReport perturbed = gauss_compatibility(torus, kPi / 3, sample, 0.05);
  CHECK(perturbed.max_residual > 1e-3);
  const SurfaceModel sphere = boruvka_sphere().model;
  CHECK(gauss_compatibility(sphere, 1.1, sample_cone_points(sphere, 30, 2)).max_residual <= 1e-8);
}

TEST_CASE("isotropy is required") {
  const SurfaceModel clifford = clifford_control().model;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(1);
  try {
    rotate_family(clifford, ConePoint{1.0, {0.3, 0.4}, t}, 0.5);
    FAIL("expected isotropy-required");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::isotropy_required);
  }
}

TEST_CASE("integrated family on a coarse torus grid") {
  const SurfaceModel torus = equilateral_torus().model;
  const GridSpec grid{16, 16, 24};
  const FamilyGrid g0 = integrate_surface_family(torus, 0.0, grid);
  CHECK(g0.max_loop_closure <= 1e-7);
  const FamilyIntegrationReport r0 = check_integrated_family(torus, g0, 8, 1);
  CHECK(r0.base_deviation <= 1e-7);

  const FamilyGrid g = integrate_surface_family(torus, 1.2, grid);
  const FamilyIntegrationReport r = check_integrated_family(torus, g, 8, 1);
  CHECK(r.max_loop_closure <= 1e-7);
  CHECK(r.max_metric_error <= 1e-6);
  CHECK(r.max_kappa_error <= 1e-5);
  CHECK(r.max_circularity <= 1e-5);
  for (int i = 0; i < g.nu; i += 5)
    for (int j = 0; j < g.nv; j += 5) {
      const Eigen::MatrixXd& f = g.frame(i, j);
      CHECK((f.transpose() * f - Eigen::MatrixXd::Identity(f.cols(), f.cols())).norm() < 1e-12);
    }
}

TEST_CASE("integrated shape operators match the rotated closed form") {
  const SurfaceModel sphere = boruvka_sphere().model;
  const double theta = 0.8;
  for (const auto& b : bases(sphere, 3, 14)) {
    const IntegratedShapeData od = family_shape_operators_integrated(sphere, theta, b.cp);
    const FamilyMember m = rotate_family(b.frame, b.shape, b.cp, theta);
    CHECK((od.a_xi - m.a_xi).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK((od.a_eta - m.a_eta).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK(od.normal_residual <= 1e-6);
    CHECK(std::abs(od.xi_norm - m.omega) <= 1e-6);
  }
}

TEST_CASE("equivariance preconditions and identity") {
  const SurfaceModel torus = equilateral_torus().model;
  try {
    equivariance_check(torus, kPi / 4, 10, 1, GridSpec{8, 8, 4});
    FAIL("expected precondition-violation");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::precondition_violation);
  }
  const SurfaceModel sphere = boruvka_sphere().model;
  const EquivarianceReport r = equivariance_check(sphere, 0.0, 100, 1, GridSpec{16, 16, 24});
  CHECK(r.rms <= 1e-6);
  CHECK(std::abs(r.determinant - 1.0) < 1e-9);
}

TEST_CASE("integration errors") {
  const SurfaceModel torus = equilateral_torus().model;
  CHECK_THROWS_AS(integrate_surface_family(torus, 0.3, GridSpec{1, 4, 4}), GeometryError);
  Tolerances strict;
  strict.loop_closure = 1e-30;
  try {
    integrate_surface_family(boruvka_sphere().model, 0.3, GridSpec{6, 6, 1}, strict);
    FAIL("expected integration-diverged");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::integration_diverged);
  }
}
