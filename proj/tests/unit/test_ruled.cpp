#include <doctest.h>

#include <cmath>
#include <random>

#include "ruledmin/catalog.hpp"
#include "ruledmin/error.hpp"
#include "ruledmin/family.hpp"
#include "ruledmin/ruled.hpp"

using namespace ruledmin;

namespace {

const double kHalfRoot = std::sqrt(0.5);

// Squared norm of the slice's second fundamental form on the torus cone,
// from an independent numpy difference oracle (tests/oracle/derive_values.py).
constexpr double kTorusNormSq = 6.0;

ConePoint cone(double s, DomainPoint p, std::initializer_list<double> t) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.size()));
  Eigen::Index k = 0;
  for (double x : t) v[k++] = x;
  return {s, p, v};
}

std::vector<ConePoint> slice_sample(const SurfaceModel& m, std::size_t count, std::uint64_t seed) {
  return sample_cone_points(m, count, seed);
}

}  // namespace

TEST_CASE("cone map evaluation") {
  const SurfaceModel torus = equilateral_torus().model;
  const DomainPoint p{0.7, 2.1};
  const AdaptedFrameData f = adapted_frame(torus, p);
  CHECK((eval_G(torus, cone(1.0, p, {0.0})) - torus.value(p)).norm() < 1e-14);
  const AmbientVector ruling = eval_G(torus, cone(0.0, p, {1.0}));
  CHECK((ruling - f.e(5)).norm() < 1e-14);
  CHECK(std::abs(ruling.norm() - 1.0) < 1e-14);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  const SurfaceModel sphere = boruvka_sphere().model;
  for (const auto& q : sample_domain(sphere.domain(), 100, 4, 0.05)) {
    const ConePoint cp = cone(normal(rng), q, {normal(rng), normal(rng)});
    CHECK(std::abs(eval_G(sphere, cp).squaredNorm() - (cp.s * cp.s + cp.t.squaredNorm())) < 1e-12);
  }
}

TEST_CASE("singular set") {
  const SurfaceModel torus = equilateral_torus().model;
  CHECK(is_singular(torus, cone(0.0, {0.3, 0.4}, {0.0})));
  CHECK_FALSE(is_singular(torus, cone(0.0, {0.3, 0.4}, {1.0})));
  CHECK_FALSE(is_singular(torus, cone(0.6, {0.3, 0.4}, {0.8})));

  // n = 5: N_1, N_2 of rank two and a final rank-one N_3 in R^8.
  NormalSplit split;
  const auto unit = [](int k) { return AmbientVector(AmbientVector::Unit(8, k)); };
  split.levels = {{unit(3), unit(4)}, {unit(5), unit(6)}, {unit(7)}};
  CHECK(is_singular(0.0, unit(7), split, 1e-6));
  CHECK_FALSE(is_singular(0.0, unit(5), split, 1e-6));
  CHECK_FALSE(is_singular(0.5, unit(7), split, 1e-6));
  CHECK(is_singular(0.0, AmbientVector::Zero(8), split, 1e-6));
}

TEST_CASE("horizontal and normal frames of the torus cone") {
  const SurfaceModel torus = equilateral_torus().model;
  const DomainPoint p{1.1, 0.2};
  const AdaptedFrameData f = adapted_frame(torus, p);

  const HorizontalFrame zero = horizontal_frame(f, cone(1.0, p, {0.0}));
  CHECK((zero.gx1 - f.e(1)).norm() < 1e-12);
  CHECK((zero.gx2 - f.e(2)).norm() < 1e-12);
  const NormalPair nz = normal_frame(f, cone(1.0, p, {0.0}));
  CHECK((nz.xi - f.e(3)).norm() < 1e-12);
  CHECK((nz.eta - f.e(4)).norm() < 1e-12);

  const HorizontalFrame pure = horizontal_frame(f, cone(0.0, p, {1.0}));
  CHECK((pure.gx1 + f.e(3)).norm() < 1e-10);
  CHECK((pure.gx2 - f.e(4)).norm() < 1e-10);
  const NormalPair np = normal_frame(f, cone(0.0, p, {1.0}));
  CHECK((np.xi - f.e(1)).norm() < 1e-10);
  CHECK((np.eta + f.e(2)).norm() < 1e-10);

  const SurfaceModel sphere = boruvka_sphere().model;
  for (const auto& cp : slice_sample(sphere, 100, 8)) {
    const HorizontalFrame h = horizontal_frame(sphere, cp);
    const NormalPair nf = normal_frame(sphere, cp);
    CHECK(std::abs(h.gx1.norm() - h.omega) < 1e-10);
    CHECK(std::abs(h.gx1.dot(h.gx2)) < 1e-10);
    CHECK(std::abs(nf.xi.squaredNorm() - nf.omega * nf.omega) < 1e-9);
    CHECK(std::abs(nf.eta.squaredNorm() - nf.omega * nf.omega) < 1e-9);
    CHECK(std::abs(nf.xi.dot(nf.eta)) < 1e-10);
    const Eigen::MatrixXd tangent = h.e_frame.transpose();
    CHECK((tangent * nf.xi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((tangent * nf.eta).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(nf.xi.dot(eval_G(sphere, cp))) < 1e-10);
  }
}

TEST_CASE("shape operators at the torus zero section") {
  const SurfaceModel torus = equilateral_torus().model;
  const ConePoint cp = cone(1.0, {0.5, 0.9}, {0.0});
  const ShapeData d = shape_operators(torus, cp);
  Eigen::Matrix4d expected;
  expected << 0, 0, 0, 0,
              0, kHalfRoot, 0, -1,
              0, 0, -kHalfRoot, 0,
              0, -1, 0, 0;
  CHECK((d.a_xi - expected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(d.a_xi.trace()) == 0.0);
  const FdShapeData fd = shape_operators_fd(torus, cp);
  CHECK((fd.a_xi - expected).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((fd.a_eta - d.a_eta).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("closed-form shape operators against the difference oracle") {
  for (const char* name : {"equilateral-torus", "boruvka-sphere", "harmonic-sphere-4"}) {
    CAPTURE(name);
    const SurfaceModel m = load_entry(name, false).model;
    for (const auto& cp : slice_sample(m, 12, 21)) {
      const ShapeData d = shape_operators(m, cp);
      const FdShapeData fd = shape_operators_fd(m, cp);
      CHECK((d.a_xi - fd.a_xi).cwiseAbs().maxCoeff() <= 1e-4);
      CHECK((d.a_eta - fd.a_eta).cwiseAbs().maxCoeff() <= 1e-4);
      CHECK(std::abs(d.a_xi.trace()) <= 1e-10);
      CHECK(std::abs(d.a_eta.trace()) <= 1e-10);
      CHECK(std::abs(fd.a_xi.trace()) <= 1e-4);
      CHECK((d.a_xi - d.a_xi.transpose()).norm() == 0.0);
      CHECK(radial_nullity_residual(d, cp) <= 1e-8);
      const Eigen::VectorXd r = radial_direction(cp);
      CHECK((fd.a_xi * r).norm() <= 1e-4);
      CHECK((fd.a_eta * r).norm() <= 1e-4);
    }
  }
}

TEST_CASE("relative nullity of the four-dimensional cone") {
  const SurfaceModel sphere = boruvka_sphere().model;
  for (const auto& cp : slice_sample(sphere, 10, 13)) {
    const FdShapeData fd = shape_operators_fd(sphere, cp);
    Eigen::MatrixXd stacked(2 * fd.a_xi.rows(), fd.a_xi.cols());
    stacked << fd.a_xi, fd.a_eta;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
    const auto& sv = svd.singularValues();
    int kernel = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) kernel += sv[k] <= 1e-4 * sv[0] ? 1 : 0;
    CHECK(kernel >= 1);
  }
}

TEST_CASE("torus: h vanishes and the slice norm is constant") {
  const SurfaceModel torus = equilateral_torus().model;
  std::vector<double> norms;
  for (const auto& cp : slice_sample(torus, 100, 17)) {
    const ShapeData d = shape_operators(torus, cp);
    CHECK(std::abs(d.h[0]) <= 1e-6);
    CHECK(std::abs(d.h[1]) <= 1e-6);
    const SecondFormInvariants inv = second_form_invariants(d, cp, default_tolerances(), true);
    norms.push_back(inv.norm_sq);
    CHECK(inv.rank == 3);
    REQUIRE(inv.normalized_scalar.has_value());
    CHECK(std::abs(*inv.scalar - (6.0 - inv.norm_sq)) < 1e-12);
  }
  for (double x : norms) CHECK(std::abs(x - kTorusNormSq) < 1e-9);
}

TEST_CASE("cone homogeneity") {
  const SurfaceModel torus = equilateral_torus().model;
  const ConePoint cp = cone(0.6, {0.3, 1.2}, {0.8});
  const double base = second_form_invariants(torus, cp).norm_sq;
  for (double r : {0.5, 2.0}) {
    const double scaled = second_form_invariants(torus, cone(r * 0.6, cp.p, {r * 0.8})).norm_sq;
    CHECK(std::abs(scaled * r * r - base) <= 1e-6 * base);
  }
  // Values from the numpy oracle at r = 0.5 and r = 2.
  CHECK(std::abs(second_form_invariants(torus, cone(0.3, cp.p, {0.4})).norm_sq - 24.0) < 1e-8);
  CHECK(std::abs(second_form_invariants(torus, cone(1.2, cp.p, {1.6})).norm_sq - 1.5) < 1e-8);

  const SurfaceModel sphere = boruvka_sphere().model;
  for (const auto& q : slice_sample(sphere, 10, 2)) {
    const double b = second_form_invariants(sphere, q).norm_sq;
    const ConePoint doubled{2.0 * q.s, q.p, 2.0 * q.t};
    CHECK(std::abs(second_form_invariants(sphere, doubled).norm_sq * 4.0 - b) <= 1e-6 * b);
  }
}

TEST_CASE("ranks of the cones") {
  const SurfaceModel sphere = boruvka_sphere().model;
  for (const auto& cp : slice_sample(sphere, 50, 5)) CHECK(second_form_invariants(sphere, cp).rank == 4);
}

TEST_CASE("length identity is reported, not asserted equal to the measured norm") {
  const SurfaceModel torus = equilateral_torus().model;
  const ConePoint cp = cone(0.6, {0.3, 1.2}, {0.8});
  const AdaptedFrameData f = adapted_frame(torus, cp.p);
  const ShapeData d = shape_operators(f, cp);
  const double predicted = length_identity(f, d, cp);
  const double measured = second_form_invariants(d, cp).norm_sq;
  CHECK(std::abs(predicted - 8.0) < 1e-9);
  CHECK(std::abs(measured - kTorusNormSq) < 1e-9);
}

TEST_CASE("cross sections reproduce the surface form") {
  const SurfaceModel torus = equilateral_torus().model;
  const auto pts = sample_domain(torus.domain(), 5, 3);
  const CrossSectionReport closed = cross_section_check(torus, pts, false);
  CHECK(closed.pass);
  CHECK(std::abs(closed.kappa_entry - kHalfRoot) < 1e-10);
  const CrossSectionReport oracle = cross_section_check(torus, pts, true);
  CHECK(oracle.pass);
  const SurfaceModel sphere = boruvka_sphere().model;
  CHECK(cross_section_check(sphere, sample_domain(sphere.domain(), 5, 3, 0.05), true).pass);
}

TEST_CASE("normal derivatives against differences") {
  for (const char* name : {"equilateral-torus", "boruvka-sphere"}) {
    CAPTURE(name);
    const SurfaceModel m = load_entry(name, false).model;
    for (const auto& cp : slice_sample(m, 5, 31)) {
      const NormalDerivatives exact = normal_derivatives(adapted_frame(m, cp.p), cp);
      const NormalDerivatives fd = normal_derivatives_fd(m, cp);
      CHECK((exact.xi - fd.xi).cwiseAbs().maxCoeff() < 1e-5);
      CHECK((exact.eta - fd.eta).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("ruled errors") {
  const SurfaceModel torus = equilateral_torus().model;
  const ConePoint vertex = cone(0.0, {0.3, 0.4}, {0.0});
  try {
    shape_operators(torus, vertex);
    FAIL("expected singular-point");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::singular_point);
  }
  try {
    shape_operators_fd(torus, vertex);
    FAIL("expected oracle-unavailable");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::oracle_unavailable);
  }
  try {
    second_form_invariants(torus, cone(2.0, {0.3, 0.4}, {0.0}), default_tolerances(), true);
    FAIL("expected slice-required");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::slice_required);
  }
  const SurfaceModel clifford = clifford_control().model;
  CHECK_THROWS_AS(shape_operators(clifford, cone(1.0, {0.3, 0.4}, {0.0})), GeometryError);
}
