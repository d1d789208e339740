#include <doctest.h>

#include <cmath>

#include "ruledmin/catalog.hpp"
#include "ruledmin/error.hpp"
#include "ruledmin/jets.hpp"
#include "ruledmin/surface.hpp"

using namespace ruledmin;

namespace {

const double kHalfRoot = std::sqrt(0.5);

std::vector<DomainPoint> interior_sample(const SurfaceModel& m, std::size_t count, std::uint64_t seed) {
  return sample_domain(m.domain(), count, seed, 0.05);
}

double gram_defect(const Eigen::MatrixXd& frame) {
  const int k = static_cast<int>(frame.cols());
  return (frame.transpose() * frame - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("induced metric of the catalog surfaces") {
  const SurfaceModel torus = equilateral_torus().model;
  Eigen::Matrix2d expected;
  expected << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  for (const auto& p : interior_sample(torus, 5, 3)) CHECK((induced_metric(torus, p) - expected).norm() < 1e-14);

  // Degree-3 harmonic sphere: six times the round metric in polar coordinates.
  const SurfaceModel sphere = boruvka_sphere().model;
  Eigen::Matrix2d round6 = 6.0 * Eigen::Matrix2d::Identity();
  CHECK((induced_metric(sphere, {M_PI / 2, 0.0}) - round6).cwiseAbs().maxCoeff() < 1e-9);
  const double th = 0.8;
  Eigen::Matrix2d at_th;
  at_th << 6.0, 0.0, 0.0, 6.0 * std::sin(th) * std::sin(th);
  CHECK((induced_metric(sphere, {th, 1.3}) - at_th).cwiseAbs().maxCoeff() < 1e-9);

  const SurfaceModel great = great_sphere_model();
  const Eigen::Matrix2d m = induced_metric(great, {th, 0.2});
  CHECK(std::abs(m(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(m(1, 1) - std::sin(th) * std::sin(th)) < 1e-12);
  CHECK(std::abs(m(0, 1)) < 1e-12);
}

TEST_CASE("tangent frame orientation and start direction") {
  const CatalogEntry e = equilateral_torus();
  const TangentFrame f = tangent_frame(e.model, {0.0, 0.0});
  const JetTable jet = analytic_jet(e.model, {0.0, 0.0}, 1);
  CHECK(std::abs(jet(1, 0).norm() - std::sqrt(2.0 / 3.0)) < 1e-15);
  CHECK((f.e1 - jet(1, 0) / jet(1, 0).norm()).norm() < 1e-14);
  CHECK(std::abs(f.e1.dot(f.e2)) < 1e-14);

  SurfaceModel flipped = e.model;
  flipped.set_orientation(-1);
  const TangentFrame g = tangent_frame(flipped, {0.0, 0.0});
  CHECK((g.e1 - f.e1).norm() < 1e-14);
  CHECK((g.e2 + f.e2).norm() < 1e-14);

  const SurfaceModel great = great_sphere_model();
  const TangentFrame h = tangent_frame(great, {1.0, 0.4});
  const JetTable gj = analytic_jet(great, {1.0, 0.4}, 1);
  CHECK(std::abs(std::abs(h.e1.dot(gj(1, 0).normalized())) - 1.0) < 1e-14);
  CHECK(std::abs(std::abs(h.e2.dot(gj(0, 1).normalized())) - 1.0) < 1e-14);
}

TEST_CASE("second fundamental form and curvature ellipse") {
  const SurfaceModel torus = equilateral_torus().model;
  for (const auto& p : interior_sample(torus, 10, 4)) {
    const SecondForm sf = second_form(torus, p);
    CHECK(std::abs(sf.a11.norm() - kHalfRoot) < 1e-12);
    CHECK(std::abs(sf.a12.norm() - kHalfRoot) < 1e-12);
    CHECK(sf.minimality_residual < 1e-12);
    const AmbientVector g = torus.value(p);
    for (const auto* a : {&sf.a11, &sf.a12, &sf.a22}) {
      CHECK(std::abs(a->dot(g)) < 1e-12);
      CHECK(std::abs(a->dot(sf.frame.e1)) < 1e-12);
      CHECK(std::abs(a->dot(sf.frame.e2)) < 1e-12);
    }
    const CurvatureEllipse ce = curvature_ellipse(torus, p);
    CHECK(std::abs(ce.kappa - kHalfRoot) < 1e-12);
    CHECK(std::abs(ce.mu - kHalfRoot) < 1e-12);
    // e3, e4 are fixed in the surface's own tangent gauge; they still span N_1.
    CHECK(std::abs(ce.e3.dot(ce.e4)) < 1e-12);
    const Eigen::MatrixXd n1 = (Eigen::MatrixXd(6, 2) << ce.e3, ce.e4).finished();
    CHECK((sf.a11 - n1 * (n1.transpose() * sf.a11)).norm() < 1e-12);
    CHECK((sf.a12 - n1 * (n1.transpose() * sf.a12)).norm() < 1e-12);
    const AdaptedFrameData f = adapted_frame(torus, p);
    CHECK((f.e(3) - ce.e3).norm() < 1e-10);
    CHECK((f.e(4) - ce.e4).norm() < 1e-10);
  }

  const SurfaceModel great = great_sphere_model();
  const SecondForm gs = second_form(great, {1.0, 0.4});
  CHECK(gs.a11.norm() < 1e-12);
  CHECK(gs.a12.norm() < 1e-12);
  CHECK(gs.a22.norm() < 1e-12);

  const SurfaceModel clifford = clifford_control().model;
  const CurvatureEllipse cc = curvature_ellipse(clifford, {0.3, 1.1});
  CHECK(std::abs(cc.kappa - 1.0) < 1e-10);
  CHECK(cc.mu < 1e-8);

  const SurfaceModel sphere = boruvka_sphere().model;
  for (const auto& p : interior_sample(sphere, 10, 5)) {
    const CurvatureEllipse ce = curvature_ellipse(sphere, p);
    CHECK(std::abs(ce.kappa - std::sqrt(5.0 / 12.0)) < 1e-9);
    CHECK(std::abs(ce.mu - std::sqrt(5.0 / 12.0)) < 1e-9);
  }
}

TEST_CASE("1-isotropy verdicts") {
  const SurfaceModel torus = equilateral_torus().model;
  const SurfaceModel clifford = clifford_control().model;
  const SurfaceModel sphere = boruvka_sphere().model;
  CHECK(is_one_isotropic(torus, interior_sample(torus, 30, 1)).isotropic);
  CHECK(is_one_isotropic(sphere, interior_sample(sphere, 30, 1)).isotropic);
  const IsotropyReport r = is_one_isotropic(clifford, interior_sample(clifford, 30, 1));
  CHECK_FALSE(r.isotropic);
  CHECK(r.points.size() == 30);
  CHECK(r.max_defect > 0.5);
}

TEST_CASE("higher fundamental forms and normal splitting") {
  const SurfaceModel torus = equilateral_torus().model;
  const HigherForms hf = higher_forms(torus, {0.4, 1.7}, 2);
  CHECK(hf.split.ranks() == std::vector<int>{2, 1});
  CHECK(std::abs(hf.along_e1[1].norm() - kHalfRoot) < 1e-10);
  CHECK(hf.mixed[1].norm() < 1e-10);

  const SurfaceModel great = great_sphere_model();
  const HigherForms gh = higher_forms(great, {1.0, 0.4}, 1);
  CHECK(gh.along_e1[0].norm() < 1e-12);
  CHECK(gh.mixed[0].norm() < 1e-12);

  const SurfaceModel sphere = boruvka_sphere().model;
  const HigherForms bh = higher_forms(sphere, {1.1, 0.4}, 2);
  CHECK(bh.split.ranks() == std::vector<int>{2, 2});
}

TEST_CASE("adapted frame of the torus") {
  const SurfaceModel torus = equilateral_torus().model;
  for (const auto& p : interior_sample(torus, 10, 6)) {
    const AdaptedFrameData f = adapted_frame(torus, p);
    CHECK(gram_defect(f.frame) < 1e-12);
    CHECK(std::abs(f.a(1) - 1.0) < 1e-10);
    CHECK(std::abs(f.a(2)) < 1e-10);
    CHECK(std::abs(f.c(1)) < 1e-10);
    CHECK(std::abs(f.c(2) + 1.0) < 1e-10);
    CHECK(std::abs(f.kappa1 - kHalfRoot) < 1e-10);
    CHECK(std::abs(f.gauss_curvature) < 1e-12);
    CHECK(std::abs(intrinsic_curvature(torus, p)) < 1e-8);
    // connection forms are antisymmetric by construction
    for (int i = 1; i <= 5; ++i)
      for (int j = 1; j <= 5; ++j)
        for (int k = 1; k <= 2; ++k) CHECK(f.omega(i, j, k) == -f.omega(j, i, k));
    const DualFields d = dual_fields(f);
    CHECK((d.V - f.e(1)).norm() < 1e-10);
    CHECK(d.omegas_residual < 1e-10);
    const StructureResiduals r = structure_residuals(f);
    CHECK(r.conn < 1e-9);
    CHECK(std::abs(r.gauss) < 1e-9);
    CHECK(r.ricci_max() < 1e-8);
  }
}

TEST_CASE("structure equations on the harmonic sphere") {
  const SurfaceModel sphere = boruvka_sphere().model;
  for (const auto& p : interior_sample(sphere, 20, 7)) {
    const AdaptedFrameData f = adapted_frame(sphere, p);
    CHECK(gram_defect(f.frame) < 1e-10);
    CHECK(std::abs(f.lambda - 1.0) < 1e-9);
    CHECK(std::abs(f.lambda * f.d(1) - f.b(2)) < 1e-7);
    CHECK(std::abs(f.lambda * f.c(1) - f.a(2)) < 1e-7);
    CHECK(std::abs(f.gauss_curvature - 1.0 / 6.0) < 1e-9);
    CHECK(std::abs(intrinsic_curvature(sphere, p) - 1.0 / 6.0) < 1e-6);
    const StructureResiduals r = structure_residuals(f);
    CHECK(r.conn < 1e-6);
    CHECK(r.omegas < 1e-6);
    CHECK(r.ricci_max() < 1e-5);
  }
}

TEST_CASE("jet connection data agrees with recomputed neighbouring frames") {
  const SurfaceModel sphere = boruvka_sphere().model;
  const DomainPoint p{1.2, 0.7};
  const AdaptedFrameData exact = adapted_frame(sphere, p);
  const AdaptedFrameData fd = adapted_frame_fd(sphere, p, 1e-3);
  for (int i = 1; i <= 6; ++i)
    for (int j = i + 1; j <= 6; ++j)
      for (int k = 1; k <= 2; ++k) {
        CAPTURE(i);
        CAPTURE(j);
        CHECK(std::abs(exact.omega(i, j, k) - fd.omega(i, j, k)) < 1e-6);
      }
}

TEST_CASE("surface errors") {
  const SurfaceModel clifford = clifford_control().model;
  CHECK_THROWS_AS(adapted_frame(clifford, {0.2, 0.3}), GeometryError);
  const SurfaceModel great = great_sphere_model();
  try {
    curvature_ellipse(great, {1.0, 0.4});
    FAIL("expected degenerate-first-normal");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::degenerate_first_normal);
  }
  try {
    higher_forms(great, {1.0, 0.4}, 0);
    FAIL("expected invalid-argument");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
  }
}
