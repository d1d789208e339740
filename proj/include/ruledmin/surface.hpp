#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "ruledmin/config.hpp"
#include "ruledmin/surface_model.hpp"
#include "ruledmin/types.hpp"

namespace ruledmin {

/// Orthonormal tangent frame; e_a = coeffs(a,0) g_u + coeffs(a,1) g_v.
struct TangentFrame {
  AmbientVector e1;
  AmbientVector e2;
  Eigen::Matrix2d coeffs;
};

/// Spherical second fundamental form in a tangent frame.
struct SecondForm {
  TangentFrame frame;
  AmbientVector a11;
  AmbientVector a12;
  AmbientVector a22;
  double minimality_residual = 0.0;  // |a11 + a22|
};

struct CurvatureEllipse {
  double kappa = 0.0;
  double mu = 0.0;
  AmbientVector e3;
  AmbientVector e4;
};

/// Orthonormal bases of N_1, N_2, ... at one point.
struct NormalSplit {
  std::vector<std::vector<AmbientVector>> levels;

  std::vector<int> ranks() const {
    std::vector<int> r;
    for (const auto& l : levels) r.push_back(static_cast<int>(l.size()));
    return r;
  }
  /// Basis of every level from `first` (1-based) on.
  std::vector<AmbientVector> from_level(int first) const {
    std::vector<AmbientVector> out;
    for (std::size_t k = static_cast<std::size_t>(first - 1); k < levels.size(); ++k)
      out.insert(out.end(), levels[k].begin(), levels[k].end());
    return out;
  }
};

/// Higher fundamental forms in the adapted tangent gauge.
/// along_e1[s-1] = alpha^{s+1}(e1,...,e1), mixed[s-1] = alpha^{s+1}(e1,...,e1,e2),
/// both projected onto N_s.
struct HigherForms {
  NormalSplit split;
  std::vector<AmbientVector> along_e1;
  std::vector<AmbientVector> mixed;
};

struct PointIsotropy {
  DomainPoint point;
  double kappa = 0.0;
  double mu = 0.0;
  double defect = 0.0;      // |kappa - mu| / max(kappa, 1)
  double minimality = 0.0;  // |alpha(e1,e1) + alpha(e2,e2)|
  bool pass = false;
};

struct IsotropyReport {
  bool isotropic = false;
  double max_defect = 0.0;
  double max_minimality = 0.0;
  std::vector<PointIsotropy> points;
};

/// Adapted frame {e1, ..., e_{n+2}} at one point with connection data.
///
/// Indices follow the usual 1-based numbering: e(1), e(2) tangent, e(3), e(4)
/// span N_1, e(5), e(6) span N_2 and so on. Column 0 of `frame` is the
/// position vector. Connection coefficients with an index above n+2 read as
/// zero, so formulas written for n >= 6 reduce to smaller n unchanged.
struct AdaptedFrameData {
  int n = 0;
  DomainPoint point;
  Eigen::MatrixXd frame;           // (n+3) x (n+3), columns g, e1, ..., e_{n+2}
  Eigen::Matrix2d tangent_coeffs;  // e_a in the coordinate basis (g_u, g_v)
  Eigen::Matrix2d metric;
  NormalSplit split;
  double kappa = 0.0;
  double mu = 0.0;
  double lambda = 0.0;
  double gauss_curvature = 0.0;
  double kappa1 = std::numeric_limits<double>::quiet_NaN();
  double minimality_residual = 0.0;

  AmbientVector position() const { return frame.col(0); }
  AmbientVector e(int i) const { return frame.col(i); }

  /// omega_ij(e_k).
  double omega(int i, int j, int k) const;
  /// e_l(omega_ij(e_k)).
  double domega(int i, int j, int k, int l) const;
  /// Whether omega_ij^k is available (NaN otherwise, e.g. jets too short).
  bool has_omega(int i, int j) const;

  double a(int k) const { return omega(3, 5, k); }
  double b(int k) const { return omega(3, 6, k); }
  double c(int k) const { return omega(4, 5, k); }
  double d(int k) const { return omega(4, 6, k); }
  double da(int k, int l) const { return domega(3, 5, k, l); }
  double db(int k, int l) const { return domega(3, 6, k, l); }
  double dc(int k, int l) const { return domega(4, 5, k, l); }
  double dd(int k, int l) const { return domega(4, 6, k, l); }

  /// Ambient tangent vector x1 e1 + x2 e2.
  AmbientVector tangent(double x1, double x2) const { return x1 * e(1) + x2 * e(2); }

  // Flat storage, index ((i * dim + j) * 2 + (k-1)) [* 2 + (l-1)].
  std::vector<double> omega_values;
  std::vector<double> domega_values;
};

/// Components of V, W, Y, Z, the duals of omega_35, omega_36, omega_45, omega_46.
struct DualFields {
  std::array<double, 2> a{};
  std::array<double, 2> b{};
  std::array<double, 2> c{};
  std::array<double, 2> d{};
  AmbientVector V, W, Y, Z;
  /// max over lambda c1 - a2, lambda c2 + a1, lambda d1 - b2, lambda d2 + b1.
  double omegas_residual = 0.0;
};

struct StructureResiduals {
  double conn = 0.0;    // omega_45 + (1/lambda) * omega_35 and the 46/36 analogue
  double omegas = 0.0;  // component form of the same identities
  double gauss = 0.0;   // K - (1 - kappa^2 - mu^2)
  std::array<double, 8> ricci{};  // the eight normal-curvature identities
  double ricci_max() const {
    double m = 0.0;
    for (double r : ricci) m = std::max(m, std::abs(r));
    return m;
  }
};

Eigen::Matrix2d induced_metric(const SurfaceModel& surface, DomainPoint p,
                               const Tolerances& tol = default_tolerances());
TangentFrame tangent_frame(const SurfaceModel& surface, DomainPoint p,
                           const Tolerances& tol = default_tolerances());
SecondForm second_form(const SurfaceModel& surface, DomainPoint p,
                       const Tolerances& tol = default_tolerances());
CurvatureEllipse curvature_ellipse(const SurfaceModel& surface, DomainPoint p,
                                   const Tolerances& tol = default_tolerances());
IsotropyReport is_one_isotropic(const SurfaceModel& surface, const std::vector<DomainPoint>& samples,
                                const Tolerances& tol = default_tolerances());
HigherForms higher_forms(const SurfaceModel& surface, DomainPoint p, int s,
                         const Tolerances& tol = default_tolerances());
AdaptedFrameData adapted_frame(const SurfaceModel& surface, DomainPoint p,
                               const Tolerances& tol = default_tolerances());
/// Frame vectors only (no connection data); cheaper, used by stencils.
AdaptedFrameData adapted_frame_vectors(const SurfaceModel& surface, DomainPoint p,
                                       const Tolerances& tol = default_tolerances());
DualFields dual_fields(const AdaptedFrameData& frame);
StructureResiduals structure_residuals(const AdaptedFrameData& frame);

/// Gauss curvature from the metric and its first two derivatives.
double intrinsic_curvature(const SurfaceModel& surface, DomainPoint p);

/// Seeded uniform samples of the domain, shrunk by `margin` on non-periodic sides.
std::vector<DomainPoint> sample_domain(const Domain& domain, std::size_t count, std::uint64_t seed,
                                       double margin = 0.0);

/// Same construction applied to frame derivatives obtained by recomputing the
/// frame at neighbouring points (central differences with one Richardson
/// step, frame vectors sign-aligned to the centre). Used to cross-check the
/// jet-propagated connection data.
AdaptedFrameData adapted_frame_fd(const SurfaceModel& surface, DomainPoint p, double step,
                                  const Tolerances& tol = default_tolerances());

}  // namespace ruledmin
