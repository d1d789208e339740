#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ruledmin/config.hpp"
#include "ruledmin/ruled.hpp"
#include "ruledmin/surface.hpp"

namespace ruledmin {

/// Rotation and reflection operators acting on the cone's tangent and normal
/// spaces, written in the frame E_0, ..., E_n and the normal basis (xi, eta).
struct RotationOperators {
  double theta = 0.0;
  int n = 0;
  /// Orientation-preserving rotation of the normal plane in (xi, eta) coordinates.
  Eigen::Matrix2d normal_rotation;
  /// Reflection on the horizontal plane span{E_1, E_2}.
  Eigen::Matrix2d reflection;
  /// cos(theta) I + sin(theta) J on E_0..E_n, where J is the complex
  /// structure on span{E_1, E_2} and the identity elsewhere.
  Eigen::MatrixXd complex_rotation;

  static RotationOperators at(double theta, int n);
};

/// Complex structure on span{E_1, E_2} (E_1 -> E_2), identity on the other E_a.
Eigen::MatrixXd horizontal_complex_structure(int n);

/// Traceless form with nullity on E_0 and the rulings, returned as (xi, eta)
/// coefficients: (E1,E1) -> xi / Omega^2 = -(E2,E2), (E1,E2) -> mixed_sign * eta / Omega^2.
Eigen::Vector2d traceless_form(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double omega,
                               double mixed_sign = -1.0);

/// One member of the associated family at a cone point.
struct FamilyMember {
  double theta = 0.0;
  int n = 0;
  double s = 0.0;
  double omega = 0.0;
  double kappa = 0.0;
  std::array<double, 2> a{};
  std::array<double, 2> b{};
  std::array<double, 2> phi{};
  std::array<double, 2> h{};
  /// Shape operators paired with xi_theta, eta_theta (length Omega).
  Eigen::MatrixXd a_xi;
  Eigen::MatrixXd a_eta;
  /// Normal pair in the rotated adapted frame (g_theta, e_1, e_2, e_3^theta, ..., e_{n+2}^theta).
  Eigen::VectorXd xi;
  Eigen::VectorXd eta;

  /// Same member as ShapeData, so invariants and ranks reuse the ruled code.
  ShapeData as_shape() const;
};

/// Rotate the base data by theta. Requires a 1-isotropic frame.
FamilyMember rotate_family(const AdaptedFrameData& frame, const ShapeData& base, const ConePoint& cp,
                           double theta, const Tolerances& tol = default_tolerances());
FamilyMember rotate_family(const SurfaceModel& surface, const ConePoint& cp, double theta,
                           const Tolerances& tol = default_tolerances());
/// Rotate an existing member further; composes additively in theta.
FamilyMember rotate_family(const FamilyMember& member, double theta);

/// Sum of squared entries of the pair, divided by Omega^2 (= |alpha|^2 of the cone).
double pair_norm_sq(const Eigen::MatrixXd& a_xi, const Eigen::MatrixXd& a_eta, double omega);

/// Both sides of the second-fundamental-form relation between G and G_theta
/// for one pair of tangent vectors, in (xi, eta) coefficients pulled back by
/// the normal isometry.
///
/// `rhs_printed` uses the form with the half-angle rotation applied to X and
/// (E1,E2) -> -eta / Omega^2. `rhs_consistent` applies J after the half-angle
/// rotation and uses (E1,E2) -> +eta / Omega^2; it is the variant that agrees
/// with the rotated shape operators.
struct FormsCheck {
  Eigen::Vector2d lhs;
  Eigen::Vector2d rhs_printed;
  Eigen::Vector2d rhs_consistent;
  double printed_residual = 0.0;     // Omega * max |lhs - rhs_printed|
  double consistent_residual = 0.0;  // Omega * max |lhs - rhs_consistent|
};
FormsCheck verify_forms_relation(const ShapeData& base, const FamilyMember& member,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& y);
/// Left-hand side taken from arbitrary matrices (e.g. an integrated oracle).
FormsCheck verify_forms_relation(const ShapeData& base, double theta, const Eigen::MatrixXd& a_xi_theta,
                                 const Eigen::MatrixXd& a_eta_theta, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y);

/// R(X,Y,Z,W) = <alpha(X,W), alpha(Y,Z)> - <alpha(X,Z), alpha(Y,W)> on E_0..E_n.
std::vector<double> curvature_tensor(const Eigen::MatrixXd& a_xi, const Eigen::MatrixXd& a_eta, double omega);

struct GaussPoint {
  ConePoint point;
  double residual = 0.0;
};
struct GaussReport {
  double theta = 0.0;
  double max_residual = 0.0;
  std::vector<GaussPoint> points;
};
/// Compare the Gauss-equation curvature tensor of each member with the base.
/// `kappa_perturbation` is added to the member's kappa (fault injection).
GaussReport gauss_compatibility(const SurfaceModel& surface, double theta, const std::vector<ConePoint>& sample,
                                double kappa_perturbation = 0.0, const Tolerances& tol = default_tolerances());

/// Seeded non-singular on-slice cone points over a domain sample.
std::vector<ConePoint> sample_cone_points(const SurfaceModel& surface, std::size_t count, std::uint64_t seed,
                                          double margin = 0.05, const Tolerances& tol = default_tolerances());

/// Coefficient matrix C with d(frame) = frame * C along the coordinate
/// displacement (du, dv), for the member whose second fundamental form is
/// alpha(J_theta X, Y). Frame columns: g, g_* e_1, g_* e_2, e_3, ..., e_{n+2}.
Eigen::MatrixXd family_coefficients(const AdaptedFrameData& frame, double theta, double du, double dv);

/// Integrate the frame equation from `from` to `to` along a straight segment
/// (RK4, polar retraction after every step). Returns the propagator P with
/// frame(to) = frame(from) * P.
Eigen::MatrixXd propagate_family_frame(const SurfaceModel& surface, double theta, DomainPoint from, DomainPoint to,
                                       int substeps, const Tolerances& tol = default_tolerances());

struct GridSpec {
  int nu = 64;
  int nv = 64;
  int substeps = 12;
};

/// g_theta sampled on a rectangular grid covering the surface domain.
struct FamilyGrid {
  double theta = 0.0;
  int nu = 0;
  int nv = 0;
  std::vector<double> u;
  std::vector<double> v;
  /// Ambient frames (g_theta, g_theta* e_1, g_theta* e_2, phi_theta e_3, ...), index i * nv + j.
  std::vector<Eigen::MatrixXd> frames;
  double max_loop_closure = 0.0;
  std::size_t cells = 0;

  const Eigen::MatrixXd& frame(int i, int j) const { return frames[static_cast<std::size_t>(i * nv + j)]; }
  AmbientVector position(int i, int j) const { return frame(i, j).col(0); }
  DomainPoint node(int i, int j) const {
    return {u[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]};
  }
};

/// Initial frame at the grid origin: the base adapted frame with e_3, e_4
/// rotated by theta.
Eigen::MatrixXd initial_family_frame(const AdaptedFrameData& base, double theta);

/// Throws integration-diverged when some cell fails to close within tol.loop_closure.
FamilyGrid integrate_surface_family(const SurfaceModel& surface, double theta, GridSpec grid = {},
                                    const Tolerances& tol = default_tolerances());

/// Frames of g_theta on a small square stencil around one point, integrated
/// from a known frame there, with the interpolating polynomial surface.
struct FamilyPatch {
  DomainPoint centre;
  double step = 0.0;
  int half = 2;
  std::vector<Eigen::MatrixXd> frames;  // (2 half + 1)^2, index (i + half) * (2 half + 1) + (j + half)
  /// Polynomial interpolant of frame column `column` as a Taylor field at (u, v).
  TaylorVec interpolate(int column, const Taylor2& u, const Taylor2& v) const;
  /// g_theta near the centre as a surface model (coordinate gauge).
  SurfaceModel surface_model() const;
};
FamilyPatch integrate_family_patch(const SurfaceModel& surface, double theta, DomainPoint centre,
                                   const Eigen::MatrixXd& centre_frame, double step = 1e-2, int substeps = 4,
                                   const Tolerances& tol = default_tolerances());

/// Metric and curvature ellipse of g_theta at grid nodes, measured on local
/// interpolants of the integrated frames.
struct FamilyNodeCheck {
  DomainPoint point;
  double metric_error = 0.0;  // max |g_theta metric - g metric|
  double kappa = 0.0;
  double mu = 0.0;
  double kappa_error = 0.0;   // |kappa_theta - kappa_base|
  double circularity = 0.0;   // |kappa_theta - mu_theta|
};
struct FamilyIntegrationReport {
  double theta = 0.0;
  double max_loop_closure = 0.0;
  double max_metric_error = 0.0;
  double max_kappa_error = 0.0;
  double max_circularity = 0.0;
  double base_deviation = 0.0;  // max |g_theta - g| over nodes (meaningful at theta = 0)
  std::vector<FamilyNodeCheck> nodes;
};
FamilyIntegrationReport check_integrated_family(const SurfaceModel& surface, const FamilyGrid& grid,
                                                std::size_t node_count, std::uint64_t seed,
                                                const Tolerances& tol = default_tolerances());

/// Shape operators of G_theta from second differences of the integrated
/// cone map, in the base E-frame and paired with the transported xi_theta, eta_theta.
struct IntegratedShapeData {
  Eigen::MatrixXd a_xi;
  Eigen::MatrixXd a_eta;
  double omega = 0.0;
  double metric_residual = 0.0;  // |E-frame Gram matrix under G_theta - I|
  double normal_residual = 0.0;  // tangential part of xi_theta, eta_theta over Omega
  double xi_norm = 0.0;
  double eta_norm = 0.0;
};
IntegratedShapeData family_shape_operators_integrated(const SurfaceModel& surface, double theta,
                                                      const ConePoint& cp, double step = 1e-2,
                                                      const Tolerances& tol = default_tolerances());

/// Congruence test between F_theta and F_g composed with the intrinsic
/// rotation of the ruling coordinates by `ruling_angle` (default -theta).
struct EquivarianceReport {
  double theta = 0.0;
  double ruling_angle = 0.0;
  std::size_t points = 0;
  double rms = 0.0;
  double max_deviation = 0.0;
  double determinant = 0.0;  // of the fitted orthogonal map
};
EquivarianceReport equivariance_check(const SurfaceModel& surface, const FamilyGrid& grid, std::size_t points,
                                      std::uint64_t seed, std::optional<double> ruling_angle = std::nullopt,
                                      const Tolerances& tol = default_tolerances());
/// Integrates the family on `grid` first.
EquivarianceReport equivariance_check(const SurfaceModel& surface, double theta, std::size_t points,
                                      std::uint64_t seed, GridSpec grid = {},
                                      const Tolerances& tol = default_tolerances());

/// Whether the surface passes the pseudoholomorphic measurement on a sample.
bool measured_pseudoholomorphic(const SurfaceModel& surface, const Tolerances& tol = default_tolerances());

}  // namespace ruledmin
