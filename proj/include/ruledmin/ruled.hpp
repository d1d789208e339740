#pragma once

#include <optional>
#include <vector>

#include "ruledmin/config.hpp"
#include "ruledmin/surface.hpp"

namespace ruledmin {

/// Point (s, p, v) of R x Lambda_g, with v = sum_k t_k e_{k+4}(p).
struct ConePoint {
  double s = 0.0;
  DomainPoint p;
  Eigen::VectorXd t;  // length n - 2

  /// s^2 + |t|^2 = 1 within `tol`.
  bool on_slice(double tol = default_tolerances().slice) const {
    return std::abs(s * s + t.squaredNorm() - 1.0) <= tol;
  }
};

/// Omega^2 = s^2 + |t1 V + t2 W|^2.
double omega_norm(const AdaptedFrameData& frame, const ConePoint& cp);

/// G(s, p, v) = s g(p) + v.
AmbientVector eval_G(const AdaptedFrameData& frame, const ConePoint& cp);
AmbientVector eval_G(const SurfaceModel& surface, const ConePoint& cp,
                     const Tolerances& tol = default_tolerances());

/// Vertex (s = 0, v = 0) or s = 0 with v orthogonal to N_2.
bool is_singular(double s, const AmbientVector& v, const NormalSplit& split, double tol);
bool is_singular(const AdaptedFrameData& frame, const ConePoint& cp,
                 const Tolerances& tol = default_tolerances());
bool is_singular(const SurfaceModel& surface, const ConePoint& cp,
                 const Tolerances& tol = default_tolerances());

/// Horizontal vectors X1, X2 and the orthonormal frame E_0, ..., E_n.
struct HorizontalFrame {
  AmbientVector gx1;  // G_* X_1
  AmbientVector gx2;  // G_* X_2
  double omega = 0.0;
  /// Columns G_* E_0, ..., G_* E_n in the ambient space.
  Eigen::MatrixXd e_frame;
  /// Columns X_1, X_2 in cone coordinates (s, u, v, t_1, ..., t_{n-2}).
  Eigen::MatrixXd x_coords;
  /// Columns E_0, ..., E_n in cone coordinates.
  Eigen::MatrixXd e_coords;
};
HorizontalFrame horizontal_frame(const AdaptedFrameData& frame, const ConePoint& cp,
                                 const Tolerances& tol = default_tolerances());
HorizontalFrame horizontal_frame(const SurfaceModel& surface, const ConePoint& cp,
                                 const Tolerances& tol = default_tolerances());

/// xi = g_*(t1 V + t2 W) + s e3, eta = g_*(t1 Y + t2 Z) + s e4.
struct NormalPair {
  AmbientVector xi;
  AmbientVector eta;
  double omega = 0.0;
};
NormalPair normal_frame(const AdaptedFrameData& frame, const ConePoint& cp,
                        const Tolerances& tol = default_tolerances());
NormalPair normal_frame(const SurfaceModel& surface, const ConePoint& cp,
                        const Tolerances& tol = default_tolerances());

/// Shape operators of the cone in the frame E_0..E_n. Entries are
/// <alpha_G(E_i, E_j), xi> and <alpha_G(E_i, E_j), eta>, i.e. paired with the
/// normals of length Omega; divide by Omega for unit-normal components.
struct ShapeData {
  int n = 0;
  double omega = 0.0;
  double kappa = 0.0;
  Eigen::MatrixXd a_xi;
  Eigen::MatrixXd a_eta;
  std::array<double, 2> phi{};      // t1 a + t2 b
  std::array<double, 2> phi_bar{};  // phi / Omega
  std::array<double, 2> h{};
  std::array<double, 2> r{};        // -s a / Omega
  std::array<double, 2> sb{};       // -s b / Omega
  AmbientVector xi;
  AmbientVector eta;
};
ShapeData shape_operators(const AdaptedFrameData& frame, const ConePoint& cp,
                          const Tolerances& tol = default_tolerances());
ShapeData shape_operators(const SurfaceModel& surface, const ConePoint& cp,
                          const Tolerances& tol = default_tolerances());

/// Assemble the two matrices from the scalar data (used by the family too).
void fill_shape_matrices(ShapeData& d);

struct FdShapeData {
  Eigen::MatrixXd a_xi;
  Eigen::MatrixXd a_eta;
  double omega = 0.0;
  /// Distance of the E-frame vectors from the numerically spanned tangent space.
  double frame_residual = 0.0;
  /// max |<dG/dx_a, xi or eta>| / Omega.
  double normal_residual = 0.0;
};
struct FdOptions {
  double step = 2e-3;
};
/// Second fundamental form of the cone from differences of eval_G along the
/// coordinate curves of (s, u, v, t), expressed in the same E-frame and pairing.
FdShapeData shape_operators_fd(const SurfaceModel& surface, const ConePoint& cp, FdOptions opt = {},
                               const Tolerances& tol = default_tolerances());

struct SecondFormInvariants {
  double norm_sq = 0.0;
  int rank = 0;
  std::optional<double> scalar;             // n(n-1) - norm_sq on the slice
  std::optional<double> normalized_scalar;  // scalar / (n(n-1))
};
SecondFormInvariants second_form_invariants(const ShapeData& shape, const ConePoint& cp,
                                            const Tolerances& tol = default_tolerances(),
                                            bool require_slice = false);
SecondFormInvariants second_form_invariants(const SurfaceModel& surface, const ConePoint& cp,
                                            const Tolerances& tol = default_tolerances(),
                                            bool require_slice = false);

/// s d/ds + sum_k t_k d/dt_k in the E-frame; the cone is flat along it.
Eigen::VectorXd radial_direction(const ConePoint& cp);
/// max |A_xi r|, |A_eta r| over Omega for the radial direction r.
double radial_nullity_residual(const ShapeData& shape, const ConePoint& cp);

/// Numerical rank of the stacked pair [A; B] at threshold rel * sigma_max.
int stacked_rank(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel);

/// Closed-form squared length predicted from K, h and |V|, |W|:
/// (4/Omega^2)(2 - K + |h|^2 + (s^2/Omega^2)(|V|^2 + |W|^2 - 1)).
double length_identity(const AdaptedFrameData& frame, const ShapeData& shape, const ConePoint& cp);

struct CrossSectionReport {
  double max_tangent_error = 0.0;  // |alpha_F(E_i,E_j) . xi_hat - <alpha_g(e_i,e_j), e3>| etc.
  double max_mixed_error = 0.0;    // ruling-tangent entries against -s a, -s b
  double kappa_entry = 0.0;        // alpha_F(E1,E1) . xi_hat at the first sample
  std::size_t points = 0;
  bool pass = false;
};
/// Zero-section check: on s = +-1, t = 0 the cone restricted to the surface
/// directions reproduces alpha_g.
CrossSectionReport cross_section_check(const SurfaceModel& surface, const std::vector<DomainPoint>& sample,
                                       bool use_fd_oracle = true, double tol = 1e-6);

/// Derivatives of xi and eta along d/ds, E_3, E_4, X_1, X_2 (columns in that
/// order, E_4 present for n >= 4).
struct NormalDerivatives {
  Eigen::MatrixXd xi;
  Eigen::MatrixXd eta;
};
/// Closed-form expressions in terms of the frame data.
NormalDerivatives normal_derivatives(const AdaptedFrameData& frame, const ConePoint& cp);
/// Differences of normal_frame along the same coordinate directions.
NormalDerivatives normal_derivatives_fd(const SurfaceModel& surface, const ConePoint& cp, double step = 1e-3,
                                        const Tolerances& tol = default_tolerances());

}  // namespace ruledmin
