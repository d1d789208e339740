#include "ruledmin/ruled.hpp"

#include <cmath>
#include <map>
#include <string>

#include "ruledmin/error.hpp"
#include "ruledmin/jets.hpp"

namespace ruledmin {

namespace {

void check_cone_point(int n, const ConePoint& cp) {
  if (cp.t.size() != n - 2)
    throw GeometryError(ErrorKind::invalid_argument,
                        "ruling coordinates must have length " + std::to_string(n - 2));
}

double tcoord(const ConePoint& cp, int k) {
  return k <= cp.t.size() ? cp.t[k - 1] : 0.0;
}

std::array<double, 2> phi_of(const AdaptedFrameData& f, const ConePoint& cp) {
  const double t1 = tcoord(cp, 1), t2 = tcoord(cp, 2);
  return {t1 * f.a(1) + t2 * f.b(1), t1 * f.a(2) + t2 * f.b(2)};
}

std::array<double, 2> psi_of(const AdaptedFrameData& f, const ConePoint& cp) {
  const double t1 = tcoord(cp, 1), t2 = tcoord(cp, 2);
  return {t1 * f.c(1) + t2 * f.d(1), t1 * f.c(2) + t2 * f.d(2)};
}

// Frame column e_i, or zero when the index exceeds the codimension.
AmbientVector col(const AdaptedFrameData& f, int i) {
  if (i < f.frame.cols()) return f.frame.col(i);
  return AmbientVector::Zero(f.frame.rows());
}

// J(x1 e1 + x2 e2) = x1 e2 - x2 e1.
AmbientVector rotate_tangent(const AdaptedFrameData& f, const AmbientVector& x) {
  const double x1 = x.dot(f.e(1)), x2 = x.dot(f.e(2));
  return x1 * f.e(2) - x2 * f.e(1);
}

void require_isotropic(const AdaptedFrameData& f, const Tolerances& tol) {
  if (std::abs(f.kappa - f.mu) > tol.isotropy * std::max(f.kappa, 1.0))
    throw GeometryError(ErrorKind::isotropy_required, "first curvature ellipse is not a circle");
}

double checked_omega(const AdaptedFrameData& f, const ConePoint& cp, const Tolerances& tol) {
  const double om = omega_norm(f, cp);
  if (om <= tol.rank) throw GeometryError(ErrorKind::singular_point, "Omega vanishes at this cone point");
  return om;
}

}  // namespace

double omega_norm(const AdaptedFrameData& frame, const ConePoint& cp) {
  check_cone_point(frame.n, cp);
  const auto phi = phi_of(frame, cp);
  return std::sqrt(cp.s * cp.s + phi[0] * phi[0] + phi[1] * phi[1]);
}

AmbientVector eval_G(const AdaptedFrameData& frame, const ConePoint& cp) {
  check_cone_point(frame.n, cp);
  AmbientVector out = cp.s * frame.position();
  for (int k = 1; k <= frame.n - 2; ++k) out += cp.t[k - 1] * frame.e(k + 4);
  return out;
}

AmbientVector eval_G(const SurfaceModel& surface, const ConePoint& cp, const Tolerances& tol) {
  return eval_G(adapted_frame_vectors(surface, cp.p, tol), cp);
}

bool is_singular(double s, const AmbientVector& v, const NormalSplit& split, double tol) {
  if (std::abs(s) > tol) return false;
  if (v.norm() <= tol) return true;
  double proj2 = 0.0;
  if (split.levels.size() >= 2)
    for (const auto& b : split.levels[1]) proj2 += std::pow(v.dot(b), 2);
  return std::sqrt(proj2) <= tol;
}

bool is_singular(const AdaptedFrameData& frame, const ConePoint& cp, const Tolerances& tol) {
  const AmbientVector v = eval_G(frame, cp) - cp.s * frame.position();
  return is_singular(cp.s, v, frame.split, tol.rank);
}

bool is_singular(const SurfaceModel& surface, const ConePoint& cp, const Tolerances& tol) {
  return is_singular(adapted_frame_vectors(surface, cp.p, tol), cp, tol);
}

HorizontalFrame horizontal_frame(const AdaptedFrameData& f, const ConePoint& cp, const Tolerances& tol) {
  const double om = checked_omega(f, cp, tol);
  const auto phi = phi_of(f, cp);
  const auto psi = psi_of(f, cp);
  const int n = f.n;
  HorizontalFrame out;
  out.omega = om;
  out.gx1 = cp.s * f.e(1) - phi[0] * f.e(3) - psi[0] * f.e(4);
  out.gx2 = cp.s * f.e(2) - phi[1] * f.e(3) - psi[1] * f.e(4);
  out.e_frame.resize(n + 3, n + 1);
  out.e_frame.col(0) = f.position();
  out.e_frame.col(1) = out.gx1 / om;
  out.e_frame.col(2) = out.gx2 / om;
  for (int j = 3; j <= n; ++j) out.e_frame.col(j) = f.e(j + 2);

  out.x_coords = Eigen::MatrixXd::Zero(n + 1, 2);
  for (int i = 1; i <= 2; ++i) {
    out.x_coords(1, i - 1) = f.tangent_coeffs(i - 1, 0);
    out.x_coords(2, i - 1) = f.tangent_coeffs(i - 1, 1);
    for (int k = 1; k <= n - 2; ++k) {
      double acc = 0.0;
      for (int l = 1; l <= n - 2; ++l) acc += cp.t[l - 1] * f.omega(k + 4, l + 4, i);
      out.x_coords(2 + k, i - 1) = acc;
    }
  }
  out.e_coords = Eigen::MatrixXd::Zero(n + 1, n + 1);
  out.e_coords(0, 0) = 1.0;
  out.e_coords.col(1) = out.x_coords.col(0) / om;
  out.e_coords.col(2) = out.x_coords.col(1) / om;
  for (int j = 3; j <= n; ++j) out.e_coords(j, j) = 1.0;
  return out;
}

HorizontalFrame horizontal_frame(const SurfaceModel& surface, const ConePoint& cp, const Tolerances& tol) {
  return horizontal_frame(adapted_frame(surface, cp.p, tol), cp, tol);
}

NormalPair normal_frame(const AdaptedFrameData& f, const ConePoint& cp, const Tolerances& tol) {
  NormalPair out;
  out.omega = checked_omega(f, cp, tol);
  const auto phi = phi_of(f, cp);
  const auto psi = psi_of(f, cp);
  out.xi = f.tangent(phi[0], phi[1]) + cp.s * f.e(3);
  out.eta = f.tangent(psi[0], psi[1]) + cp.s * f.e(4);
  return out;
}

NormalPair normal_frame(const SurfaceModel& surface, const ConePoint& cp, const Tolerances& tol) {
  return normal_frame(adapted_frame(surface, cp.p, tol), cp, tol);
}

void fill_shape_matrices(ShapeData& d) {
  const int size = d.n + 1;
  Eigen::MatrixXd ax = Eigen::MatrixXd::Zero(size, size);
  Eigen::MatrixXd ae = Eigen::MatrixXd::Zero(size, size);
  const double k = d.kappa;
  const auto& pb = d.phi_bar;
  const auto& h = d.h;
  ax(0, 1) = pb[0];
  ax(0, 2) = pb[1];
  ax(1, 1) = h[0] + k;
  ax(1, 2) = h[1];
  ax(2, 2) = -h[0] - k;
  ax(1, 3) = d.r[0];
  ax(2, 3) = d.r[1];
  ae(0, 1) = pb[1];
  ae(0, 2) = -pb[0];
  ae(1, 1) = h[1];
  ae(1, 2) = k - h[0];
  ae(2, 2) = -h[1];
  ae(1, 3) = d.r[1];
  ae(2, 3) = -d.r[0];
  if (d.n >= 4) {
    ax(1, 4) = d.sb[0];
    ax(2, 4) = d.sb[1];
    ae(1, 4) = d.sb[1];
    ae(2, 4) = -d.sb[0];
  }
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < i; ++j) {
      ax(i, j) = ax(j, i);
      ae(i, j) = ae(j, i);
    }
  d.a_xi = ax;
  d.a_eta = ae;
}

ShapeData shape_operators(const AdaptedFrameData& f, const ConePoint& cp, const Tolerances& tol) {
  require_isotropic(f, tol);
  ShapeData d;
  d.n = f.n;
  d.omega = checked_omega(f, cp, tol);
  d.kappa = f.kappa;
  d.phi = phi_of(f, cp);
  const double om = d.omega, s = cp.s;
  const double t1 = tcoord(cp, 1), t2 = tcoord(cp, 2), t3 = tcoord(cp, 3), t4 = tcoord(cp, 4);
  for (int i = 1; i <= 2; ++i) {
    const auto k = static_cast<std::size_t>(i - 1);
    d.phi_bar[k] = d.phi[k] / om;
    d.r[k] = -s * f.a(i) / om;
    d.sb[k] = -s * f.b(i) / om;
    const double B = f.omega(1, 2, i) + f.omega(3, 4, i);
    const double w56 = f.omega(5, 6, i);
    double bracket = t1 * (f.da(1, i) - f.a(2) * B - f.b(1) * w56);
    if (t2 != 0.0) bracket += t2 * (f.db(1, i) - f.b(2) * B + f.a(1) * w56);
    if (t3 != 0.0) bracket += t3 * (f.a(1) * f.omega(5, 7, i) + f.b(1) * f.omega(6, 7, i));
    if (t4 != 0.0) bracket += t4 * (f.a(1) * f.omega(5, 8, i) + f.b(1) * f.omega(6, 8, i));
    d.h[k] = -(s / (om * om)) * bracket;
  }
  fill_shape_matrices(d);
  const NormalPair np = normal_frame(f, cp, tol);
  d.xi = np.xi;
  d.eta = np.eta;
  return d;
}

ShapeData shape_operators(const SurfaceModel& surface, const ConePoint& cp, const Tolerances& tol) {
  return shape_operators(adapted_frame(surface, cp.p, tol), cp, tol);
}

FdShapeData shape_operators_fd(const SurfaceModel& surface, const ConePoint& cp, FdOptions opt,
                               const Tolerances& tol) {
  const AdaptedFrameData centre = adapted_frame(surface, cp.p, tol);
  check_cone_point(centre.n, cp);
  const int n = centre.n;
  const int nc = n + 1;  // cone coordinates (s, u, v, t_1..t_{n-2})
  const double h = opt.step;
  if (!(h > 0.0)) throw GeometryError(ErrorKind::precondition_violation, "step must be positive");
  double om = 0.0;
  try {
    om = checked_omega(centre, cp, tol);
  } catch (const GeometryError&) {
    throw GeometryError(ErrorKind::oracle_unavailable, "cone point is singular");
  }
  const Domain& dom = surface.domain();
  for (double du : {-2.0 * h, 2.0 * h})
    if (!dom.contains({cp.p.u + du, cp.p.v + du}) || !dom.contains({cp.p.u + du, cp.p.v - du}))
      throw GeometryError(ErrorKind::oracle_unavailable, "difference stencil leaves the domain");

  std::map<std::pair<long, long>, Eigen::MatrixXd> frames;
  auto frame_at = [&](long iu, long iv) -> const Eigen::MatrixXd& {
    auto key = std::make_pair(iu, iv);
    auto it = frames.find(key);
    if (it != frames.end()) return it->second;
    const DomainPoint q{cp.p.u + iu * 0.5 * h, cp.p.v + iv * 0.5 * h};
    Eigen::MatrixXd fr = adapted_frame_vectors(surface, q, tol).frame;
    for (int i = 1; i < fr.cols(); ++i)
      if (fr.col(i).dot(centre.frame.col(i)) < 0.0) fr.col(i) *= -1.0;
    return frames.emplace(key, std::move(fr)).first->second;
  };
  // G at the base coordinates displaced by (half-step units) offsets.
  auto G_at = [&](const Eigen::VectorXi& off) {
    const Eigen::MatrixXd& fr = frame_at(off[1], off[2]);
    const double s = cp.s + off[0] * 0.5 * h;
    AmbientVector out = s * fr.col(0);
    for (int k = 1; k <= n - 2; ++k) out += (cp.t[k - 1] + off[2 + k] * 0.5 * h) * fr.col(k + 4);
    return out;
  };
  auto unit = [&](int a, int scale) {
    Eigen::VectorXi v = Eigen::VectorXi::Zero(nc);
    if (a >= 0) v[a] = scale;
    return v;
  };

  // First derivatives (five-point) and Hessian (Richardson on the
  // second-order stencils at spacings h and h/2; offsets in units of h/2).
  Eigen::MatrixXd J(n + 3, nc);
  for (int a = 0; a < nc; ++a)
    J.col(a) = (-G_at(unit(a, 4)) + 8.0 * G_at(unit(a, 2)) - 8.0 * G_at(unit(a, -2)) + G_at(unit(a, -4))) /
               (12.0 * h);
  std::vector<AmbientVector> H(static_cast<std::size_t>(nc * nc));
  const AmbientVector g0 = G_at(unit(-1, 0));
  for (int a = 0; a < nc; ++a) {
    for (int b = a; b < nc; ++b) {
      auto second = [&](int m) {  // spacing m half-steps
        const double sp = m * 0.5 * h;
        if (a == b)
          return AmbientVector((G_at(unit(a, m)) - 2.0 * g0 + G_at(unit(a, -m))) / (sp * sp));
        Eigen::VectorXi pp = unit(a, m) + unit(b, m), pm = unit(a, m) - unit(b, m);
        return AmbientVector((G_at(pp) - G_at(pm) - G_at(-pm) + G_at(-pp)) / (4.0 * sp * sp));
      };
      const AmbientVector hv = (4.0 * second(1) - second(2)) / 3.0;
      H[static_cast<std::size_t>(a * nc + b)] = hv;
      H[static_cast<std::size_t>(b * nc + a)] = hv;
    }
  }

  const HorizontalFrame hf = horizontal_frame(centre, cp, tol);
  const NormalPair np = normal_frame(centre, cp, tol);
  FdShapeData out;
  out.omega = om;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
  Eigen::MatrixXd c(nc, nc);
  for (int i = 0; i < nc; ++i) {
    c.col(i) = qr.solve(hf.e_frame.col(i));
    out.frame_residual = std::max(out.frame_residual, (J * c.col(i) - hf.e_frame.col(i)).norm());
  }
  out.normal_residual = std::max((J.transpose() * np.xi).cwiseAbs().maxCoeff(),
                                 (J.transpose() * np.eta).cwiseAbs().maxCoeff()) / om;
  out.a_xi = Eigen::MatrixXd::Zero(nc, nc);
  out.a_eta = Eigen::MatrixXd::Zero(nc, nc);
  for (int i = 0; i < nc; ++i) {
    for (int j = i; j < nc; ++j) {
      AmbientVector alpha = AmbientVector::Zero(n + 3);
      for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b) {
          const double w = c(a, i) * c(b, j);
          if (w != 0.0) alpha += w * H[static_cast<std::size_t>(a * nc + b)];
        }
      out.a_xi(i, j) = out.a_xi(j, i) = alpha.dot(np.xi);
      out.a_eta(i, j) = out.a_eta(j, i) = alpha.dot(np.eta);
    }
  }
  return out;
}

Eigen::VectorXd radial_direction(const ConePoint& cp) {
  const auto k = cp.t.size();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(k + 3);
  r[0] = cp.s;
  r.tail(k) = cp.t;
  return r;
}

double radial_nullity_residual(const ShapeData& shape, const ConePoint& cp) {
  const Eigen::VectorXd r = radial_direction(cp);
  return std::max((shape.a_xi * r).cwiseAbs().maxCoeff(), (shape.a_eta * r).cwiseAbs().maxCoeff()) / shape.omega;
}

int stacked_rank(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel) {
  Eigen::MatrixXd st(a.rows() + b.rows(), a.cols());
  st << a, b;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(st);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rel * sv[0]) ++r;
  return r;
}

SecondFormInvariants second_form_invariants(const ShapeData& d, const ConePoint& cp, const Tolerances& tol,
                                            bool require_slice) {
  SecondFormInvariants out;
  const double om2 = d.omega * d.omega;
  out.norm_sq = (d.a_xi.squaredNorm() + d.a_eta.squaredNorm()) / om2;
  out.rank = stacked_rank(d.a_xi / d.omega, d.a_eta / d.omega, tol.rank);
  const bool slice = cp.on_slice(tol.slice);
  if (require_slice && !slice)
    throw GeometryError(ErrorKind::slice_required, "scalar curvature is defined on the unit slice only");
  if (slice) {
    const double nn = d.n * (d.n - 1.0);
    out.scalar = nn - out.norm_sq;
    out.normalized_scalar = *out.scalar / nn;
  }
  return out;
}

SecondFormInvariants second_form_invariants(const SurfaceModel& surface, const ConePoint& cp,
                                            const Tolerances& tol, bool require_slice) {
  return second_form_invariants(shape_operators(surface, cp, tol), cp, tol, require_slice);
}

double length_identity(const AdaptedFrameData& f, const ShapeData& d, const ConePoint& cp) {
  const double om2 = d.omega * d.omega;
  const double vw = f.a(1) * f.a(1) + f.a(2) * f.a(2) + f.b(1) * f.b(1) + f.b(2) * f.b(2);
  return (4.0 / om2) * (2.0 - f.gauss_curvature + d.h[0] * d.h[0] + d.h[1] * d.h[1] +
                        (cp.s * cp.s / om2) * (vw - 1.0));
}

CrossSectionReport cross_section_check(const SurfaceModel& surface, const std::vector<DomainPoint>& sample,
                                       bool use_fd_oracle, double tol) {
  CrossSectionReport rep;
  const int n = surface.n();
  for (DomainPoint p : sample) {
    const AdaptedFrameData f = adapted_frame(surface, p);
    const JetTable jet = analytic_jet(surface, p, 2);
    // alpha_g(e_i, e_j) against e3, e4 straight from the Hessian of g.
    auto ag = [&](int i, int j, int nu) {
      const Eigen::Vector2d x = f.tangent_coeffs.row(i - 1).transpose();
      const Eigen::Vector2d y = f.tangent_coeffs.row(j - 1).transpose();
      const AmbientVector hess = x[0] * y[0] * jet(2, 0) + (x[0] * y[1] + x[1] * y[0]) * jet(1, 1) +
                                 x[1] * y[1] * jet(0, 2);
      return hess.dot(f.e(nu));
    };
    for (double s : {1.0, -1.0}) {
      ConePoint cp{s, p, Eigen::VectorXd::Zero(n - 2)};
      Eigen::MatrixXd ax, ae;
      double om = 1.0;
      if (use_fd_oracle) {
        const FdShapeData fd = shape_operators_fd(surface, cp);
        ax = fd.a_xi;
        ae = fd.a_eta;
        om = fd.omega;
      } else {
        const ShapeData sd = shape_operators(f, cp);
        ax = sd.a_xi;
        ae = sd.a_eta;
        om = sd.omega;
      }
      // alpha_G(E_i, E_j) = s alpha_g(e_i, e_j) and xi_hat = s e3, so the sign cancels.
      for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 2; ++j) {
          rep.max_tangent_error = std::max(rep.max_tangent_error, std::abs(ax(i, j) / om - ag(i, j, 3)));
          rep.max_tangent_error = std::max(rep.max_tangent_error, std::abs(ae(i, j) / om - ag(i, j, 4)));
        }
      for (int i = 1; i <= 2; ++i) {
        rep.max_mixed_error = std::max(rep.max_mixed_error, std::abs(ax(i, 3) + s * f.a(i) / om));
        if (n >= 4) rep.max_mixed_error = std::max(rep.max_mixed_error, std::abs(ax(i, 4) + s * f.b(i) / om));
      }
      if (rep.points == 0 && s > 0) rep.kappa_entry = ax(1, 1) / om;
    }
    ++rep.points;
  }
  rep.pass = rep.points > 0 && rep.max_tangent_error <= tol && rep.max_mixed_error <= tol;
  return rep;
}

NormalDerivatives normal_derivatives(const AdaptedFrameData& f, const ConePoint& cp) {
  check_cone_point(f.n, cp);
  const int n = f.n;
  const double s = cp.s, l = f.lambda, sg = 1.0 / l, k = f.kappa;
  const double t1 = tcoord(cp, 1), t2 = tcoord(cp, 2), t3 = tcoord(cp, 3), t4 = tcoord(cp, 4);
  const auto phi = phi_of(f, cp);
  const auto psi = psi_of(f, cp);
  const DualFields df = dual_fields(f);
  const AmbientVector w = t1 * df.V + t2 * df.W;
  const AmbientVector Jw = rotate_tangent(f, w), JV = rotate_tangent(f, df.V), JW = rotate_tangent(f, df.W);
  auto dphi = [&](int j, int i) { return t1 * f.da(j, i) + t2 * f.db(j, i); };
  auto dpsi = [&](int j, int i) { return t1 * f.dc(j, i) + t2 * f.dd(j, i); };
  auto Gi = [&](int i) { return t2 * f.omega(5, 6, i) + t3 * f.omega(5, 7, i) + t4 * f.omega(5, 8, i); };
  auto Hi = [&](int i) { return -t1 * f.omega(5, 6, i) + t3 * f.omega(6, 7, i) + t4 * f.omega(6, 8, i); };
  const AmbientVector g = f.position(), e1 = f.e(1), e2 = f.e(2), e3 = f.e(3), e4 = f.e(4);
  const AmbientVector e5 = col(f, 5), e6 = col(f, 6);

  const int cols = n >= 4 ? 5 : 4;
  NormalDerivatives out;
  out.xi.resize(n + 3, cols);
  out.eta.resize(n + 3, cols);
  int c = 0;
  out.xi.col(c) = e3;
  out.eta.col(c++) = e4;
  out.xi.col(c) = df.V;
  out.eta.col(c++) = df.Y;
  if (n >= 4) {
    out.xi.col(c) = df.W;
    out.eta.col(c++) = df.Z;
  }
  out.xi.col(c) = (dphi(1, 1) - s * k) * e1 + dphi(2, 1) * e2 + f.omega(1, 2, 1) * Jw + Gi(1) * df.V +
                  Hi(1) * df.W + k * phi[0] * e3 + (s * f.omega(3, 4, 1) + l * k * phi[1]) * e4 +
                  s * f.a(1) * e5 + s * f.b(1) * e6 - phi[0] * g;
  out.eta.col(c++) = dpsi(1, 1) * e1 + (dpsi(2, 1) - s * l * k) * e2 + sg * f.omega(1, 2, 1) * w -
                     sg * Gi(1) * JV - sg * Hi(1) * JW - (s * f.omega(3, 4, 1) - k * psi[0]) * e3 +
                     l * k * psi[1] * e4 + s * sg * f.a(2) * e5 + s * sg * f.b(2) * e6 - psi[0] * g;
  out.xi.col(c) = dphi(1, 2) * e1 + (dphi(2, 2) + s * k) * e2 + f.omega(1, 2, 2) * Jw + Gi(2) * df.V +
                  Hi(2) * df.W - k * phi[1] * e3 + (s * f.omega(3, 4, 2) + l * k * phi[0]) * e4 +
                  s * f.a(2) * e5 + s * f.b(2) * e6 - phi[1] * g;
  out.eta.col(c) = (dpsi(1, 2) - s * l * k) * e1 + dpsi(2, 2) * e2 + sg * f.omega(1, 2, 2) * w -
                   sg * Gi(2) * JV - sg * Hi(2) * JW - (s * f.omega(3, 4, 2) + k * psi[1]) * e3 +
                   l * k * psi[0] * e4 - s * sg * f.a(1) * e5 - s * sg * f.b(1) * e6 - psi[1] * g;
  return out;
}

NormalDerivatives normal_derivatives_fd(const SurfaceModel& surface, const ConePoint& cp, double step,
                                        const Tolerances& tol) {
  const AdaptedFrameData centre = adapted_frame(surface, cp.p, tol);
  check_cone_point(centre.n, cp);
  const int n = centre.n;
  const double t1 = tcoord(cp, 1), t2 = tcoord(cp, 2);
  // xi and eta as fields of (u, v) at fixed s and t.
  auto fields = [&](DomainPoint q) {
    const AdaptedFrameData f = adapted_frame(surface, q, tol);
    const DualFields df = dual_fields(f);
    return std::make_pair(AmbientVector(t1 * df.V + t2 * df.W + cp.s * f.e(3)),
                          AmbientVector(t1 * df.Y + t2 * df.Z + cp.s * f.e(4)));
  };
  std::array<std::pair<AmbientVector, AmbientVector>, 2> d;
  for (int c = 0; c < 2; ++c) {
    auto at = [&](double m) {
      return fields(c == 0 ? DomainPoint{cp.p.u + m * step, cp.p.v} : DomainPoint{cp.p.u, cp.p.v + m * step});
    };
    const auto p2 = at(2), p1 = at(1), m1 = at(-1), m2 = at(-2);
    d[static_cast<std::size_t>(c)] = {(-p2.first + 8.0 * p1.first - 8.0 * m1.first + m2.first) / (12.0 * step),
                                      (-p2.second + 8.0 * p1.second - 8.0 * m1.second + m2.second) / (12.0 * step)};
  }
  const DualFields df = dual_fields(centre);
  const HorizontalFrame hf = horizontal_frame(centre, cp, tol);
  // Linear in s and t: those partials are read off directly.
  auto push = [&](const Eigen::VectorXd& x, AmbientVector& xi, AmbientVector& eta) {
    xi = x[0] * centre.e(3) + x[1] * d[0].first + x[2] * d[1].first;
    eta = x[0] * centre.e(4) + x[1] * d[0].second + x[2] * d[1].second;
    if (n >= 3) {
      xi += x[3] * df.V;
      eta += x[3] * df.Y;
    }
    if (n >= 4) {
      xi += x[4] * df.W;
      eta += x[4] * df.Z;
    }
  };
  const int cols = n >= 4 ? 5 : 4;
  NormalDerivatives out;
  out.xi.resize(n + 3, cols);
  out.eta.resize(n + 3, cols);
  std::vector<Eigen::VectorXd> dirs;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 1);
  e[0] = 1.0;
  dirs.push_back(e);
  for (int j = 3; j <= std::min(n, 4); ++j) {
    e.setZero();
    e[j] = 1.0;
    dirs.push_back(e);
  }
  dirs.push_back(hf.x_coords.col(0));
  dirs.push_back(hf.x_coords.col(1));
  for (int c = 0; c < cols; ++c) {
    AmbientVector xi, eta;
    push(dirs[static_cast<std::size_t>(c)], xi, eta);
    out.xi.col(c) = xi;
    out.eta.col(c) = eta;
  }
  return out;
}

}  // namespace ruledmin
