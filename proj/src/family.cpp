#include "ruledmin/family.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ruledmin/catalog.hpp"
#include "ruledmin/error.hpp"

namespace ruledmin {

namespace {

std::array<double, 2> rotated(const std::array<double, 2>& x, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {x[0] * c + x[1] * s, x[1] * c - x[0] * s};
}

void fill_member(FamilyMember& m) {
  ShapeData d = m.as_shape();
  m.a_xi = d.a_xi;
  m.a_eta = d.a_eta;
  const int dim = m.n + 3;
  m.xi = Eigen::VectorXd::Zero(dim);
  m.eta = Eigen::VectorXd::Zero(dim);
  m.xi[1] = m.phi[0];
  m.xi[2] = m.phi[1];
  m.xi[3] = m.s;
  m.eta[1] = m.phi[1];
  m.eta[2] = -m.phi[0];
  m.eta[4] = m.s;
}

Eigen::Vector2d pair_values(const Eigen::MatrixXd& a_xi, const Eigen::MatrixXd& a_eta, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, double omega) {
  const double w2 = omega * omega;
  return {x.dot(a_xi * y) / w2, x.dot(a_eta * y) / w2};
}

Eigen::MatrixXd polar(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

// RK4 for P' = P C(tau) on [0, 1] with retraction after each step.
template <class CoeffAt>
Eigen::MatrixXd integrate_linear(int dim, int substeps, CoeffAt&& coeff_at) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(dim, dim);
  const double h = 1.0 / substeps;
  Eigen::MatrixXd c0 = coeff_at(0.0);
  for (int k = 0; k < substeps; ++k) {
    const double t = k * h;
    const Eigen::MatrixXd cm = coeff_at(t + 0.5 * h);
    const Eigen::MatrixXd c1 = coeff_at(t + h);
    const Eigen::MatrixXd k1 = p * c0;
    const Eigen::MatrixXd k2 = (p + 0.5 * h * k1) * cm;
    const Eigen::MatrixXd k3 = (p + 0.5 * h * k2) * cm;
    const Eigen::MatrixXd k4 = (p + h * k3) * c1;
    p = polar(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    c0 = c1;
  }
  return p;
}

Eigen::MatrixXd segment_propagator(const SurfaceModel& surface, double theta, DomainPoint from, DomainPoint to,
                                   int substeps, const Tolerances& tol, const AdaptedFrameData* start,
                                   const AdaptedFrameData* end) {
  const double du = to.u - from.u, dv = to.v - from.v;
  const int dim = surface.ambient_dim();
  return integrate_linear(dim, substeps, [&](double tau) {
    if (tau == 0.0 && start) return family_coefficients(*start, theta, du, dv);
    if (tau == 1.0 && end) return family_coefficients(*end, theta, du, dv);
    const DomainPoint q{from.u + tau * du, from.v + tau * dv};
    return family_coefficients(adapted_frame(surface, q, tol), theta, du, dv);
  });
}

std::vector<double> lagrange_nodes(double centre, double step, int half) {
  std::vector<double> x;
  for (int i = -half; i <= half; ++i) x.push_back(centre + i * step);
  return x;
}

Taylor2 lagrange_basis(const std::vector<double>& nodes, std::size_t i, const Taylor2& x) {
  Taylor2 r(1.0);
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    if (m == i) continue;
    r = r * ((x - Taylor2(nodes[m])) / (nodes[i] - nodes[m]));
  }
  return r;
}

// Rotate consecutive pairs of ruling coordinates by `angle`.
Eigen::VectorXd rotate_pairs(const Eigen::VectorXd& t, double angle) {
  Eigen::VectorXd out = t;
  const double c = std::cos(angle), s = std::sin(angle);
  for (Eigen::Index k = 0; k + 1 < t.size(); k += 2) {
    out[k] = c * t[k] - s * t[k + 1];
    out[k + 1] = s * t[k] + c * t[k + 1];
  }
  return out;
}

Eigen::VectorXd random_slice_direction(std::mt19937_64& rng, int size) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd x(size);
  do {
    for (int k = 0; k < size; ++k) x[k] = unit(rng);
  } while (x.norm() < 0.1 || x.norm() > 1.0);
  return x.normalized();
}

}  // namespace

RotationOperators RotationOperators::at(double theta, int n) {
  RotationOperators r;
  r.theta = theta;
  r.n = n;
  const double c = std::cos(theta), s = std::sin(theta);
  r.normal_rotation << c, -s, s, c;
  const double ch = std::cos(0.5 * theta), sh = std::sin(0.5 * theta);
  r.reflection << -sh, ch, ch, sh;
  r.complex_rotation = c * Eigen::MatrixXd::Identity(n + 1, n + 1) + s * horizontal_complex_structure(n);
  return r;
}

Eigen::MatrixXd horizontal_complex_structure(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n + 1, n + 1);
  j(1, 1) = 0.0;
  j(2, 2) = 0.0;
  j(2, 1) = 1.0;
  j(1, 2) = -1.0;
  return j;
}

Eigen::Vector2d traceless_form(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double omega,
                               double mixed_sign) {
  const double w2 = omega * omega;
  return {(x[1] * y[1] - x[2] * y[2]) / w2, mixed_sign * (x[1] * y[2] + x[2] * y[1]) / w2};
}

ShapeData FamilyMember::as_shape() const {
  ShapeData d;
  d.n = n;
  d.omega = omega;
  d.kappa = kappa;
  d.phi = phi;
  d.h = h;
  for (std::size_t k = 0; k < 2; ++k) {
    d.phi_bar[k] = phi[k] / omega;
    d.r[k] = -s * a[k] / omega;
    d.sb[k] = -s * b[k] / omega;
  }
  fill_shape_matrices(d);
  return d;
}

FamilyMember rotate_family(const AdaptedFrameData& frame, const ShapeData& base, const ConePoint& cp, double theta,
                           const Tolerances& tol) {
  if (!(std::abs(frame.kappa - frame.mu) <= tol.isotropy * std::max(frame.kappa, 1.0)))
    throw GeometryError(ErrorKind::isotropy_required, "associated family needs a 1-isotropic surface");
  FamilyMember m;
  m.theta = theta;
  m.n = frame.n;
  m.s = cp.s;
  m.omega = base.omega;
  m.kappa = base.kappa;
  m.a = rotated({frame.a(1), frame.a(2)}, theta);
  m.b = rotated({frame.b(1), frame.b(2)}, theta);
  m.phi = rotated(base.phi, theta);
  m.h = rotated(base.h, theta);
  fill_member(m);
  return m;
}

FamilyMember rotate_family(const SurfaceModel& surface, const ConePoint& cp, double theta, const Tolerances& tol) {
  const CurvatureEllipse ellipse = curvature_ellipse(surface, cp.p, tol);
  if (!(std::abs(ellipse.kappa - ellipse.mu) <= tol.isotropy * std::max(ellipse.kappa, 1.0)))
    throw GeometryError(ErrorKind::isotropy_required, "associated family needs a 1-isotropic surface");
  const AdaptedFrameData frame = adapted_frame(surface, cp.p, tol);
  return rotate_family(frame, shape_operators(frame, cp, tol), cp, theta, tol);
}

FamilyMember rotate_family(const FamilyMember& member, double theta) {
  FamilyMember m = member;
  m.theta = member.theta + theta;
  m.a = rotated(member.a, theta);
  m.b = rotated(member.b, theta);
  m.phi = rotated(member.phi, theta);
  m.h = rotated(member.h, theta);
  fill_member(m);
  return m;
}

double pair_norm_sq(const Eigen::MatrixXd& a_xi, const Eigen::MatrixXd& a_eta, double omega) {
  return (a_xi.squaredNorm() + a_eta.squaredNorm()) / (omega * omega);
}

FormsCheck verify_forms_relation(const ShapeData& base, const FamilyMember& member, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y) {
  return verify_forms_relation(base, member.theta, member.a_xi, member.a_eta, x, y);
}

FormsCheck verify_forms_relation(const ShapeData& base, double theta, const Eigen::MatrixXd& a_xi_theta,
                                 const Eigen::MatrixXd& a_eta_theta, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y) {
  const double om = base.omega;
  const RotationOperators half = RotationOperators::at(-0.5 * theta, base.n);
  const RotationOperators back = RotationOperators::at(-theta, base.n);
  const Eigen::Vector2d alpha = pair_values(base.a_xi, base.a_eta, x, y, om);
  const Eigen::Vector2d turned = back.normal_rotation * alpha;
  const double weight = 2.0 * base.kappa * std::sin(0.5 * theta);

  FormsCheck out;
  out.lhs = pair_values(a_xi_theta, a_eta_theta, x, y, om);
  const Eigen::VectorXd hx = half.complex_rotation * x;
  out.rhs_printed = turned + weight * traceless_form(hx, y, om, -1.0);
  const Eigen::VectorXd jhx = horizontal_complex_structure(base.n) * hx;
  out.rhs_consistent = turned + weight * traceless_form(jhx, y, om, 1.0);
  out.printed_residual = om * (out.lhs - out.rhs_printed).cwiseAbs().maxCoeff();
  out.consistent_residual = om * (out.lhs - out.rhs_consistent).cwiseAbs().maxCoeff();
  return out;
}

std::vector<double> curvature_tensor(const Eigen::MatrixXd& a_xi, const Eigen::MatrixXd& a_eta, double omega) {
  const int m = static_cast<int>(a_xi.rows());
  const double w2 = omega * omega;
  auto inner = [&](int a, int b, int c, int d) {
    return (a_xi(a, b) * a_xi(c, d) + a_eta(a, b) * a_eta(c, d)) / w2;
  };
  std::vector<double> r(static_cast<std::size_t>(m * m * m * m));
  std::size_t idx = 0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) r[idx++] = inner(a, d, b, c) - inner(a, c, b, d);
  return r;
}

GaussReport gauss_compatibility(const SurfaceModel& surface, double theta, const std::vector<ConePoint>& sample,
                                double kappa_perturbation, const Tolerances& tol) {
  GaussReport report;
  report.theta = theta;
  for (const auto& cp : sample) {
    const AdaptedFrameData frame = adapted_frame(surface, cp.p, tol);
    const ShapeData base = shape_operators(frame, cp, tol);
    FamilyMember member = rotate_family(frame, base, cp, theta, tol);
    if (kappa_perturbation != 0.0) {
      member.kappa += kappa_perturbation;
      fill_member(member);
    }
    const auto r0 = curvature_tensor(base.a_xi, base.a_eta, base.omega);
    const auto r1 = curvature_tensor(member.a_xi, member.a_eta, member.omega);
    double worst = 0.0;
    for (std::size_t k = 0; k < r0.size(); ++k) worst = std::max(worst, std::abs(r0[k] - r1[k]));
    report.points.push_back({cp, worst});
    report.max_residual = std::max(report.max_residual, worst);
  }
  return report;
}

std::vector<ConePoint> sample_cone_points(const SurfaceModel& surface, std::size_t count, std::uint64_t seed,
                                          double margin, const Tolerances& tol) {
  const int n = surface.n();
  const auto base = sample_domain(surface.domain(), count, seed, margin);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<ConePoint> out;
  out.reserve(count);
  for (const auto& p : base) {
    const AdaptedFrameData frame = adapted_frame(surface, p, tol);
    for (int attempt = 0; attempt < 64; ++attempt) {
      const Eigen::VectorXd x = random_slice_direction(rng, n - 1);
      ConePoint cp{x[0], p, x.tail(n - 2)};
      if (omega_norm(frame, cp) > 0.05) {
        out.push_back(cp);
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd family_coefficients(const AdaptedFrameData& frame, double theta, double du, double dv) {
  const int dim = frame.n + 3;
  // Coordinate displacement in the orthonormal tangent frame.
  const Eigen::Vector2d x = Eigen::RowVector2d(du, dv) * frame.tangent_coeffs.inverse();
  const double c = std::cos(theta), s = std::sin(theta);
  const Eigen::Vector2d jx(c * x[0] - s * x[1], s * x[0] + c * x[1]);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  m(1, 0) = x[0];
  m(2, 0) = x[1];
  m(0, 1) = -x[0];
  m(0, 2) = -x[1];
  for (int a = 1; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      const bool mixed = a <= 2 && b >= 3;
      const Eigen::Vector2d& w = mixed ? jx : x;
      const double value = w[0] * frame.omega(a, b, 1) + w[1] * frame.omega(a, b, 2);
      m(b, a) = value;
      m(a, b) = -value;
    }
  }
  return m;
}

Eigen::MatrixXd propagate_family_frame(const SurfaceModel& surface, double theta, DomainPoint from, DomainPoint to,
                                       int substeps, const Tolerances& tol) {
  if (substeps < 1) throw GeometryError(ErrorKind::invalid_argument, "substeps must be positive");
  return segment_propagator(surface, theta, from, to, substeps, tol, nullptr, nullptr);
}

Eigen::MatrixXd initial_family_frame(const AdaptedFrameData& base, double theta) {
  Eigen::MatrixXd f = base.frame;
  const double c = std::cos(theta), s = std::sin(theta);
  f.col(3) = c * base.frame.col(3) + s * base.frame.col(4);
  f.col(4) = -s * base.frame.col(3) + c * base.frame.col(4);
  return f;
}

FamilyGrid integrate_surface_family(const SurfaceModel& surface, double theta, GridSpec spec,
                                    const Tolerances& tol) {
  if (spec.nu < 2 || spec.nv < 2 || spec.substeps < 1)
    throw GeometryError(ErrorKind::invalid_argument, "grid needs at least 2 x 2 nodes and one substep");
  const Domain& dom = surface.domain();
  FamilyGrid grid;
  grid.theta = theta;
  grid.nu = spec.nu;
  grid.nv = spec.nv;
  for (int i = 0; i < spec.nu; ++i) grid.u.push_back(dom.at(static_cast<double>(i) / (spec.nu - 1), 0.0).u);
  for (int j = 0; j < spec.nv; ++j) grid.v.push_back(dom.at(0.0, static_cast<double>(j) / (spec.nv - 1)).v);

  std::vector<AdaptedFrameData> nodes;
  nodes.reserve(static_cast<std::size_t>(spec.nu * spec.nv));
  for (int i = 0; i < spec.nu; ++i)
    for (int j = 0; j < spec.nv; ++j) nodes.push_back(adapted_frame(surface, grid.node(i, j), tol));
  auto node = [&](int i, int j) -> const AdaptedFrameData& {
    return nodes[static_cast<std::size_t>(i * spec.nv + j)];
  };

  // Edge propagators: along u from (i, j) and along v from (i, j).
  std::vector<Eigen::MatrixXd> pu(static_cast<std::size_t>(spec.nu * spec.nv));
  std::vector<Eigen::MatrixXd> pv(static_cast<std::size_t>(spec.nu * spec.nv));
  for (int i = 0; i < spec.nu; ++i) {
    for (int j = 0; j < spec.nv; ++j) {
      const auto k = static_cast<std::size_t>(i * spec.nv + j);
      if (i + 1 < spec.nu)
        pu[k] = segment_propagator(surface, theta, grid.node(i, j), grid.node(i + 1, j), spec.substeps, tol,
                                   &node(i, j), &node(i + 1, j));
      if (j + 1 < spec.nv)
        pv[k] = segment_propagator(surface, theta, grid.node(i, j), grid.node(i, j + 1), spec.substeps, tol,
                                   &node(i, j), &node(i, j + 1));
    }
  }

  grid.frames.assign(static_cast<std::size_t>(spec.nu * spec.nv), Eigen::MatrixXd());
  grid.frames[0] = initial_family_frame(node(0, 0), theta);
  for (int i = 0; i + 1 < spec.nu; ++i)
    grid.frames[static_cast<std::size_t>((i + 1) * spec.nv)] =
        grid.frames[static_cast<std::size_t>(i * spec.nv)] * pu[static_cast<std::size_t>(i * spec.nv)];
  for (int i = 0; i < spec.nu; ++i)
    for (int j = 0; j + 1 < spec.nv; ++j) {
      const auto k = static_cast<std::size_t>(i * spec.nv + j);
      grid.frames[k + 1] = grid.frames[k] * pv[k];
    }

  for (int i = 0; i + 1 < spec.nu; ++i)
    for (int j = 0; j + 1 < spec.nv; ++j) {
      const auto k = static_cast<std::size_t>(i * spec.nv + j);
      const auto right = static_cast<std::size_t>((i + 1) * spec.nv + j);
      const double r = (pu[k] * pv[right] - pv[k] * pu[k + 1]).cwiseAbs().maxCoeff();
      grid.max_loop_closure = std::max(grid.max_loop_closure, r);
      ++grid.cells;
    }
  if (!(grid.max_loop_closure <= tol.loop_closure))
    throw GeometryError(ErrorKind::integration_diverged,
                        "loop closure " + std::to_string(grid.max_loop_closure) +
                            " exceeds tolerance; refine the grid or raise substeps");
  return grid;
}

TaylorVec FamilyPatch::interpolate(int column, const Taylor2& u, const Taylor2& v) const {
  const auto xs = lagrange_nodes(centre.u, step, half);
  const auto ys = lagrange_nodes(centre.v, step, half);
  const int width = 2 * half + 1;
  std::vector<Taylor2> lu, lv;
  for (std::size_t i = 0; i < xs.size(); ++i) lu.push_back(lagrange_basis(xs, i, u));
  for (std::size_t j = 0; j < ys.size(); ++j) lv.push_back(lagrange_basis(ys, j, v));
  const auto dim = static_cast<std::size_t>(frames.front().rows());
  TaylorVec out(dim, Taylor2(0.0));
  for (int i = 0; i < width; ++i) {
    for (int j = 0; j < width; ++j) {
      const Taylor2 w = lu[static_cast<std::size_t>(i)] * lv[static_cast<std::size_t>(j)];
      const auto& f = frames[static_cast<std::size_t>(i * width + j)];
      for (std::size_t k = 0; k < dim; ++k) out[k] += w * f(static_cast<Eigen::Index>(k), column);
    }
  }
  return out;
}

SurfaceModel FamilyPatch::surface_model() const {
  const double r = half * step;
  Domain box{centre.u - r, centre.u + r, centre.v - r, centre.v + r, false, false};
  FamilyPatch copy = *this;
  return make_taylor_surface("family-patch", static_cast<int>(frames.front().rows()), box,
                             [copy](const Taylor2& u, const Taylor2& v) { return copy.interpolate(0, u, v); });
}

FamilyPatch integrate_family_patch(const SurfaceModel& surface, double theta, DomainPoint centre,
                                   const Eigen::MatrixXd& centre_frame, double step, int substeps,
                                   const Tolerances& tol) {
  FamilyPatch patch;
  patch.centre = centre;
  patch.step = step;
  const int half = patch.half;
  const int width = 2 * half + 1;
  for (int i = -half; i <= half; ++i)
    for (int j = -half; j <= half; ++j)
      if (!surface.domain().contains({centre.u + i * step, centre.v + j * step}))
        throw GeometryError(ErrorKind::domain_error, "patch stencil leaves the domain");
  patch.frames.assign(static_cast<std::size_t>(width * width), Eigen::MatrixXd());
  auto at = [&](int i, int j) -> Eigen::MatrixXd& {
    return patch.frames[static_cast<std::size_t>((i + half) * width + (j + half))];
  };
  auto pt = [&](int i, int j) { return DomainPoint{centre.u + i * step, centre.v + j * step}; };
  at(0, 0) = centre_frame;
  for (int dir : {-1, 1})
    for (int i = dir; std::abs(i) <= half; i += dir)
      at(i, 0) = at(i - dir, 0) * segment_propagator(surface, theta, pt(i - dir, 0), pt(i, 0), substeps, tol,
                                                     nullptr, nullptr);
  for (int i = -half; i <= half; ++i)
    for (int dir : {-1, 1})
      for (int j = dir; std::abs(j) <= half; j += dir)
        at(i, j) = at(i, j - dir) * segment_propagator(surface, theta, pt(i, j - dir), pt(i, j), substeps, tol,
                                                       nullptr, nullptr);
  return patch;
}

FamilyIntegrationReport check_integrated_family(const SurfaceModel& surface, const FamilyGrid& grid,
                                                std::size_t node_count, std::uint64_t seed,
                                                const Tolerances& tol) {
  FamilyIntegrationReport report;
  report.theta = grid.theta;
  report.max_loop_closure = grid.max_loop_closure;
  for (int i = 0; i < grid.nu; ++i)
    for (int j = 0; j < grid.nv; ++j)
      report.base_deviation =
          std::max(report.base_deviation, (grid.position(i, j) - surface.value(grid.node(i, j))).norm());

  Tolerances local = tol;
  local.minimality = std::max(tol.minimality, 1e-5);
  local.isotropy = std::max(tol.isotropy, 1e-4);
  const double step = 1e-2;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_u(2, grid.nu - 3), pick_v(2, grid.nv - 3);
  for (std::size_t k = 0; k < node_count; ++k) {
    const int i = pick_u(rng), j = pick_v(rng);
    const DomainPoint p = grid.node(i, j);
    const FamilyPatch patch = integrate_family_patch(surface, grid.theta, p, grid.frame(i, j), step, 4, tol);
    const SurfaceModel model = patch.surface_model();
    FamilyNodeCheck c;
    c.point = p;
    c.metric_error = (induced_metric(model, p, local) - induced_metric(surface, p, tol)).cwiseAbs().maxCoeff();
    const CurvatureEllipse ell = curvature_ellipse(model, p, local);
    const CurvatureEllipse ref = curvature_ellipse(surface, p, tol);
    c.kappa = ell.kappa;
    c.mu = ell.mu;
    c.kappa_error = std::abs(ell.kappa - ref.kappa);
    c.circularity = std::abs(ell.kappa - ell.mu);
    report.max_metric_error = std::max(report.max_metric_error, c.metric_error);
    report.max_kappa_error = std::max(report.max_kappa_error, c.kappa_error);
    report.max_circularity = std::max(report.max_circularity, c.circularity);
    report.nodes.push_back(c);
  }
  return report;
}

IntegratedShapeData family_shape_operators_integrated(const SurfaceModel& surface, double theta,
                                                      const ConePoint& cp, double step, const Tolerances& tol) {
  const AdaptedFrameData base = adapted_frame(surface, cp.p, tol);
  const int n = base.n;
  const int nc = n + 1;
  const HorizontalFrame hf = horizontal_frame(base, cp, tol);
  const FamilyPatch patch = integrate_family_patch(surface, theta, cp.p, initial_family_frame(base, theta), step,
                                                   4, tol);
  const Taylor2 u = Taylor2::variable(0, cp.p.u), v = Taylor2::variable(1, cp.p.v);
  const int dim = n + 3;

  // Position and ruling columns with first and second partials at the point.
  struct Field {
    AmbientVector f, fu, fv, fuu, fuv, fvv;
  };
  auto field = [&](int column) {
    const TaylorVec t = patch.interpolate(column, u, v);
    Field r{AmbientVector(dim), AmbientVector(dim), AmbientVector(dim),
            AmbientVector(dim), AmbientVector(dim), AmbientVector(dim)};
    for (int k = 0; k < dim; ++k) {
      const auto& c = t[static_cast<std::size_t>(k)];
      r.f[k] = c.partial(0, 0);
      r.fu[k] = c.partial(1, 0);
      r.fv[k] = c.partial(0, 1);
      r.fuu[k] = c.partial(2, 0);
      r.fuv[k] = c.partial(1, 1);
      r.fvv[k] = c.partial(0, 2);
    }
    return r;
  };
  const Field g = field(0);
  std::vector<Field> rulings;
  for (int k = 1; k <= n - 2; ++k) rulings.push_back(field(k + 4));

  // Jacobian and Hessian of G_theta in cone coordinates (s, u, v, t).
  Eigen::MatrixXd jac(dim, nc);
  std::vector<AmbientVector> hess(static_cast<std::size_t>(nc * nc), AmbientVector::Zero(dim));
  auto H = [&](int a, int b) -> AmbientVector& { return hess[static_cast<std::size_t>(a * nc + b)]; };
  AmbientVector gu = cp.s * g.fu, gv = cp.s * g.fv;
  AmbientVector guu = cp.s * g.fuu, guv = cp.s * g.fuv, gvv = cp.s * g.fvv;
  for (int k = 0; k < n - 2; ++k) {
    const double t = cp.t[k];
    const Field& r = rulings[static_cast<std::size_t>(k)];
    gu += t * r.fu;
    gv += t * r.fv;
    guu += t * r.fuu;
    guv += t * r.fuv;
    gvv += t * r.fvv;
    jac.col(3 + k) = r.f;
    H(1, 3 + k) = H(3 + k, 1) = r.fu;
    H(2, 3 + k) = H(3 + k, 2) = r.fv;
  }
  jac.col(0) = g.f;
  jac.col(1) = gu;
  jac.col(2) = gv;
  H(0, 1) = H(1, 0) = g.fu;
  H(0, 2) = H(2, 0) = g.fv;
  H(1, 1) = guu;
  H(1, 2) = H(2, 1) = guv;
  H(2, 2) = gvv;

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(jac);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, nc);
  const Eigen::MatrixXd normal_proj = Eigen::MatrixXd::Identity(dim, dim) - q * q.transpose();

  // Normal pair of the member, transported to the ambient space.
  const FamilyMember member = rotate_family(base, shape_operators(base, cp, tol), cp, theta, tol);
  const Eigen::MatrixXd& fc = patch.frames[static_cast<std::size_t>(patch.half * (2 * patch.half + 1) + patch.half)];
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::MatrixXd rotated_frame = fc;
  rotated_frame.col(3) = c * fc.col(3) + s * fc.col(4);
  rotated_frame.col(4) = -s * fc.col(3) + c * fc.col(4);
  const AmbientVector xi = rotated_frame * member.xi;
  const AmbientVector eta = rotated_frame * member.eta;

  IntegratedShapeData out;
  out.omega = member.omega;
  out.xi_norm = xi.norm();
  out.eta_norm = eta.norm();
  out.normal_residual = std::max((xi - normal_proj * xi).norm(), (eta - normal_proj * eta).norm()) / out.omega;
  const Eigen::MatrixXd pushed = jac * hf.e_coords;
  out.metric_residual =
      (pushed.transpose() * pushed - Eigen::MatrixXd::Identity(nc, nc)).cwiseAbs().maxCoeff();
  out.a_xi = Eigen::MatrixXd::Zero(nc, nc);
  out.a_eta = Eigen::MatrixXd::Zero(nc, nc);
  for (int i = 0; i < nc; ++i) {
    for (int j = 0; j < nc; ++j) {
      AmbientVector acc = AmbientVector::Zero(dim);
      for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b) {
          const double w = hf.e_coords(a, i) * hf.e_coords(b, j);
          if (w != 0.0) acc += w * H(a, b);
        }
      const AmbientVector alpha = normal_proj * acc;
      out.a_xi(i, j) = alpha.dot(xi);
      out.a_eta(i, j) = alpha.dot(eta);
    }
  }
  return out;
}

bool measured_pseudoholomorphic(const SurfaceModel& surface, const Tolerances& tol) {
  return verify_flags(surface, SurfaceFlags{}, 24, 1, tol).computed.pseudoholomorphic;
}

EquivarianceReport equivariance_check(const SurfaceModel& surface, const FamilyGrid& grid, std::size_t points,
                                      std::uint64_t seed, std::optional<double> ruling_angle,
                                      const Tolerances& tol) {
  if (!measured_pseudoholomorphic(surface, tol))
    throw GeometryError(ErrorKind::precondition_violation, "equivariance needs a pseudoholomorphic surface");
  const int n = surface.n();
  const int dim = n + 3;
  EquivarianceReport report;
  report.theta = grid.theta;
  report.ruling_angle = ruling_angle.value_or(-grid.theta);
  report.points = points;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_u(0, grid.nu - 1), pick_v(0, grid.nv - 1);
  Eigen::MatrixXd source(dim, static_cast<Eigen::Index>(points));
  Eigen::MatrixXd target(dim, static_cast<Eigen::Index>(points));
  for (std::size_t k = 0; k < points; ++k) {
    const int i = pick_u(rng), j = pick_v(rng);
    const Eigen::VectorXd x = random_slice_direction(rng, n - 1);
    const double s = x[0];
    const Eigen::VectorXd t = x.tail(n - 2);
    const AdaptedFrameData base = adapted_frame_vectors(surface, grid.node(i, j), tol);
    const Eigen::VectorXd rt = rotate_pairs(t, report.ruling_angle);
    AmbientVector a = s * base.position();
    AmbientVector b = s * grid.position(i, j);
    for (int m = 0; m < n - 2; ++m) {
      a += rt[m] * base.frame.col(m + 5);
      b += t[m] * grid.frame(i, j).col(m + 5);
    }
    source.col(static_cast<Eigen::Index>(k)) = a;
    target.col(static_cast<Eigen::Index>(k)) = b;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(target * source.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd q = svd.matrixU() * svd.matrixV().transpose();
  const Eigen::MatrixXd diff = q * source - target;
  report.rms = std::sqrt(diff.squaredNorm() / static_cast<double>(points));
  report.max_deviation = diff.colwise().norm().maxCoeff();
  report.determinant = q.determinant();
  return report;
}

EquivarianceReport equivariance_check(const SurfaceModel& surface, double theta, std::size_t points,
                                      std::uint64_t seed, GridSpec grid, const Tolerances& tol) {
  if (!measured_pseudoholomorphic(surface, tol))
    throw GeometryError(ErrorKind::precondition_violation, "equivariance needs a pseudoholomorphic surface");
  return equivariance_check(surface, integrate_surface_family(surface, theta, grid, tol), points, seed,
                            std::nullopt, tol);
}

}  // namespace ruledmin
