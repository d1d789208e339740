#include "ruledmin/surface.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "ruledmin/error.hpp"
#include "ruledmin/jets.hpp"

namespace ruledmin {

namespace {

using Dir = std::array<Taylor2, 2>;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double norm_value(const TaylorVec& v) { return std::sqrt(dot(v, v).value()); }

// atan2 with the branch cut moved to the negative y axis, so that the exactly
// antiparallel configurations met on symmetric surfaces (y = +-0, x < 0) do
// not flip between +pi and -pi under rounding.
Taylor2 shifted_atan2(const Taylor2& y, const Taylor2& x) {
  Taylor2 a = atan2(y, x);
  if (a.coeff(0, 0) < -0.5 * std::numbers::pi) a.coeff(0, 0) += 2.0 * std::numbers::pi;
  return a;
}

struct BuildOptions {
  int levels = 1;             // normal levels to construct
  int order = 4;              // jet order used
  bool strict = true;         // ranks must match the generic pattern
  bool apply_gauge = true;    // rotate the tangent frame per the surface gauge
  bool want_connection = false;
};

// Adapted frame as a field of Taylor expansions around one point.
class JetFrame {
 public:
  JetFrame(const SurfaceModel& surface, DomainPoint p, const Tolerances& tol, BuildOptions opt)
      : n_(surface.n()), dim_(surface.ambient_dim()), opt_(opt), tol_(tol) {
    TaylorVec g = surface.expand(p);
    for (auto& c : g) c = c.truncated(opt.order);
    for (int d = 0; d <= opt.order; ++d) {
      for (int j = 0; j <= d; ++j) {
        const int i = d - j;
        TaylorVec f = g;
        for (int k = 0; k < i; ++k) f = derivative(f, 0);
        for (int k = 0; k < j; ++k) f = derivative(f, 1);
        partial_[Taylor2::index(i, j)] = std::move(f);
      }
    }
    build_metric(surface.orientation());
    build_tangent(surface.gauge());
    build_normals();
    if (opt.want_connection) build_connection();
  }

  int n() const { return n_; }
  const TaylorVec& e(int i) const { return e_[static_cast<std::size_t>(i)]; }
  int frame_size() const { return static_cast<int>(e_.size()); }
  const std::array<Dir, 2>& tangent_coeffs() const { return t_; }
  const std::array<Dir, 2>& coordinate_coeffs() const { return t0_; }
  double kappa() const { return kappa_; }
  double mu() const { return mu_; }
  double minimality() const { return minimality_; }
  const std::vector<std::vector<int>>& levels() const { return levels_; }
  const std::vector<TaylorVec>& along() const { return along_; }
  const std::vector<TaylorVec>& mixed() const { return mixed_; }
  const Taylor2& E() const { return E_; }
  const Taylor2& F() const { return F_; }
  const Taylor2& G() const { return G_; }
  const TaylorVec& partial(int i, int j) const { return partial_[Taylor2::index(i, j)]; }

  /// Symmetric multilinear contraction of the coordinate derivatives of g.
  TaylorVec contract(const std::vector<Dir>& dirs) const {
    const int k = static_cast<int>(dirs.size());
    if (k > opt_.order)
      throw GeometryError(ErrorKind::unsupported_order, "form of order " + std::to_string(k) +
                                                            " needs longer jets");
    TaylorVec out(static_cast<std::size_t>(dim_), Taylor2(0.0));
    for (int mask = 0; mask < (1 << k); ++mask) {
      Taylor2 w(1.0);
      int nv = 0;
      for (int m = 0; m < k; ++m) {
        const int bit = (mask >> m) & 1;
        nv += bit;
        w = w * dirs[static_cast<std::size_t>(m)][static_cast<std::size_t>(bit)];
      }
      axpy(out, w, partial(k - nv, nv));
    }
    return out;
  }

  /// Remove the components along e_0 .. e_{upto}.
  TaylorVec project_out(TaylorVec v, int upto) const {
    for (int i = 0; i <= upto; ++i) {
      const TaylorVec& b = e(i);
      axpy(v, -dot(v, b), b);
    }
    return v;
  }

  Taylor2 omega(int i, int j, int k) const { return omega_[index(i, j, k)]; }

 private:
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>((i * (n_ + 3) + j) * 2 + (k - 1));
  }

  void build_metric(int orientation) {
    const TaylorVec& gu = partial(1, 0);
    const TaylorVec& gv = partial(0, 1);
    E_ = dot(gu, gu);
    F_ = dot(gu, gv);
    G_ = dot(gv, gv);
    const Taylor2 det = E_ * G_ - F_ * F_;
    if (!(det.value() > tol_.lin))
      throw GeometryError(ErrorKind::degenerate_metric, "induced metric is degenerate");
    const Taylor2 se = sqrt(E_);
    const Taylor2 sd = sqrt(det);
    t0_[0] = {reciprocal(se), Taylor2(0.0)};
    const Taylor2 w = reciprocal(se * sd) * static_cast<double>(orientation);
    t0_[1] = {-F_ * w, E_ * w};
  }

  TaylorVec tangent_vector(const Dir& c) const {
    TaylorVec v = scaled(partial(1, 0), c[0]);
    axpy(v, c[1], partial(0, 1));
    return v;
  }

  void set_tangent(const std::array<Dir, 2>& t) {
    t_ = t;
    e_.assign(3, TaylorVec{});
    e_[0] = partial(0, 0);
    e_[1] = tangent_vector(t_[0]);
    e_[2] = tangent_vector(t_[1]);
  }

  static std::array<Dir, 2> rotated(const std::array<Dir, 2>& t, const Taylor2& psi) {
    const Taylor2 c = cos(psi), s = sin(psi);
    std::array<Dir, 2> r;
    for (int k = 0; k < 2; ++k) {
      r[0][static_cast<std::size_t>(k)] = c * t[0][static_cast<std::size_t>(k)] + s * t[1][static_cast<std::size_t>(k)];
      r[1][static_cast<std::size_t>(k)] = c * t[1][static_cast<std::size_t>(k)] - s * t[0][static_cast<std::size_t>(k)];
    }
    return r;
  }

  void build_tangent(TangentGauge gauge) {
    set_tangent(t0_);
    if (!opt_.apply_gauge) return;
    const TaylorVec A = project_out(contract({t0_[0], t0_[0]}), 2);
    const TaylorVec B = project_out(contract({t0_[0], t0_[1]}), 2);
    const Taylor2 P = dot(A, A) - dot(B, B);
    const Taylor2 Q = 2.0 * dot(A, B);
    const double k2 = 0.5 * (dot(A, A).value() + dot(B, B).value());
    const double disc = std::hypot(P.value(), Q.value());
    const double kap = std::sqrt(k2 + 0.5 * disc);
    const double mu = std::sqrt(std::max(0.0, k2 - 0.5 * disc));
    const bool circular = (kap - mu) <= tol_.isotropy * std::max(kap, 1.0);
    if (!circular) {
      set_tangent(rotated(t0_, shifted_atan2(Q, P) * 0.25));
      return;
    }
    if (gauge != TangentGauge::third_order) return;
    if (opt_.order < 3)
      throw GeometryError(ErrorKind::unsupported_order, "third-order gauge needs order-3 jets");
    // Remove N_1 = span(A, B) before reading the cubic form.
    std::vector<TaylorVec> n1;
    for (const TaylorVec* v : {&A, &B}) {
      TaylorVec w = *v;
      for (const auto& b : n1) axpy(w, -dot(w, b), b);
      const double nw = norm_value(w);
      if (nw > tol_.rank * std::max(1.0, kap)) n1.push_back(scaled(w, reciprocal(sqrt(dot(w, w)))));
    }
    auto strip = [&](TaylorVec v) {
      v = project_out(std::move(v), 2);
      for (const auto& b : n1) axpy(v, -dot(v, b), b);
      return v;
    };
    const TaylorVec C = strip(contract({t0_[0], t0_[0], t0_[0]}));
    const TaylorVec D = strip(contract({t0_[0], t0_[0], t0_[1]}));
    const Taylor2 P3 = dot(C, C) - dot(D, D);
    const Taylor2 Q3 = 2.0 * dot(C, D);
    if (std::hypot(P3.value(), Q3.value()) <= tol_.rank * std::max(1.0, dot(C, C).value() + dot(D, D).value()))
      throw GeometryError(ErrorKind::precondition_violation,
                          "third-order gauge requested but the second ellipse is a circle");
    set_tangent(rotated(t0_, shifted_atan2(Q3, P3) * (1.0 / 6.0)));
  }

  void push_normal(const TaylorVec& v) {
    e_.push_back(scaled(v, reciprocal(sqrt(dot(v, v)))));
  }

  void build_normals() {
    const TaylorVec A = project_out(contract({t_[0], t_[0]}), 2);
    const TaylorVec B = project_out(contract({t_[0], t_[1]}), 2);
    const TaylorVec A22 = project_out(contract({t_[1], t_[1]}), 2);
    minimality_ = (values(A) + values(A22)).norm();
    kappa_ = norm_value(A);
    const double scale = std::max(1.0, kappa_);
    if (kappa_ <= tol_.rank) {
      if (opt_.strict)
        throw GeometryError(ErrorKind::degenerate_first_normal, "first normal space vanishes");
      kappa_ = 0.0;
      mu_ = 0.0;
      levels_.push_back({});
      along_.push_back(A);
      mixed_.push_back(B);
      fill_empty_levels(1);
      return;
    }
    push_normal(A);
    TaylorVec B4 = B;
    axpy(B4, -dot(B4, e(3)), e(3));
    mu_ = norm_value(B4);
    along_.push_back(A);
    mixed_.push_back(B);
    if (mu_ <= tol_.rank * scale) {
      if (opt_.strict)
        throw GeometryError(ErrorKind::degenerate_first_normal, "first normal space has rank one");
      mu_ = 0.0;
      levels_.push_back({3});
    } else {
      push_normal(B4);
      levels_.push_back({3, 4});
    }
    const int m = (n_ + 1) / 2;
    for (int s = 2; s <= opt_.levels; ++s) {
      if (s > m) break;
      std::vector<Dir> dirs(static_cast<std::size_t>(s + 1), t_[0]);
      const TaylorVec raw1 = contract(dirs);
      dirs.back() = t_[1];
      const TaylorVec raw2 = contract(dirs);
      const int top = frame_size() - 1;
      TaylorVec f1 = project_out(raw1, top);
      TaylorVec f2 = project_out(raw2, top);
      along_.push_back(f1);
      mixed_.push_back(f2);
      const double thr = tol_.rank * std::max({1.0, norm_value(raw1), norm_value(raw2)});
      const double n1 = norm_value(f1), n2 = norm_value(f2);
      const bool last_odd = (s == m) && (n_ % 2 == 1);
      std::vector<int> level;
      if (last_odd) {
        const TaylorVec& f = n1 >= n2 ? f1 : f2;
        if (std::max(n1, n2) <= thr) {
          if (opt_.strict) throw rank_error(s);
        } else {
          push_normal(f);
          level.push_back(frame_size() - 1);
        }
      } else {
        const bool swap = n1 < 0.1 * n2;
        const TaylorVec& first = swap ? f2 : f1;
        TaylorVec second = swap ? f1 : f2;
        if (std::max(n1, n2) <= thr) {
          if (opt_.strict) throw rank_error(s);
        } else {
          push_normal(first);
          level.push_back(frame_size() - 1);
          axpy(second, -dot(second, e(frame_size() - 1)), e(frame_size() - 1));
          if (norm_value(second) <= thr) {
            if (opt_.strict) throw rank_error(s);
          } else {
            if (swap) second = scaled(second, Taylor2(-1.0));
            push_normal(second);
            level.push_back(frame_size() - 1);
          }
        }
      }
      levels_.push_back(level);
      if (level.empty()) {
        fill_empty_levels(s);
        break;
      }
    }
    if (opt_.strict && frame_size() - 1 != n_ + 2 && opt_.levels >= m)
      throw GeometryError(ErrorKind::rank_deficient, "surface is not substantial");
  }

  void fill_empty_levels(int done) {
    const int m = (n_ + 1) / 2;
    for (int s = done + 1; s <= std::min(opt_.levels, m); ++s) {
      levels_.push_back({});
      along_.push_back(TaylorVec(static_cast<std::size_t>(dim_), Taylor2(0.0)));
      mixed_.push_back(TaylorVec(static_cast<std::size_t>(dim_), Taylor2(0.0)));
    }
  }

  GeometryError rank_error(int s) const {
    return GeometryError(ErrorKind::rank_deficient,
                         "normal level " + std::to_string(s) + " has lower rank than declared");
  }

  void build_connection() {
    const int size = frame_size();
    omega_.assign(static_cast<std::size_t>((n_ + 3) * (n_ + 3) * 2), Taylor2::invalid());
    for (int i = 1; i < size; ++i) {
      for (int j = i + 1; j < size; ++j) {
        // Differentiate the lower-index vector: it is built from shorter jets.
        std::array<Taylor2, 2> coord;
        for (int c = 0; c < 2; ++c) coord[static_cast<std::size_t>(c)] = dot(derivative(e(i), c), e(j));
        for (int k = 1; k <= 2; ++k) {
          const Dir& tk = t_[static_cast<std::size_t>(k - 1)];
          const Taylor2 w = tk[0] * coord[0] + tk[1] * coord[1];
          omega_[index(i, j, k)] = w;
          omega_[index(j, i, k)] = -w;
        }
      }
      for (int k = 1; k <= 2; ++k) omega_[index(i, i, k)] = Taylor2(0.0);
    }
  }

  int n_;
  int dim_;
  BuildOptions opt_;
  Tolerances tol_;
  std::array<TaylorVec, Taylor2::kSize> partial_;
  Taylor2 E_, F_, G_;
  std::array<Dir, 2> t0_;
  std::array<Dir, 2> t_;
  std::vector<TaylorVec> e_;
  double kappa_ = 0.0;
  double mu_ = 0.0;
  double minimality_ = 0.0;
  std::vector<std::vector<int>> levels_;
  std::vector<TaylorVec> along_;
  std::vector<TaylorVec> mixed_;
  std::vector<Taylor2> omega_;
};

Eigen::Matrix2d coeff_values(const std::array<Dir, 2>& t) {
  Eigen::Matrix2d m;
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) m(a, c) = t[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)].value();
  return m;
}

// Gauss curvature from E, F, G and their derivatives (Brioschi).
double brioschi(const Taylor2& E, const Taylor2& F, const Taylor2& G) {
  const double e = E.value(), f = F.value(), g = G.value();
  const double Eu = E.partial(1, 0), Ev = E.partial(0, 1);
  const double Fu = F.partial(1, 0), Fv = F.partial(0, 1);
  const double Gu = G.partial(1, 0), Gv = G.partial(0, 1);
  const double Evv = E.partial(0, 2), Fuv = F.partial(1, 1), Guu = G.partial(2, 0);
  Eigen::Matrix3d m1;
  m1 << -0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev,
        Fv - 0.5 * Gu, e, f,
        0.5 * Gv, f, g;
  Eigen::Matrix3d m2;
  m2 << 0.0, 0.5 * Ev, 0.5 * Gu,
        0.5 * Ev, e, f,
        0.5 * Gu, f, g;
  const double det = e * g - f * f;
  return (m1.determinant() - m2.determinant()) / (det * det);
}

void check_domain(const SurfaceModel& surface, DomainPoint p) {
  if (!surface.domain().contains(p))
    throw GeometryError(ErrorKind::domain_error, "point outside the surface domain");
}

AdaptedFrameData package(const JetFrame& jf, DomainPoint p, bool with_connection) {
  AdaptedFrameData out;
  out.n = jf.n();
  out.point = p;
  const int dim = jf.n() + 3;
  out.frame = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < jf.frame_size(); ++i) out.frame.col(i) = values(jf.e(i));
  out.tangent_coeffs = coeff_values(jf.tangent_coeffs());
  out.metric << jf.E().value(), jf.F().value(), jf.F().value(), jf.G().value();
  for (const auto& level : jf.levels()) {
    std::vector<AmbientVector> basis;
    for (int idx : level) basis.push_back(out.frame.col(idx));
    out.split.levels.push_back(std::move(basis));
  }
  out.kappa = jf.kappa();
  out.mu = jf.mu();
  out.lambda = out.kappa > 0.0 ? out.mu / out.kappa : 0.0;
  out.minimality_residual = jf.minimality();
  if (jf.along().size() >= 2 && jf.n() >= 3) {
    out.kappa1 = values(jf.along()[1]).norm();
  }
  if (with_connection) {
    out.gauss_curvature = brioschi(jf.E(), jf.F(), jf.G());
    out.omega_values.assign(static_cast<std::size_t>(dim * dim * 2), kNaN);
    out.domega_values.assign(static_cast<std::size_t>(dim * dim * 4), kNaN);
    const auto& t = jf.tangent_coeffs();
    for (int i = 1; i < dim; ++i) {
      for (int j = 1; j < dim; ++j) {
        if (i >= jf.frame_size() || j >= jf.frame_size()) continue;
        for (int k = 1; k <= 2; ++k) {
          const Taylor2 w = jf.omega(i, j, k);
          const std::size_t base = static_cast<std::size_t>((i * dim + j) * 2 + (k - 1));
          out.omega_values[base] = w.value();
          if (w.degree() < 1) continue;
          const Taylor2 wu = w.du(), wv = w.dv();
          for (int l = 1; l <= 2; ++l) {
            const Dir& tl = t[static_cast<std::size_t>(l - 1)];
            out.domega_values[base * 2 + static_cast<std::size_t>(l - 1)] =
                tl[0].value() * wu.value() + tl[1].value() * wv.value();
          }
        }
      }
    }
  } else {
    out.gauss_curvature = kNaN;
  }
  return out;
}

}  // namespace

double AdaptedFrameData::omega(int i, int j, int k) const {
  const int dim = n + 3;
  if (i >= dim || j >= dim) return 0.0;
  if (omega_values.empty()) return kNaN;
  return omega_values[static_cast<std::size_t>((i * dim + j) * 2 + (k - 1))];
}

double AdaptedFrameData::domega(int i, int j, int k, int l) const {
  const int dim = n + 3;
  if (i >= dim || j >= dim) return 0.0;
  if (domega_values.empty()) return kNaN;
  return domega_values[static_cast<std::size_t>(((i * dim + j) * 2 + (k - 1)) * 2 + (l - 1))];
}

bool AdaptedFrameData::has_omega(int i, int j) const {
  const int dim = n + 3;
  if (i >= dim || j >= dim) return true;
  return !omega_values.empty() && std::isfinite(omega(i, j, 1));
}

Eigen::Matrix2d induced_metric(const SurfaceModel& surface, DomainPoint p, const Tolerances& tol) {
  const JetTable jet = analytic_jet(surface, p, 1);
  Eigen::Matrix2d m;
  m(0, 0) = jet(1, 0).squaredNorm();
  m(0, 1) = m(1, 0) = jet(1, 0).dot(jet(0, 1));
  m(1, 1) = jet(0, 1).squaredNorm();
  if (!(m.determinant() > tol.lin))
    throw GeometryError(ErrorKind::degenerate_metric, "induced metric is degenerate");
  return m;
}

TangentFrame tangent_frame(const SurfaceModel& surface, DomainPoint p, const Tolerances& tol) {
  check_domain(surface, p);
  TangentFrame out;
  const JetTable jet = analytic_jet(surface, p, 1);
  const double E = jet(1, 0).squaredNorm(), F = jet(1, 0).dot(jet(0, 1)), G = jet(0, 1).squaredNorm();
  const double det = E * G - F * F;
  if (!(det > tol.lin)) throw GeometryError(ErrorKind::degenerate_metric, "induced metric is degenerate");
  const double se = std::sqrt(E), sd = std::sqrt(det);
  const double sigma = surface.orientation();
  out.coeffs << 1.0 / se, 0.0, -sigma * F / (se * sd), sigma * E / (se * sd);
  out.e1 = out.coeffs(0, 0) * jet(1, 0);
  out.e2 = out.coeffs(1, 0) * jet(1, 0) + out.coeffs(1, 1) * jet(0, 1);
  return out;
}

SecondForm second_form(const SurfaceModel& surface, DomainPoint p, const Tolerances& tol) {
  const TangentFrame tf = tangent_frame(surface, p, tol);
  const JetTable jet = analytic_jet(surface, p, 2);
  const AmbientVector g = jet(0, 0);
  auto normal = [&](AmbientVector x) {
    for (const AmbientVector* b : {&g, &tf.e1, &tf.e2}) x -= x.dot(*b) * (*b);
    return x;
  };
  auto hess = [&](const Eigen::Vector2d& x, const Eigen::Vector2d& y) {
    return AmbientVector(x[0] * y[0] * jet(2, 0) + (x[0] * y[1] + x[1] * y[0]) * jet(1, 1) +
                         x[1] * y[1] * jet(0, 2));
  };
  const Eigen::Vector2d c1 = tf.coeffs.row(0).transpose(), c2 = tf.coeffs.row(1).transpose();
  SecondForm out{tf, normal(hess(c1, c1)), normal(hess(c1, c2)), normal(hess(c2, c2)), 0.0};
  out.minimality_residual = (out.a11 + out.a22).norm();
  if (out.minimality_residual > tol.minimality)
    throw GeometryError(ErrorKind::not_minimal,
                        "trace of the second fundamental form is " + std::to_string(out.minimality_residual));
  return out;
}

CurvatureEllipse curvature_ellipse(const SurfaceModel& surface, DomainPoint p, const Tolerances& tol) {
  check_domain(surface, p);
  BuildOptions opt;
  opt.levels = 1;
  opt.order = surface.gauge() == TangentGauge::third_order ? 3 : 2;
  opt.strict = false;
  JetFrame jf(surface, p, tol, opt);
  if (jf.minimality() > tol.minimality)
    throw GeometryError(ErrorKind::not_minimal, "surface is not minimal at the point");
  if (jf.kappa() <= tol.rank)
    throw GeometryError(ErrorKind::degenerate_first_normal, "first normal space vanishes");
  CurvatureEllipse out;
  out.kappa = jf.kappa();
  out.mu = jf.mu();
  out.e3 = values(jf.e(3));
  out.e4 = jf.frame_size() > 4 ? values(jf.e(4)) : AmbientVector::Zero(surface.ambient_dim());
  return out;
}

IsotropyReport is_one_isotropic(const SurfaceModel& surface, const std::vector<DomainPoint>& samples,
                                const Tolerances& tol) {
  IsotropyReport report;
  report.isotropic = true;
  for (DomainPoint p : samples) {
    PointIsotropy pt;
    pt.point = p;
    try {
      BuildOptions opt;
      opt.levels = 1;
      opt.order = 2;
      opt.strict = false;
      opt.apply_gauge = false;
      JetFrame jf(surface, p, tol, opt);
      const AmbientVector A = values(jf.project_out(jf.contract({jf.coordinate_coeffs()[0], jf.coordinate_coeffs()[0]}), 2));
      const AmbientVector B = values(jf.project_out(jf.contract({jf.coordinate_coeffs()[0], jf.coordinate_coeffs()[1]}), 2));
      const double mean = 0.5 * (A.squaredNorm() + B.squaredNorm());
      const double disc = std::hypot(A.squaredNorm() - B.squaredNorm(), 2.0 * A.dot(B));
      pt.kappa = std::sqrt(mean + 0.5 * disc);
      pt.mu = std::sqrt(std::max(0.0, mean - 0.5 * disc));
      pt.minimality = jf.minimality();
      pt.defect = std::abs(pt.kappa - pt.mu) / std::max(pt.kappa, 1.0);
      pt.pass = pt.defect <= tol.isotropy && pt.minimality <= tol.minimality;
    } catch (const GeometryError&) {
      pt.kappa = pt.mu = pt.defect = pt.minimality = kNaN;
      pt.pass = false;
    }
    report.isotropic = report.isotropic && pt.pass;
    if (std::isfinite(pt.defect)) report.max_defect = std::max(report.max_defect, pt.defect);
    if (std::isfinite(pt.minimality)) report.max_minimality = std::max(report.max_minimality, pt.minimality);
    report.points.push_back(pt);
  }
  if (samples.empty()) report.isotropic = false;
  return report;
}

HigherForms higher_forms(const SurfaceModel& surface, DomainPoint p, int s, const Tolerances& tol) {
  check_domain(surface, p);
  if (s < 1) throw GeometryError(ErrorKind::invalid_argument, "level must be at least 1");
  if (s + 1 > JetTable::kMaxOrder)
    throw GeometryError(ErrorKind::unsupported_order, "form of order " + std::to_string(s + 1) +
                                                          " needs jets beyond order 4");
  BuildOptions opt;
  opt.levels = s;
  opt.order = std::max(s + 1, surface.gauge() == TangentGauge::third_order ? 3 : 2);
  opt.strict = false;
  JetFrame jf(surface, p, tol, opt);
  HigherForms out;
  for (const auto& level : jf.levels()) {
    std::vector<AmbientVector> basis;
    for (int idx : level) basis.push_back(values(jf.e(idx)));
    out.split.levels.push_back(std::move(basis));
  }
  for (const auto& v : jf.along()) out.along_e1.push_back(values(v));
  for (const auto& v : jf.mixed()) out.mixed.push_back(values(v));
  return out;
}

AdaptedFrameData adapted_frame(const SurfaceModel& surface, DomainPoint p, const Tolerances& tol) {
  check_domain(surface, p);
  const int m = (surface.n() + 1) / 2;
  if (m + 1 > JetTable::kMaxOrder)
    throw GeometryError(ErrorKind::unsupported_order, "codimension needs jets beyond order 4");
  BuildOptions opt;
  opt.levels = m;
  opt.order = Taylor2::kMaxDegree;
  opt.want_connection = true;
  JetFrame jf(surface, p, tol, opt);
  return package(jf, p, true);
}

AdaptedFrameData adapted_frame_vectors(const SurfaceModel& surface, DomainPoint p, const Tolerances& tol) {
  check_domain(surface, p);
  const int m = (surface.n() + 1) / 2;
  if (m + 1 > JetTable::kMaxOrder)
    throw GeometryError(ErrorKind::unsupported_order, "codimension needs jets beyond order 4");
  BuildOptions opt;
  opt.levels = m;
  opt.order = std::max(m + 1, surface.gauge() == TangentGauge::third_order ? 3 : 2);
  JetFrame jf(surface, p, tol, opt);
  return package(jf, p, false);
}

double intrinsic_curvature(const SurfaceModel& surface, DomainPoint p) {
  check_domain(surface, p);
  const TaylorVec g = surface.expand(p);
  const TaylorVec gu = derivative(g, 0), gv = derivative(g, 1);
  return brioschi(dot(gu, gu), dot(gu, gv), dot(gv, gv));
}

DualFields dual_fields(const AdaptedFrameData& f) {
  DualFields out;
  for (int k = 1; k <= 2; ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    out.a[i] = f.a(k);
    out.b[i] = f.b(k);
    out.c[i] = f.c(k);
    out.d[i] = f.d(k);
  }
  out.V = f.tangent(out.a[0], out.a[1]);
  out.W = f.tangent(out.b[0], out.b[1]);
  out.Y = f.tangent(out.c[0], out.c[1]);
  out.Z = f.tangent(out.d[0], out.d[1]);
  const double l = f.lambda;
  out.omegas_residual = std::max({std::abs(l * out.c[0] - out.a[1]), std::abs(l * out.c[1] + out.a[0]),
                                  std::abs(l * out.d[0] - out.b[1]), std::abs(l * out.d[1] + out.b[0])});
  return out;
}

StructureResiduals structure_residuals(const AdaptedFrameData& f) {
  StructureResiduals r;
  const double l = f.lambda;
  // *w(e1) = -w(e2), *w(e2) = w(e1).
  for (int pair = 0; pair < 2; ++pair) {
    const int j = 5 + pair;
    const double w1 = f.omega(3, j, 1), w2 = f.omega(3, j, 2);
    const double star1 = -w2, star2 = w1;
    r.conn = std::max({r.conn, std::abs(f.omega(4, j, 1) + star1 / l), std::abs(f.omega(4, j, 2) + star2 / l)});
  }
  r.omegas = dual_fields(f).omegas_residual;
  r.gauss = f.gauss_curvature - (1.0 - f.kappa * f.kappa - f.mu * f.mu);

  auto B = [&](int i) { return f.omega(1, 2, i) + f.omega(3, 4, i); };
  const double a1 = f.a(1), a2 = f.a(2), b1 = f.b(1), b2 = f.b(2);
  auto w = [&](int i, int j, int k) { return f.omega(i, j, k); };
  r.ricci[0] = f.da(2, 1) - f.da(1, 2) + a1 * B(1) + a2 * B(2) - b2 * w(5, 6, 1) + b1 * w(5, 6, 2);
  r.ricci[1] = f.db(2, 1) - f.db(1, 2) + b1 * B(1) + b2 * B(2) + a2 * w(5, 6, 1) - a1 * w(5, 6, 2);
  r.ricci[2] = f.da(1, 1) + f.da(2, 2) - a2 * B(1) + a1 * B(2) - b1 * w(5, 6, 1) - b2 * w(5, 6, 2);
  r.ricci[3] = f.db(1, 1) + f.db(2, 2) - b2 * B(1) + b1 * B(2) + a1 * w(5, 6, 1) + a2 * w(5, 6, 2);
  r.ricci[4] = a2 * w(5, 7, 1) - a1 * w(5, 7, 2) + b2 * w(6, 7, 1) - b1 * w(6, 7, 2);
  r.ricci[5] = a2 * w(5, 8, 1) - a1 * w(5, 8, 2) + b2 * w(6, 8, 1) - b1 * w(6, 8, 2);
  r.ricci[6] = a1 * w(5, 7, 1) + a2 * w(5, 7, 2) + b1 * w(6, 7, 1) + b2 * w(6, 7, 2);
  r.ricci[7] = a1 * w(5, 8, 1) + a2 * w(5, 8, 2) + b1 * w(6, 8, 1) + b2 * w(6, 8, 2);
  return r;
}

std::vector<DomainPoint> sample_domain(const Domain& domain, std::size_t count, std::uint64_t seed,
                                       double margin) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Domain d = domain;
  if (!d.periodic_u) {
    d.u_min += margin;
    d.u_max -= margin;
  }
  if (!d.periodic_v) {
    d.v_min += margin;
    d.v_max -= margin;
  }
  std::vector<DomainPoint> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double a = unit(rng);
    const double b = unit(rng);
    out.push_back(d.at(a, b));
  }
  return out;
}

AdaptedFrameData adapted_frame_fd(const SurfaceModel& surface, DomainPoint p, double step,
                                  const Tolerances& tol) {
  if (!(step > 0.0))
    throw GeometryError(ErrorKind::precondition_violation, "finite-difference step must be positive");
  const AdaptedFrameData centre = adapted_frame_vectors(surface, p, tol);
  const int dim = surface.ambient_dim();

  // Frame at an offset, sign-aligned with the centre frame.
  auto frame_at = [&](DomainPoint q, const Eigen::MatrixXd& ref) {
    Eigen::MatrixXd fr = adapted_frame_vectors(surface, q, tol).frame;
    for (int i = 1; i < dim; ++i)
      if (fr.col(i).dot(ref.col(i)) < 0.0) fr.col(i) *= -1.0;
    return fr;
  };
  // Connection coefficients at q from differenced frames (Richardson in h).
  auto omega_at = [&](DomainPoint q, Eigen::MatrixXd* coeffs) {
    const AdaptedFrameData base = adapted_frame_vectors(surface, q, tol);
    Eigen::MatrixXd ref = base.frame;
    for (int i = 1; i < dim; ++i)
      if (ref.col(i).dot(centre.frame.col(i)) < 0.0) ref.col(i) *= -1.0;
    std::array<Eigen::MatrixXd, 2> d;
    for (int c = 0; c < 2; ++c) {
      auto diff = [&](double h) {
        const DomainPoint qp = c == 0 ? DomainPoint{q.u + h, q.v} : DomainPoint{q.u, q.v + h};
        const DomainPoint qm = c == 0 ? DomainPoint{q.u - h, q.v} : DomainPoint{q.u, q.v - h};
        return Eigen::MatrixXd((frame_at(qp, ref) - frame_at(qm, ref)) / (2.0 * h));
      };
      d[static_cast<std::size_t>(c)] = (4.0 * diff(0.5 * step) - diff(step)) / 3.0;
    }
    std::vector<double> w(static_cast<std::size_t>(dim * dim * 2), kNaN);
    for (int i = 1; i < dim; ++i)
      for (int j = 1; j < dim; ++j)
        for (int k = 1; k <= 2; ++k) {
          double acc = 0.0;
          for (int c = 0; c < 2; ++c)
            acc += base.tangent_coeffs(k - 1, c) * d[static_cast<std::size_t>(c)].col(i).dot(ref.col(j));
          w[static_cast<std::size_t>((i * dim + j) * 2 + (k - 1))] = acc;
        }
    if (coeffs) *coeffs = base.tangent_coeffs;
    return w;
  };

  AdaptedFrameData out = centre;
  out.omega_values = omega_at(p, nullptr);
  out.domega_values.assign(static_cast<std::size_t>(dim * dim * 4), kNaN);
  const double outer = 4.0 * step;
  std::array<std::vector<double>, 2> dw;
  for (int c = 0; c < 2; ++c) {
    auto diff = [&](double h) {
      const DomainPoint qp = c == 0 ? DomainPoint{p.u + h, p.v} : DomainPoint{p.u, p.v + h};
      const DomainPoint qm = c == 0 ? DomainPoint{p.u - h, p.v} : DomainPoint{p.u, p.v - h};
      const auto wp = omega_at(qp, nullptr), wm = omega_at(qm, nullptr);
      std::vector<double> r(wp.size());
      for (std::size_t k = 0; k < r.size(); ++k) r[k] = (wp[k] - wm[k]) / (2.0 * h);
      return r;
    };
    const auto coarse = diff(outer), fine = diff(0.5 * outer);
    dw[static_cast<std::size_t>(c)].resize(coarse.size());
    for (std::size_t k = 0; k < coarse.size(); ++k)
      dw[static_cast<std::size_t>(c)][k] = (4.0 * fine[k] - coarse[k]) / 3.0;
  }
  for (std::size_t base = 0; base < out.omega_values.size(); ++base)
    for (int l = 1; l <= 2; ++l)
      out.domega_values[base * 2 + static_cast<std::size_t>(l - 1)] =
          centre.tangent_coeffs(l - 1, 0) * dw[0][base] + centre.tangent_coeffs(l - 1, 1) * dw[1][base];
  out.gauss_curvature = intrinsic_curvature(surface, p);
  return out;
}

}  // namespace ruledmin
