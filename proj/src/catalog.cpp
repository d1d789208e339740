#include "ruledmin/catalog.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ruledmin/error.hpp"
#include "ruledmin/jets.hpp"
#include "ruledmin/surface.hpp"

namespace ruledmin {

namespace {

using Poly = std::vector<double>;  // ascending coefficients

Poly legendre(int k) {
  Poly prev{1.0}, cur{0.0, 1.0};
  if (k == 0) return prev;
  for (int n = 1; n < k; ++n) {
    Poly next(static_cast<std::size_t>(n + 2), 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += (2.0 * n + 1.0) * cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= n * prev[i];
    for (auto& c : next) c /= (n + 1.0);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

Poly differentiate(const Poly& p, int times) {
  Poly r = p;
  for (int t = 0; t < times; ++t) {
    if (r.size() <= 1) return Poly{0.0};
    Poly d(r.size() - 1);
    for (std::size_t i = 1; i < r.size(); ++i) d[i - 1] = static_cast<double>(i) * r[i];
    r = std::move(d);
  }
  return r;
}

template <class T>
T horner(const Poly& p, const T& x) {
  T acc(p.back());
  for (std::size_t i = p.size() - 1; i-- > 0;) acc = acc * x + T(p[i]);
  return acc;
}

// Unnormalized degree-k harmonics in the chart (polar angle, azimuth), in
// the order P_k, then cos/sin pairs for m = 1..k.
template <class T>
std::vector<T> raw_harmonics(int k, const T& theta, const T& phi, const std::vector<Poly>& dp) {
  std::vector<T> out;
  const T x = cos(theta);
  const T s = sin(theta);
  out.push_back(horner(dp[0], x));
  T sm(1.0);
  for (int m = 1; m <= k; ++m) {
    sm = sm * s;
    const T radial = sm * horner(dp[static_cast<std::size_t>(m)], x);
    out.push_back(radial * cos(phi * static_cast<double>(m)));
    out.push_back(radial * sin(phi * static_cast<double>(m)));
  }
  return out;
}

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int count) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(count, count);
  for (int i = 1; i < count; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jac(i, i - 1) = jac(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  Eigen::VectorXd w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return {es.eigenvalues(), w};
}

SurfaceModel exponential_model(const std::string& name, const std::array<double, 3>& r,
                               const std::array<std::array<double, 2>, 3>& w) {
  Domain dom{0.0, 2.0 * std::numbers::pi, 0.0, 2.0 * std::numbers::pi, true, true};
  return make_taylor_surface(name, 6, dom, [r, w](const Taylor2& u, const Taylor2& v) {
    TaylorVec out;
    for (std::size_t j = 0; j < 3; ++j) {
      const Taylor2 phase = u * w[j][0] + v * w[j][1];
      out.push_back(cos(phase) * r[j]);
      out.push_back(sin(phase) * r[j]);
    }
    return out;
  });
}

std::string describe(const SurfaceFlags& f) {
  std::string s;
  auto add = [&](const char* n, bool b) { s += std::string(n) + "=" + (b ? "1" : "0") + " "; };
  add("minimal", f.minimal);
  add("substantial", f.substantial);
  add("one_isotropic", f.one_isotropic);
  add("pseudoholomorphic", f.pseudoholomorphic);
  add("regular", f.regular);
  add("flat", f.flat);
  return s;
}

}  // namespace

FlagVerification verify_flags(const SurfaceModel& model, const SurfaceFlags& declared,
                              std::size_t samples, std::uint64_t seed, const Tolerances& tol) {
  FlagVerification out;
  const auto pts = sample_domain(model.domain(), samples, seed, 0.05);
  const int n = model.n();
  const int m = (n + 1) / 2;

  double min_res = 0.0, curv = 0.0, unit = 0.0;
  int min_rank = model.ambient_dim();
  Tolerances lax = tol;
  lax.minimality = std::numeric_limits<double>::infinity();
  for (DomainPoint p : pts) {
    min_res = std::max(min_res, second_form(model, p, lax).minimality_residual);
    curv = std::max(curv, std::abs(intrinsic_curvature(model, p)));
    const JetTable jet = analytic_jet(model, p, 4);
    unit = std::max(unit, std::abs(jet(0, 0).norm() - 1.0));
    Eigen::MatrixXd span = Eigen::MatrixXd::Zero(model.ambient_dim(), Taylor2::kSize);
    for (int d = 0; d <= 4; ++d)
      for (int j = 0; j <= d; ++j) span.col(Taylor2::index(d - j, j)) = jet(d - j, j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(span);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-8 * sv[0]) ++rank;
    min_rank = std::min(min_rank, rank);
  }
  out.residuals["minimality_max"] = min_res;
  out.residuals["curvature_max_abs"] = curv;
  out.residuals["unit_norm_max"] = unit;
  out.residuals["osculating_rank_min"] = min_rank;
  out.computed.minimal = min_res <= tol.minimality && unit <= tol.jet;
  out.computed.flat = curv <= 1e-8;
  out.computed.substantial = min_rank == model.ambient_dim();

  const IsotropyReport iso = is_one_isotropic(model, pts, tol);
  out.residuals["isotropy_defect_max"] = iso.max_defect;
  out.computed.one_isotropic = iso.isotropic;

  // Rank pattern of the normal levels and circularity of the higher ellipses.
  const int levels = std::min(m, JetTable::kMaxOrder - 1);
  std::vector<int> first_ranks;
  int changes = 0;
  double higher_defect = 0.0;
  bool nonzero = true;
  for (DomainPoint p : pts) {
    const HigherForms hf = higher_forms(model, p, levels, tol);
    const auto ranks = hf.split.ranks();
    if (first_ranks.empty()) first_ranks = ranks;
    else if (ranks != first_ranks) ++changes;
    if (ranks.empty() || ranks[0] == 0) nonzero = false;
    for (std::size_t s = 0; s < hf.along_e1.size(); ++s) {
      const double a = hf.along_e1[s].norm(), b = hf.mixed[s].norm();
      const double scale = std::max(a, b);
      if (scale <= tol.rank) continue;
      higher_defect = std::max(higher_defect, (std::abs(a - b) + std::abs(hf.along_e1[s].dot(hf.mixed[s])) / scale) / scale);
    }
  }
  out.residuals["rank_changes"] = changes;
  out.residuals["higher_ellipse_defect_max"] = higher_defect;
  out.computed.regular = changes == 0 && nonzero;
  out.computed.pseudoholomorphic = (n % 2 == 0) && out.computed.substantial && out.computed.minimal &&
                                   higher_defect <= tol.isotropy;

  auto cmp = [&](const char* name, bool d, bool c) {
    if (d != c) out.mismatches.push_back(std::string(name) + ": declared " + (d ? "true" : "false") +
                                         ", measured " + (c ? "true" : "false"));
  };
  cmp("minimal", declared.minimal, out.computed.minimal);
  cmp("substantial", declared.substantial, out.computed.substantial);
  cmp("one_isotropic", declared.one_isotropic, out.computed.one_isotropic);
  cmp("pseudoholomorphic", declared.pseudoholomorphic, out.computed.pseudoholomorphic);
  cmp("regular", declared.regular, out.computed.regular);
  cmp("flat", declared.flat, out.computed.flat);
  return out;
}

CatalogEntry equilateral_torus() {
  const double r = 1.0 / std::sqrt(3.0);
  CatalogEntry e;
  e.name = "equilateral-torus";
  e.model = exponential_model(e.name, {r, r, r}, {{{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}}});
  // The first ellipse is a circle everywhere; the cubic form fixes e1.
  e.model.set_gauge(TangentGauge::third_order);
  e.declared = {true, true, true, false, true, true};
  e.provenance = "explicit flat 1-isotropic torus in S^5 with equal radii";
  return e;
}

CatalogEntry exponential_torus(const std::array<double, 3>& r,
                               const std::array<std::array<double, 2>, 3>& w) {
  const double total = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
  if (std::abs(total - 1.0) > 1e-12 || r[0] < 0 || r[1] < 0 || r[2] < 0)
    throw GeometryError(ErrorKind::invalid_parameters, "radii must be non-negative with unit sum of squares");
  Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
  for (std::size_t j = 0; j < 3; ++j) {
    const Eigen::Vector2d wj(w[j][0], w[j][1]);
    M += r[j] * r[j] * wj * wj.transpose();
  }
  if (!(M.determinant() > 1e-12))
    throw GeometryError(ErrorKind::invalid_parameters, "frequencies give a degenerate metric");
  const Eigen::Matrix2d Minv = M.inverse();
  double defect = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    if (r[j] == 0.0) continue;
    const Eigen::Vector2d wj(w[j][0], w[j][1]);
    defect = std::max(defect, std::abs(wj.dot(Minv * wj) - 2.0));
  }
  CatalogEntry e;
  e.name = "exponential-torus";
  e.model = exponential_model(e.name, r, w);
  if (defect > default_tolerances().minimality)
    throw GeometryError(ErrorKind::not_minimal,
                        "exponents violate w^T M^-1 w = 2 by " + std::to_string(defect));
  e.provenance = "user-parametrized flat torus; flags measured";
  SurfaceFlags none;
  e.verification = verify_flags(e.model, none);
  e.declared = e.verification.computed;
  e.verification.mismatches.clear();
  if (!e.declared.minimal)
    throw GeometryError(ErrorKind::not_minimal, "numeric minimality check failed");
  if (e.declared.one_isotropic && e.declared.substantial) e.model.set_gauge(TangentGauge::third_order);
  return e;
}

CatalogEntry clifford_control() {
  const double r = 1.0 / std::sqrt(2.0);
  CatalogEntry e;
  e.name = "clifford-control";
  e.model = exponential_model(e.name, {r, r, 0.0}, {{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}}});
  e.declared = {true, false, false, false, true, true};
  e.provenance = "Clifford torus in a totally geodesic S^3; negative control for isotropy";
  e.control = true;
  return e;
}

CatalogEntry harmonic_sphere(int degree) {
  if (degree < 2 || degree > 4)
    throw GeometryError(ErrorKind::invalid_parameters, "harmonic sphere degree must be 2, 3 or 4");
  const int k = degree;
  std::vector<Poly> dp;
  const Poly pk = legendre(k);
  for (int m = 0; m <= k; ++m) dp.push_back(differentiate(pk, m));

  // Gram matrix of the raw basis on the round sphere.
  const int count = 2 * k + 1;
  const auto [nodes, weights] = gauss_legendre(k + 2);
  const int nphi = 4 * k + 4;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(count, count);
  for (Eigen::Index a = 0; a < nodes.size(); ++a) {
    const double theta = std::acos(nodes[a]);
    for (int b = 0; b < nphi; ++b) {
      const double phi = 2.0 * std::numbers::pi * b / nphi;
      const auto f = raw_harmonics<double>(k, theta, phi, dp);
      const Eigen::Map<const Eigen::VectorXd> fv(f.data(), count);
      gram += (weights[a] * 2.0 * std::numbers::pi / nphi) * fv * fv.transpose();
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const Eigen::MatrixXd lower = llt.matrixL();
  const Eigen::MatrixXd coeffs = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(count, count));

  // sum_i Y_i^2 is constant; rescale so the image is on the unit sphere.
  const auto f0 = raw_harmonics<double>(k, 0.5 * std::numbers::pi, 0.0, dp);
  const double radius = (coeffs * Eigen::Map<const Eigen::VectorXd>(f0.data(), count)).norm();
  const Eigen::MatrixXd unit_coeffs = coeffs / radius;

  CatalogEntry e;
  e.name = k == 3 ? "boruvka-sphere" : "harmonic-sphere-" + std::to_string(k);
  const double margin = 0.25;
  Domain dom{margin, std::numbers::pi - margin, 0.0, 2.0 * std::numbers::pi, false, true};
  e.model = make_taylor_surface(e.name, count, dom, [k, dp, unit_coeffs, count](const Taylor2& u, const Taylor2& v) {
    const auto f = raw_harmonics<Taylor2>(k, u, v, dp);
    TaylorVec out(static_cast<std::size_t>(count), Taylor2(0.0));
    for (int i = 0; i < count; ++i)
      for (int j = 0; j <= i; ++j)
        if (unit_coeffs(i, j) != 0.0)
          out[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(j)] * unit_coeffs(i, j);
    return out;
  });
  e.declared = {true, true, true, true, true, false};
  e.provenance = "degree-" + std::to_string(k) + " spherical harmonics, orthonormalized by quadrature";
  return e;
}

SurfaceModel great_sphere_model(int ambient_dim) {
  Domain dom{0.25, std::numbers::pi - 0.25, 0.0, 2.0 * std::numbers::pi, false, true};
  return make_taylor_surface("great-sphere", ambient_dim, dom, [ambient_dim](const Taylor2& u, const Taylor2& v) {
    TaylorVec out(static_cast<std::size_t>(ambient_dim), Taylor2(0.0));
    out[0] = cos(u);
    out[1] = sin(u) * cos(v);
    out[2] = sin(u) * sin(v);
    return out;
  });
}

std::vector<std::string> catalog_names() {
  return {"boruvka-sphere", "clifford-control", "equilateral-torus", "harmonic-sphere-4"};
}

CatalogEntry load_entry(const std::string& name, bool verify) {
  CatalogEntry e;
  if (name == "equilateral-torus") e = equilateral_torus();
  else if (name == "clifford-control") e = clifford_control();
  else if (name == "boruvka-sphere") e = boruvka_sphere();
  else if (name == "harmonic-sphere-4") e = harmonic_sphere(4);
  else throw GeometryError(ErrorKind::unknown_surface, "no catalog entry named '" + name + "'");
  if (verify) {
    e.verification = verify_flags(e.model, e.declared);
    if (!e.verification.mismatches.empty()) {
      std::string msg = name + ": ";
      for (const auto& m : e.verification.mismatches) msg += m + "; ";
      msg += "measured " + describe(e.verification.computed);
      throw GeometryError(ErrorKind::flag_mismatch, msg);
    }
  }
  return e;
}

}  // namespace ruledmin
