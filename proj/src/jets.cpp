#include "ruledmin/jets.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>

#include "ruledmin/error.hpp"

namespace ruledmin {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::unsupported_order: return "unsupported-order";
    case ErrorKind::domain_error: return "domain-error";
    case ErrorKind::off_sphere: return "off-sphere";
    case ErrorKind::degenerate_basis: return "degenerate-basis";
    case ErrorKind::degenerate_metric: return "degenerate-metric";
    case ErrorKind::not_minimal: return "not-minimal";
    case ErrorKind::degenerate_first_normal: return "degenerate-first-normal";
    case ErrorKind::rank_deficient: return "rank-deficient";
    case ErrorKind::singular_point: return "singular-point";
    case ErrorKind::oracle_unavailable: return "oracle-unavailable";
    case ErrorKind::slice_required: return "slice-required";
    case ErrorKind::isotropy_required: return "isotropy-required";
    case ErrorKind::integration_diverged: return "integration-diverged";
    case ErrorKind::precondition_violation: return "precondition-violation";
    case ErrorKind::invalid_parameters: return "invalid-parameters";
    case ErrorKind::unknown_surface: return "unknown-surface";
    case ErrorKind::flag_mismatch: return "flag-mismatch";
  }
  return "unknown";
}

namespace {

void check_request(const SurfaceModel& surface, DomainPoint point, int order) {
  if (order < 0 || order > JetTable::kMaxOrder)
    throw GeometryError(ErrorKind::unsupported_order,
                        "jet order " + std::to_string(order) + " outside [0, 4]");
  if (!surface.domain().contains(point))
    throw GeometryError(ErrorKind::domain_error, "point outside the surface domain");
}

// Second-order central stencils for d^k/dx^k on offsets -2..2 (unit spacing).
constexpr std::array<std::array<double, 5>, 5> kStencil{{
    {0.0, 0.0, 1.0, 0.0, 0.0},
    {0.0, -0.5, 0.0, 0.5, 0.0},
    {0.0, 1.0, -2.0, 1.0, 0.0},
    {-0.5, 1.0, 0.0, -1.0, 0.5},
    {1.0, -4.0, 6.0, -4.0, 1.0},
}};

JetTable central_differences(const SurfaceModel& surface, DomainPoint p, int order, double h) {
  std::map<std::pair<int, int>, AmbientVector> cache;
  auto sample = [&](int a, int b) -> const AmbientVector& {
    auto key = std::make_pair(a, b);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, surface.value({p.u + a * h, p.v + b * h})).first;
    return it->second;
  };
  JetTable jet(p, order, surface.ambient_dim());
  for (int d = 0; d <= order; ++d) {
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      AmbientVector acc = AmbientVector::Zero(surface.ambient_dim());
      for (int a = -2; a <= 2; ++a) {
        const double wa = kStencil[i][a + 2];
        if (wa == 0.0) continue;
        for (int b = -2; b <= 2; ++b) {
          const double wb = kStencil[j][b + 2];
          if (wb == 0.0) continue;
          acc += (wa * wb) * sample(a, b);
        }
      }
      jet(i, j) = acc / std::pow(h, d);
    }
  }
  return jet;
}

}  // namespace

JetTable analytic_jet(const SurfaceModel& surface, DomainPoint point, int order) {
  check_request(surface, point, order);
  const TaylorVec t = surface.expand(point);
  JetTable jet(point, order, surface.ambient_dim());
  for (int d = 0; d <= order; ++d)
    for (int j = 0; j <= d; ++j)
      for (int k = 0; k < surface.ambient_dim(); ++k)
        jet(d - j, j)[k] = t[static_cast<std::size_t>(k)].partial(d - j, j);
  return jet;
}

JetTable fd_jet(const SurfaceModel& surface, DomainPoint point, int order, double step) {
  check_request(surface, point, order);
  if (!(step > 0.0) || !std::isfinite(step))
    throw GeometryError(ErrorKind::precondition_violation, "finite-difference step must be positive");
  const double reach = 2.0 * step;
  const Domain& dom = surface.domain();
  for (DomainPoint corner : {DomainPoint{point.u - reach, point.v - reach},
                             DomainPoint{point.u + reach, point.v + reach}}) {
    if (!dom.contains(corner))
      throw GeometryError(ErrorKind::domain_error, "difference stencil leaves the domain");
  }
  const JetTable coarse = central_differences(surface, point, order, step);
  const JetTable fine = central_differences(surface, point, order, 0.5 * step);
  JetTable out(point, order, surface.ambient_dim());
  for (int d = 0; d <= order; ++d)
    for (int j = 0; j <= d; ++j)
      out(d - j, j) = (4.0 * fine(d - j, j) - coarse(d - j, j)) / 3.0;
  return out;
}

AmbientVector project_orthogonal(const AmbientVector& v, const std::vector<AmbientVector>& basis,
                                 double tol) {
  if (basis.empty()) return v;
  const auto dim = v.size();
  Eigen::MatrixXd b(dim, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].size() != dim)
      throw GeometryError(ErrorKind::invalid_argument, "basis vector dimension mismatch");
    b.col(static_cast<Eigen::Index>(k)) = basis[k];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
  const Eigen::MatrixXd r = qr.matrixR().template triangularView<Eigen::Upper>();
  const double lead = std::abs(r(0, 0));
  const auto k = b.cols();
  if (k > dim || lead == 0.0 || std::abs(r(k - 1, k - 1)) <= tol * lead)
    throw GeometryError(ErrorKind::degenerate_basis, "basis is numerically rank deficient");
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, k);
  return v - q * (q.transpose() * v);
}

}  // namespace ruledmin
