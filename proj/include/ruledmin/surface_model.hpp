#pragma once

#include <functional>
#include <string>

#include "ruledmin/types.hpp"

namespace ruledmin {

/// How the tangent frame is rotated before the normal frame is built.
///
/// `coordinate` keeps Gram-Schmidt from d/du unless the first curvature
/// ellipse is non-circular, in which case e1 is put on its major axis.
/// `third_order` rotates e1 so that alpha^3(e1,e1,e2) is orthogonal to
/// alpha^3(e1,e1,e1); this is the natural gauge when the first ellipse is a
/// circle but the next one is not.
enum class TangentGauge { coordinate, third_order };

/// Immersion of a rectangle into the unit sphere of R^{n+3}.
class SurfaceModel {
 public:
  /// Exact Taylor expansion of the map around a point, one entry per ambient
  /// coordinate, exact through total degree 4.
  using TaylorProvider = std::function<TaylorVec(DomainPoint)>;

  SurfaceModel() = default;
  SurfaceModel(std::string name, int ambient_dim, Domain domain, TaylorProvider provider)
      : name_(std::move(name)),
        ambient_dim_(ambient_dim),
        domain_(domain),
        provider_(std::move(provider)) {}

  const std::string& name() const { return name_; }
  int ambient_dim() const { return ambient_dim_; }
  /// Codimension bookkeeping: the surface sits in S^{n+2}.
  int n() const { return ambient_dim_ - 3; }
  const Domain& domain() const { return domain_; }

  int orientation() const { return orientation_; }
  void set_orientation(int sign) { orientation_ = sign < 0 ? -1 : 1; }

  TangentGauge gauge() const { return gauge_; }
  void set_gauge(TangentGauge g) { gauge_ = g; }

  TaylorVec expand(DomainPoint p) const { return provider_(p); }
  AmbientVector value(DomainPoint p) const { return values(provider_(p)); }

 private:
  std::string name_;
  int ambient_dim_ = 0;
  Domain domain_{};
  TaylorProvider provider_;
  int orientation_ = 1;
  TangentGauge gauge_ = TangentGauge::coordinate;
};

/// Surface from a formula written once in Taylor arithmetic; the
/// coordinates arrive as Taylor2 variables, so every derivative is exact.
using TaylorFormula = std::function<TaylorVec(const Taylor2& u, const Taylor2& v)>;

inline SurfaceModel make_taylor_surface(std::string name, int ambient_dim, Domain domain,
                                        TaylorFormula formula) {
  auto provider = [formula = std::move(formula)](DomainPoint p) {
    return formula(Taylor2::variable(0, p.u), Taylor2::variable(1, p.v));
  };
  return SurfaceModel(std::move(name), ambient_dim, domain, std::move(provider));
}

}  // namespace ruledmin
