#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "ruledmin/taylor.hpp"

namespace ruledmin {

/// Point of the ambient Euclidean space R^{n+3} containing the sphere S^{n+2}.
/// Complex coordinates are packed as (x1, y1, x2, y2, ...).
using AmbientVector = Eigen::VectorXd;

struct DomainPoint {
  double u = 0.0;
  double v = 0.0;
};

/// Rectangle in the (u, v) plane, optionally periodic in either direction.
struct Domain {
  double u_min = 0.0;
  double u_max = 1.0;
  double v_min = 0.0;
  double v_max = 1.0;
  bool periodic_u = false;
  bool periodic_v = false;

  bool contains(DomainPoint p) const {
    const bool in_u = periodic_u || (p.u >= u_min && p.u <= u_max);
    const bool in_v = periodic_v || (p.v >= v_min && p.v <= v_max);
    return in_u && in_v && std::isfinite(p.u) && std::isfinite(p.v);
  }

  /// Affine map of the unit square onto the rectangle.
  DomainPoint at(double a, double b) const {
    return {u_min + a * (u_max - u_min), v_min + b * (v_max - v_min)};
  }
};

/// Partial derivatives d^{i+j} g / du^i dv^j, i + j <= order <= 4, at one point.
/// Mixed partials are stored once per multi-index.
class JetTable {
 public:
  static constexpr int kMaxOrder = 4;

  JetTable() = default;
  JetTable(DomainPoint point, int order, int ambient_dim)
      : point_(point), order_(order) {
    for (auto& p : partials_) p = AmbientVector::Zero(ambient_dim);
  }

  DomainPoint point() const { return point_; }
  int order() const { return order_; }
  int ambient_dim() const { return static_cast<int>(partials_[0].size()); }

  const AmbientVector& operator()(int i, int j) const {
    return partials_[Taylor2::index(i, j)];
  }
  AmbientVector& operator()(int i, int j) { return partials_[Taylor2::index(i, j)]; }

  /// Taylor expansion of the map around the base point, exact to `order()`.
  TaylorVec taylor() const {
    TaylorVec out(static_cast<std::size_t>(ambient_dim()));
    for (int k = 0; k < ambient_dim(); ++k) {
      Taylor2 t(0.0);
      for (int d = 0; d <= order_; ++d) {
        for (int j = 0; j <= d; ++j) {
          const int i = d - j;
          t.coeff(i, j) = (*this)(i, j)[k] / (factorial(i) * factorial(j));
        }
      }
      out[static_cast<std::size_t>(k)] = t.truncated(order_);
    }
    return out;
  }

 private:
  static double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  }

  DomainPoint point_{};
  int order_ = 0;
  std::array<AmbientVector, Taylor2::kSize> partials_{};
};

}  // namespace ruledmin
