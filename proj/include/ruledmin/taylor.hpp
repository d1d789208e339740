#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace ruledmin {

/// Truncated bivariate Taylor polynomial in the displacement (du, dv) around a
/// base point, used for forward-mode jet propagation through the frame
/// construction.
///
/// Coefficients are stored for every monomial du^i dv^j with i + j <= 5.
/// `degree()` is the highest total degree that is still exact; operations
/// propagate the minimum degree of their operands and differentiation drops
/// it by one. A negative degree marks a quantity whose value is unavailable.
class Taylor2 {
 public:
  static constexpr int kMaxDegree = 5;
  using Derivatives = std::array<double, kMaxDegree + 1>;
  static constexpr int kSize = (kMaxDegree + 1) * (kMaxDegree + 2) / 2;

  static constexpr int index(int i, int j) {
    const int d = i + j;
    return d * (d + 1) / 2 + j;
  }

  Taylor2() : c_{}, degree_(kMaxDegree) {}
  Taylor2(double value) : c_{}, degree_(kMaxDegree) { c_[0] = value; }  // NOLINT

  static Taylor2 invalid() {
    Taylor2 t;
    t.degree_ = -1;
    t.c_.fill(std::numeric_limits<double>::quiet_NaN());
    return t;
  }

  /// Coordinate function u (or v) around the base coordinate `base`.
  static Taylor2 variable(int axis, double base) {
    Taylor2 t(base);
    t.c_[axis == 0 ? index(1, 0) : index(0, 1)] = 1.0;
    return t;
  }

  int degree() const { return degree_; }
  bool valid() const { return degree_ >= 0; }

  double coeff(int i, int j) const { return c_[index(i, j)]; }
  double& coeff(int i, int j) { return c_[index(i, j)]; }

  double value() const {
    return valid() ? c_[0] : std::numeric_limits<double>::quiet_NaN();
  }

  /// d^{i+j} / du^i dv^j at the base point.
  double partial(int i, int j) const {
    if (i + j > degree_) return std::numeric_limits<double>::quiet_NaN();
    return c_[index(i, j)] * factorial(i) * factorial(j);
  }

  /// Copy whose exact degree is capped at `degree`.
  Taylor2 truncated(int degree) const {
    Taylor2 r = *this;
    r.lower(degree);
    r.trim();
    return r;
  }

  Taylor2 du() const { return derivative(0); }
  Taylor2 dv() const { return derivative(1); }

  Taylor2 derivative(int axis) const {
    if (degree_ <= 0) return invalid();
    Taylor2 r;
    r.degree_ = degree_ - 1;
    for (int d = 0; d <= r.degree_; ++d) {
      for (int j = 0; j <= d; ++j) {
        const int i = d - j;
        r.c_[index(i, j)] = axis == 0 ? (i + 1) * c_[index(i + 1, j)]
                                      : (j + 1) * c_[index(i, j + 1)];
      }
    }
    return r;
  }

  Taylor2& operator+=(const Taylor2& o) {
    lower(o.degree_);
    for (int k = 0; k < kSize; ++k) c_[k] += o.c_[k];
    trim();
    return *this;
  }
  Taylor2& operator-=(const Taylor2& o) {
    lower(o.degree_);
    for (int k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
    trim();
    return *this;
  }
  Taylor2& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }

  friend Taylor2 operator+(Taylor2 a, const Taylor2& b) { return a += b; }
  friend Taylor2 operator-(Taylor2 a, const Taylor2& b) { return a -= b; }
  friend Taylor2 operator-(Taylor2 a) { return a *= -1.0; }
  friend Taylor2 operator*(Taylor2 a, double s) { return a *= s; }
  friend Taylor2 operator*(double s, Taylor2 a) { return a *= s; }
  friend Taylor2 operator/(Taylor2 a, double s) { return a *= 1.0 / s; }

  friend Taylor2 operator*(const Taylor2& a, const Taylor2& b) {
    Taylor2 r;
    r.degree_ = std::min(a.degree_, b.degree_);
    if (r.degree_ < 0) return invalid();
    for (int d1 = 0; d1 <= r.degree_; ++d1) {
      for (int j1 = 0; j1 <= d1; ++j1) {
        const double x = a.c_[index(d1 - j1, j1)];
        if (x == 0.0) continue;
        for (int d2 = 0; d2 <= r.degree_ - d1; ++d2) {
          for (int j2 = 0; j2 <= d2; ++j2) {
            r.c_[index(d1 - j1 + d2 - j2, j1 + j2)] +=
                x * b.c_[index(d2 - j2, j2)];
          }
        }
      }
    }
    return r;
  }

  /// f(x) given f and its derivatives at x.value().
  friend Taylor2 compose(const Taylor2& x, const Derivatives& f) {
    if (!x.valid()) return invalid();
    Taylor2 h = x;
    h.c_[0] = 0.0;
    Taylor2 r(f[0]);
    r.degree_ = x.degree_;
    Taylor2 power(1.0);
    double fact = 1.0;
    for (int k = 1; k <= x.degree_; ++k) {
      power = power * h;
      fact *= k;
      r += power * (f[static_cast<std::size_t>(k)] / fact);
    }
    return r;
  }

  friend Taylor2 reciprocal(const Taylor2& x) {
    const double i1 = 1.0 / x.value();
    Derivatives f;
    double p = i1;
    for (int k = 0; k <= kMaxDegree; ++k) {
      f[static_cast<std::size_t>(k)] = (k % 2 == 0 ? 1.0 : -1.0) * factorial(k) * p;
      p *= i1;
    }
    return compose(x, f);
  }
  friend Taylor2 operator/(const Taylor2& a, const Taylor2& b) {
    return a * reciprocal(b);
  }
  friend Taylor2 operator/(double s, const Taylor2& b) {
    return reciprocal(b) * s;
  }

  friend Taylor2 sqrt(const Taylor2& x) {
    const double a = x.value();
    Derivatives f;
    // d^k/da^k a^{1/2} = (1/2)(1/2 - 1)...(1/2 - k + 1) a^{1/2 - k}
    double c = std::sqrt(a);
    for (int k = 0; k <= kMaxDegree; ++k) {
      f[static_cast<std::size_t>(k)] = c;
      c *= (0.5 - k) / a;
    }
    return compose(x, f);
  }
  friend Taylor2 sin(const Taylor2& x) {
    const double s = std::sin(x.value()), c = std::cos(x.value());
    const std::array<double, 4> cycle{s, c, -s, -c};
    Derivatives f;
    for (int k = 0; k <= kMaxDegree; ++k) f[static_cast<std::size_t>(k)] = cycle[static_cast<std::size_t>(k % 4)];
    return compose(x, f);
  }
  friend Taylor2 cos(const Taylor2& x) {
    const double s = std::sin(x.value()), c = std::cos(x.value());
    const std::array<double, 4> cycle{c, -s, -c, s};
    Derivatives f;
    for (int k = 0; k <= kMaxDegree; ++k) f[static_cast<std::size_t>(k)] = cycle[static_cast<std::size_t>(k % 4)];
    return compose(x, f);
  }
  friend Taylor2 exp(const Taylor2& x) {
    Derivatives f;
    f.fill(std::exp(x.value()));
    return compose(x, f);
  }
  /// Branch follows std::atan2 at the base point.
  friend Taylor2 atan2(const Taylor2& y, const Taylor2& x) {
    const double x0 = x.value(), y0 = y.value();
    Taylor2 w = (y * x0 - x * y0) / (x * x0 + y * y0);
    w.c_[0] = 0.0;
    // atan(w) = w - w^3/3 + w^5/5 - ...
    Derivatives f{};
    for (int k = 1; k <= kMaxDegree; k += 2)
      f[static_cast<std::size_t>(k)] = ((k / 2) % 2 == 0 ? 1.0 : -1.0) * factorial(k - 1);
    Taylor2 r = compose(w, f);
    r.c_[0] = std::atan2(y0, x0);
    return r;
  }

  friend Taylor2 pow(const Taylor2& x, int k) {
    Taylor2 r(1.0);
    for (int i = 0; i < k; ++i) r = r * x;
    return r;
  }

 private:
  static constexpr double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  }

  void lower(int other_degree) { degree_ = std::min(degree_, other_degree); }

  void trim() {
    if (degree_ < 0) {
      c_.fill(std::numeric_limits<double>::quiet_NaN());
      return;
    }
    for (int d = degree_ + 1; d <= kMaxDegree; ++d)
      for (int j = 0; j <= d; ++j) c_[index(d - j, j)] = 0.0;
  }

  std::array<double, kSize> c_;
  int degree_;
};

/// Vector of Taylor2 components: an ambient-space-valued field near a point.
using TaylorVec = std::vector<Taylor2>;

inline Taylor2 dot(const TaylorVec& a, const TaylorVec& b) {
  Taylor2 r(0.0);
  for (std::size_t k = 0; k < a.size(); ++k) r += a[k] * b[k];
  return r;
}

inline TaylorVec scaled(const TaylorVec& a, const Taylor2& s) {
  TaylorVec r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] * s;
  return r;
}

/// a += s * b
inline void axpy(TaylorVec& a, const Taylor2& s, const TaylorVec& b) {
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += s * b[k];
}

inline TaylorVec derivative(const TaylorVec& a, int axis) {
  TaylorVec r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k].derivative(axis);
  return r;
}

inline Eigen::VectorXd values(const TaylorVec& a) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) r[static_cast<Eigen::Index>(k)] = a[k].value();
  return r;
}

inline int min_degree(const TaylorVec& a) {
  int d = Taylor2::kMaxDegree;
  for (const auto& x : a) d = std::min(d, x.degree());
  return d;
}

}  // namespace ruledmin
