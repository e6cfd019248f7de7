#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "polysp/core/point.hpp"

namespace polysp {

/// Univariate polynomial, coefficients in increasing powers.
class Poly1 {
public:
  Poly1() = default;
  explicit Poly1(std::vector<double> c) : c_(std::move(c)) {}

  static Poly1 constant(double v) { return Poly1({v}); }
  static Poly1 linear(double c0, double c1) { return Poly1({c0, c1}); }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coeffs() const { return c_; }
  std::vector<double>& coeffs() { return c_; }
  double operator[](std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }

  double operator()(double t) const {
    double r = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) r = r * t + c_[i];
    return r;
  }

  /// Value and first derivative at t.
  std::pair<double, double> value_and_slope(double t) const {
    double r = 0.0, d = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) {
      d = d * t + r;
      r = r * t + c_[i];
    }
    return {r, d};
  }

  Poly1 derivative() const {
    if (c_.size() <= 1) return Poly1({0.0});
    std::vector<double> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<double>(i) * c_[i];
    return Poly1(std::move(d));
  }

  /// Exact integral over [a, b].
  double integrate(double a, double b) const {
    double ra = 0.0, rb = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) {
      double ci = c_[i] / static_cast<double>(i + 1);
      ra = ra * a + ci;
      rb = rb * b + ci;
    }
    return rb * b - ra * a;
  }

  Poly1 operator*(const Poly1& o) const {
    if (c_.empty() || o.c_.empty()) return Poly1();
    std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i)
      for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    return Poly1(std::move(r));
  }

  Poly1 operator+(const Poly1& o) const {
    std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
    return Poly1(std::move(r));
  }

  Poly1 operator-(const Poly1& o) const { return *this + o * -1.0; }

  Poly1 operator*(double s) const {
    Poly1 r = *this;
    for (double& v : r.c_) v *= s;
    return r;
  }

  /// Multiply in place by (a + b t).
  void mul_linear(double a, double b) {
    c_.push_back(0.0);
    for (std::size_t i = c_.size(); i-- > 0;) {
      c_[i] = a * c_[i] + (i > 0 ? b * c_[i - 1] : 0.0);
    }
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Drop leading coefficients that are negligible relative to the largest one.
  Poly1 trimmed(double rel = 1e-13) const {
    Poly1 r = *this;
    double s = max_abs_coeff();
    while (r.c_.size() > 1 && std::abs(r.c_.back()) <= rel * s) r.c_.pop_back();
    return r;
  }

private:
  std::vector<double> c_;
};

namespace detail {

inline double refine_root(const Poly1& p, double lo, double hi, double flo) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    auto [f, df] = p.value_and_slope(x);
    if (f == 0.0) return x;
    if ((f < 0) == (flo < 0)) {
      lo = x;
      flo = f;
    } else {
      hi = x;
    }
    if (hi - lo <= 4e-16 * std::max(1.0, std::abs(x))) break;
    double xn = (df != 0.0) ? x - f / df : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  return x;
}

inline void roots_rec(const Poly1& p, double a, double b, std::vector<double>& out) {
  const int n = p.degree();
  if (n <= 0) return;
  if (n == 1) {
    double r = -p[0] / p[1];
    if (r > a && r < b) out.push_back(r);
    return;
  }
  std::vector<double> crit;
  roots_rec(p.derivative().trimmed(), a, b, crit);
  std::vector<double> pts;
  pts.reserve(crit.size() + 2);
  pts.push_back(a);
  pts.insert(pts.end(), crit.begin(), crit.end());
  pts.push_back(b);
  std::vector<double> vals(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = p(pts[i]);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double f0 = vals[i], f1 = vals[i + 1];
    if (i > 0 && f0 == 0.0) out.push_back(pts[i]);
    if (f0 != 0.0 && f1 != 0.0 && ((f0 < 0) != (f1 < 0)))
      out.push_back(refine_root(p, pts[i], pts[i + 1], f0));
  }
}

}  // namespace detail

/// Real roots of odd multiplicity (and exact zeros at critical points) strictly inside (a, b), sorted.
inline std::vector<double> real_roots(const Poly1& p, double a, double b) {
  std::vector<double> out;
  Poly1 q = p.trimmed();
  if (q.max_abs_coeff() == 0.0) return out;
  detail::roots_rec(q, a, b, out);
  std::sort(out.begin(), out.end());
  return out;
}

/// Bivariate polynomial in monomials x^a y^b, a + b <= degree, stored by total degree:
/// index(a, b) = m(m+1)/2 + b with m = a + b.
class Poly2 {
public:
  static constexpr int max_degree = 40;

  Poly2() : Poly2(0) {}
  explicit Poly2(int degree) : n_(degree), c_(size(degree), 0.0) { assert(degree <= max_degree); }
  Poly2(int degree, std::vector<double> coeffs) : n_(degree), c_(std::move(coeffs)) {
    assert(c_.size() == size(degree));
  }

  static std::size_t size(int degree) {
    return static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
  }
  static std::size_t index(int a, int b) {
    int m = a + b;
    return static_cast<std::size_t>(m * (m + 1) / 2 + b);
  }
  static Poly2 constant(double v) { return Poly2(0, {v}); }
  static Poly2 monomial(int a, int b, double coeff = 1.0) {
    Poly2 p(a + b);
    p.c_[index(a, b)] = coeff;
    return p;
  }
  /// c0 + cx x + cy y
  static Poly2 affine(double c0, double cx, double cy) { return Poly2(1, {c0, cx, cy}); }

  int degree() const { return n_; }
  const std::vector<double>& coeffs() const { return c_; }
  std::vector<double>& coeffs() { return c_; }
  double coeff(int a, int b) const { return a + b <= n_ ? c_[index(a, b)] : 0.0; }
  double& coeff(int a, int b) { return c_[index(a, b)]; }

  bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
  }

  double operator()(double x, double y) const {
    std::array<double, max_degree + 1> yp;
    yp[0] = 1.0;
    for (int i = 1; i <= n_; ++i) yp[i] = yp[i - 1] * y;
    // Horner in x over rows of fixed a.
    double r = 0.0;
    for (int a = n_; a >= 0; --a) {
      double qa = 0.0;
      for (int b = 0; a + b <= n_; ++b) qa += c_[index(a, b)] * yp[b];
      r = r * x + qa;
    }
    return r;
  }
  double operator()(const Point& p) const { return (*this)(p.x, p.y); }

  Poly2 dx() const {
    if (n_ == 0) return Poly2(0);
    Poly2 r(n_ - 1);
    for (int a = 1; a <= n_; ++a)
      for (int b = 0; a + b <= n_; ++b) r.coeff(a - 1, b) = a * coeff(a, b);
    return r;
  }
  Poly2 dy() const {
    if (n_ == 0) return Poly2(0);
    Poly2 r(n_ - 1);
    for (int a = 0; a < n_; ++a)
      for (int b = 1; a + b <= n_; ++b) r.coeff(a, b - 1) = b * coeff(a, b);
    return r;
  }

  Poly2 operator+(const Poly2& o) const {
    Poly2 r(std::max(n_, o.n_));
    for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] += c_[i];
    for (std::size_t i = 0; i < o.c_.size(); ++i) r.c_[i] += o.c_[i];
    return r;
  }
  Poly2 operator-(const Poly2& o) const { return *this + o * -1.0; }
  Poly2 operator*(double s) const {
    Poly2 r = *this;
    for (double& v : r.c_) v *= s;
    return r;
  }
  Poly2 operator*(const Poly2& o) const {
    Poly2 r(n_ + o.n_);
    for (int m = 0; m <= n_; ++m)
      for (int b = 0; b <= m; ++b) {
        double v = c_[index(m - b, b)];
        if (v == 0.0) continue;
        for (int m2 = 0; m2 <= o.n_; ++m2)
          for (int b2 = 0; b2 <= m2; ++b2)
            r.c_[index(m - b + m2 - b2, b + b2)] += v * o.c_[index(m2 - b2, b2)];
      }
    return r;
  }

  /// Polynomial t -> p(a + t (b - a)).
  Poly1 restrict_to(const Point& a, const Point& b) const {
    const double dxv = b.x - a.x, dyv = b.y - a.y;
    Poly1 acc;
    for (int ai = n_; ai >= 0; --ai) {
      Poly1 q;
      for (int bi = n_ - ai; bi >= 0; --bi) {
        q.mul_linear(a.y, dyv);
        q.coeffs()[0] += c_[index(ai, bi)];
      }
      if (ai == n_) {
        acc = q;
      } else {
        acc.mul_linear(a.x, dxv);
        acc = acc + q;
      }
    }
    return acc;
  }

  /// Polynomial (u, v) -> p(cx + s u, cy + s v).
  Poly2 affine_substitute(double cx, double cy, double s) const {
    // Binomial expansion of (cx + s u)^a (cy + s v)^b.
    std::vector<std::vector<double>> binom(n_ + 1, std::vector<double>(n_ + 1, 0.0));
    for (int i = 0; i <= n_; ++i) {
      binom[i][0] = 1.0;
      for (int j = 1; j <= i; ++j) binom[i][j] = binom[i - 1][j - 1] + (j <= i - 1 ? binom[i - 1][j] : 0.0);
    }
    std::vector<double> cxp(n_ + 1, 1.0), cyp(n_ + 1, 1.0), sp(n_ + 1, 1.0);
    for (int i = 1; i <= n_; ++i) {
      cxp[i] = cxp[i - 1] * cx;
      cyp[i] = cyp[i - 1] * cy;
      sp[i] = sp[i - 1] * s;
    }
    Poly2 r(n_);
    for (int a = 0; a <= n_; ++a)
      for (int b = 0; a + b <= n_; ++b) {
        double v = c_[index(a, b)];
        if (v == 0.0) continue;
        for (int i = 0; i <= a; ++i)
          for (int j = 0; j <= b; ++j)
            r.coeff(i, j) += v * binom[a][i] * cxp[a - i] * sp[i] * binom[b][j] * cyp[b - j] * sp[j];
      }
    return r;
  }

  /// Polynomial (u, v) -> p(m00 u + m01 v, m10 u + m11 v).
  Poly2 linear_substitute(double m00, double m01, double m10, double m11) const {
    std::vector<Poly2> xp{Poly2::constant(1.0)}, yp{Poly2::constant(1.0)};
    for (int i = 1; i <= n_; ++i) {
      xp.push_back(xp.back() * Poly2::affine(0.0, m00, m01));
      yp.push_back(yp.back() * Poly2::affine(0.0, m10, m11));
    }
    Poly2 r(n_);
    for (int a = 0; a <= n_; ++a)
      for (int b = 0; a + b <= n_; ++b)
        if (c_[index(a, b)] != 0.0) r = r + (xp[a] * yp[b]) * c_[index(a, b)];
    return r.promoted(n_);
  }

  /// The same polynomial represented at a larger degree.
  Poly2 promoted(int degree) const {
    if (degree <= n_) return *this;
    Poly2 r(degree);
    std::copy(c_.begin(), c_.end(), r.c_.begin());
    return r;
  }

private:
  int n_;
  std::vector<double> c_;
};

inline Poly2 operator*(double s, const Poly2& p) { return p * s; }

}  // namespace polysp
