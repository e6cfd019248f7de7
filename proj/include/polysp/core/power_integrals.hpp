#pragma once

#include <algorithm>
#include <cmath>

#include "polysp/core/polynomial.hpp"
#include "polysp/core/quadrature.hpp"

namespace polysp {

/// Integrand |b|^exponent * sgn(b)^[signed_power] * w for a polynomial base b and optional weight w.
struct PowerSpec {
  double exponent = 1.0;
  bool signed_power = false;
  bool base_nonnegative = false;  // caller guarantees b >= 0 (e.g. a sum of squares)
};

namespace detail {

inline bool small_integer(double e, int& m) {
  if (e < 0.0 || e > 200.0 || e != std::floor(e)) return false;
  m = static_cast<int>(e);
  return true;
}

inline bool is_polynomial_integrand(const PowerSpec& s, int& m) {
  if (!small_integer(s.exponent, m)) return false;
  return s.base_nonnegative || ((m % 2 == 0) != s.signed_power);
}

inline double ipow(double x, int m) {
  double r = 1.0;
  while (m > 0) {
    if (m & 1) r *= x;
    x *= x;
    m >>= 1;
  }
  return r;
}

inline double power_value(double b, const PowerSpec& s) {
  double v = std::pow(std::abs(b), s.exponent);
  if (s.signed_power) v = b > 0 ? v : (b < 0 ? -v : 0.0);
  return v;
}

/// Parameters u in (0, 1) where the number of roots of the base on the segment a + u(b-a) -> a + u(c-a)
/// changes in the interior, i.e. where the zero curve is tangent to c - b. Located by a scan over `samples`
/// cells and bisection; a pair of events inside one cell cancels and is not seen.
inline std::vector<double> tangency_cuts(const Poly2& base, const Point& a, const Point& b, const Point& c, int samples = 64) {
  auto count = [&](double u) { return real_roots(base.restrict_to(a + u * (b - a), a + u * (c - a)), 0.0, 1.0).size(); };
  std::vector<double> cuts;
  double u0 = 0.5 / samples;
  std::size_t k0 = count(u0);
  for (int i = 1; i < samples; ++i) {
    const double u1 = (i + 0.5) / samples;
    const std::size_t k1 = count(u1);
    if (k1 != k0) {
      double lo = u0, hi = u1;
      while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        (count(mid) == k0 ? lo : hi) = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    u0 = u1;
    k0 = k1;
  }
  return cuts;
}

}  // namespace detail

/// Integral of the power integrand over t in [0,1] (no length factor).
inline Integral integrate_power_segment(const Poly1& base, const PowerSpec& spec, const Poly1* weight = nullptr,
                                        const AdaptiveOptions& opt = {}) {
  Integral out;
  const int dw = weight ? std::max(weight->degree(), 0) : 0;
  const int db = std::max(base.degree(), 0);
  int m = 0;
  auto wval = [&](double t) { return weight ? (*weight)(t) : 1.0; };
  if (detail::is_polynomial_integrand(spec, m)) {
    const QuadratureRule& rule = segment_rule(m * db + dw);
    out.value = integrate_segment_rule([&](double t) { return detail::ipow(base(t), m) * wval(t); }, 0.0, 1.0, rule);
    return out;
  }
  std::vector<double> cuts = real_roots(base, 0.0, 1.0);
  cuts.insert(cuts.begin(), 0.0);
  cuts.push_back(1.0);
  const bool integer_power = detail::small_integer(spec.exponent, m);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double t0 = cuts[i], t1 = cuts[i + 1];
    if (!(t1 > t0)) continue;
    const double bm = base(0.5 * (t0 + t1));
    if (bm == 0.0) continue;
    const double sgn = bm > 0 ? 1.0 : -1.0;
    if (integer_power) {
      double factor = detail::ipow(sgn, m + (spec.signed_power ? 1 : 0));
      const QuadratureRule& rule = segment_rule(m * db + dw);
      out.value += factor * integrate_segment_rule([&](double t) { return detail::ipow(base(t), m) * wval(t); }, t0, t1, rule);
    } else {
      double factor = spec.signed_power ? sgn : 1.0;
      Integral piece = adaptive_segment(
          [&](double t) { return factor * std::pow(std::abs(base(t)), spec.exponent) * wval(t); }, t0, t1, opt);
      out += piece;
    }
  }
  return out;
}

/// Integral of the power integrand over the triangle (a, b, c), in the coordinates of the polynomials.
inline Integral integrate_power_triangle(const Poly2& base, const PowerSpec& spec, const Poly2* weight,
                                         const Point& a, const Point& b, const Point& c,
                                         const AdaptiveOptions& opt = {}) {
  Integral out;
  const double area = triangle_area(a, b, c);
  if (area == 0.0) return out;
  const int dw = weight ? weight->degree() : 0;
  auto wval = [&](const Point& x) { return weight ? (*weight)(x) : 1.0; };
  int m = 0;
  if (detail::is_polynomial_integrand(spec, m)) {
    const QuadratureRule& rule = triangle_rule(std::min(m * base.degree() + dw, 100));
    out.value = integrate_triangle_rule([&](const Point& x) { return detail::ipow(base(x), m) * wval(x); }, a, b, c, rule);
    return out;
  }
  if (base.is_zero()) return out;
  if (spec.base_nonnegative) {
    return adaptive_triangle(
        [&](const Point& x) { return std::pow(std::max(base(x), 0.0), spec.exponent) * wval(x); }, a, b, c, opt);
  }
  // Iterated integration in collapsed coordinates. The inner integral along the segment
  // A + u(B-A) -> A + u(C-A) is split at the real roots of the restricted base.
  AdaptiveOptions inner = opt;
  inner.rel_tol = opt.rel_tol * 1e-2;
  double inner_rel_err = 0.0;
  bool inner_cap = false;
  auto g = [&](double u) {
    Point s0 = a + u * (b - a), s1 = a + u * (c - a);
    Poly1 bl = base.restrict_to(s0, s1);
    Integral r;
    if (weight) {
      Poly1 wl = weight->restrict_to(s0, s1);
      r = integrate_power_segment(bl, spec, &wl, inner);
    } else {
      r = integrate_power_segment(bl, spec, nullptr, inner);
    }
    if (r.value != 0.0) inner_rel_err = std::max(inner_rel_err, r.error / std::abs(r.value));
    inner_cap = inner_cap || r.cap_hit;
    return u * r.value;
  };
  // Roots of the base enter or leave the inner segment through the edges a-b and a-c, or appear and
  // vanish in pairs where the zero curve is tangent to the segment; the outer integrand is smooth between.
  std::vector<double> cuts = real_roots(base.restrict_to(a, b), 0.0, 1.0);
  for (double u : real_roots(base.restrict_to(a, c), 0.0, 1.0)) cuts.push_back(u);
  if (base.degree() >= 2)
    for (double u : detail::tangency_cuts(base, a, b, c)) cuts.push_back(u);
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] - cuts[i] > 1e-14) out += adaptive_segment(g, cuts[i], cuts[i + 1], opt);
  out.value *= 2.0 * area;
  out.error = 2.0 * area * out.error + std::abs(out.value) * inner_rel_err;
  out.error = std::max(out.error, 10.0 * opt.rel_tol * std::abs(out.value));
  out.cap_hit = out.cap_hit || inner_cap;
  out.approximate = true;
  return out;
}

/// Exact integral of a polynomial over a triangle.
inline double integrate_polynomial(const Poly2& p, const Point& a, const Point& b, const Point& c) {
  return integrate_triangle_rule([&](const Point& x) { return p(x); }, a, b, c, triangle_rule(p.degree()));
}

/// Max of |b| over a triangle sampled at the nodes of a dense rule and the vertices.
inline double sampled_max_abs(const Poly2& base, const Point& a, const Point& b, const Point& c, int rule_degree = 30) {
  const QuadratureRule& rule = triangle_rule(rule_degree);
  double mx = std::max({std::abs(base(a)), std::abs(base(b)), std::abs(base(c))});
  for (const auto& l : rule.nodes) mx = std::max(mx, std::abs(base(barycentric_point(l, a, b, c))));
  return mx;
}

inline double sampled_max_abs(const Poly1& base, int points = 40) {
  const QuadratureRule& rule = gauss_legendre(points);
  double mx = std::max(std::abs(base(0.0)), std::abs(base(1.0)));
  for (const auto& n : rule.nodes) mx = std::max(mx, std::abs(base(n[0])));
  return mx;
}

}  // namespace polysp
