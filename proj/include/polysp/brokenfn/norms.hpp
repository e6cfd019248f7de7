#pragma once

#include <cmath>

#include "polysp/brokenfn/broken_function.hpp"
#include "polysp/exponents/exponents.hpp"

namespace polysp {

/// A norm value with its propagated quadrature error.
struct NormValue {
  double value = 0.0;
  double error = 0.0;
  bool approximate = false;
  bool cap_hit = false;
};

/// Where a norm of a broken function is taken.
struct Region {
  bool whole = true;
  std::size_t element = 0;
  static Region mesh() { return {true, 0}; }
  static Region of_element(std::size_t k) { return {false, k}; }
};

namespace detail {

inline void check_exponent(double q) {
  POLYSP_REQUIRE(q >= 1.0 || std::isinf(q), DomainError, "norm exponent must be >= 1 or infinity, got " + std::to_string(q));
}

/// (∫ ...)^{1/q} with first-order propagation of the integral's error.
inline NormValue root(const Integral& I, double q) {
  NormValue n;
  const double v = std::max(I.value, 0.0);
  n.value = std::pow(v, 1.0 / q);
  n.error = v > 0.0 ? n.value * I.error / (q * v) : std::pow(I.error, 1.0 / q);
  n.approximate = I.approximate;
  n.cap_hit = I.cap_hit;
  return n;
}

inline NormValue sup(double m) { return {m, 0.0, true, false}; }

}  // namespace detail

/// ∫_K |v|^q (signed_power: ∫_K |v|^{q-1} v · w) with an optional weight w in the scaled coordinates of K.
inline Integral element_power_integral(const BrokenFunction& v, std::size_t k, const PowerSpec& spec,
                                       const Poly2* weight = nullptr, const AdaptiveOptions& opt = {}) {
  const auto& e = v.mesh().element(k);
  Integral s;
  for (const auto& t : e.sub_triangulation)
    s += integrate_power_triangle(v.local(k), spec, weight, v.to_local(k, t.vertices[0]), v.to_local(k, t.vertices[1]),
                                  v.to_local(k, t.vertices[2]), opt);
  return s.scaled(e.diameter * e.diameter);
}

/// ∫_K |∇v|^r.
inline Integral element_gradient_integral(const BrokenFunction& v, std::size_t k, double r, const AdaptiveOptions& opt = {}) {
  const auto g = v.gradient(k);
  const Poly2 P = g[0] * g[0] + g[1] * g[1];
  const auto& e = v.mesh().element(k);
  Integral s;
  if (P.is_zero()) return s;
  for (const auto& t : e.sub_triangulation)
    s += integrate_power_triangle(P, PowerSpec{0.5 * r, false, true}, nullptr, v.to_local(k, t.vertices[0]),
                                  v.to_local(k, t.vertices[1]), v.to_local(k, t.vertices[2]), opt);
  return s.scaled(e.diameter * e.diameter);
}

/// ∫_F |g|^q.
inline Integral facet_power_integral(const FacetFunction& g, double q, const AdaptiveOptions& opt = {}) {
  return integrate_power_segment(g.g, PowerSpec{q, false, false}, nullptr, opt).scaled(g.length);
}

inline double element_max_abs(const BrokenFunction& v, std::size_t k) {
  double m = 0.0;
  for (const auto& t : v.mesh().element(k).sub_triangulation)
    m = std::max(m, sampled_max_abs(v.local(k), v.to_local(k, t.vertices[0]), v.to_local(k, t.vertices[1]),
                                    v.to_local(k, t.vertices[2])));
  return m;
}

inline double element_gradient_max(const BrokenFunction& v, std::size_t k) {
  const auto g = v.gradient(k);
  const Poly2 P = g[0] * g[0] + g[1] * g[1];
  double m = 0.0;
  for (const auto& t : v.mesh().element(k).sub_triangulation)
    m = std::max(m, sampled_max_abs(P, v.to_local(k, t.vertices[0]), v.to_local(k, t.vertices[1]), v.to_local(k, t.vertices[2])));
  return std::sqrt(m);
}

/// ‖v‖_{L^q(region)}; q = ∞ is a maximum over a dense node set and is flagged approximate.
inline NormValue lq_norm(const BrokenFunction& v, double q, Region region = Region::mesh(), const AdaptiveOptions& opt = {}) {
  detail::check_exponent(q);
  const std::size_t n = v.mesh().num_elements();
  POLYSP_REQUIRE(region.whole || region.element < n, DomainError, "lq_norm: element not in mesh");
  const std::size_t k0 = region.whole ? 0 : region.element, k1 = region.whole ? n : region.element + 1;
  if (std::isinf(q)) {
    double m = 0.0;
    for (std::size_t k = k0; k < k1; ++k) m = std::max(m, element_max_abs(v, k));
    return detail::sup(m);
  }
  Integral I;
  for (std::size_t k = k0; k < k1; ++k) I += element_power_integral(v, k, PowerSpec{q, false, false}, nullptr, opt);
  return detail::root(I, q);
}

inline NormValue lq_norm(const FacetFunction& g, double q, const AdaptiveOptions& opt = {}) {
  detail::check_exponent(q);
  if (std::isinf(q)) return detail::sup(sampled_max_abs(g.g));
  return detail::root(facet_power_integral(g, q, opt), q);
}

/// ‖∇_h v‖_{L^p(region)} with the Euclidean norm of the gradient pointwise.
inline NormValue broken_seminorm(const BrokenFunction& v, double p, Region region = Region::mesh(), const AdaptiveOptions& opt = {}) {
  detail::check_exponent(p);
  const std::size_t n = v.mesh().num_elements();
  POLYSP_REQUIRE(region.whole || region.element < n, DomainError, "broken_seminorm: element not in mesh");
  const std::size_t k0 = region.whole ? 0 : region.element, k1 = region.whole ? n : region.element + 1;
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t k = k0; k < k1; ++k) m = std::max(m, element_gradient_max(v, k));
    return detail::sup(m);
  }
  Integral I;
  for (std::size_t k = k0; k < k1; ++k) I += element_gradient_integral(v, k, p, opt);
  return detail::root(I, p);
}

/// ‖v|_K‖_{L^q(∂K)}.
inline NormValue boundary_norm(const BrokenFunction& v, std::size_t k, double q, const AdaptiveOptions& opt = {}) {
  detail::check_exponent(q);
  const auto& e = v.mesh().element(k);
  if (std::isinf(q)) {
    double m = 0.0;
    for (int f : e.facets) m = std::max(m, sampled_max_abs(v.trace(k, f)));
    return detail::sup(m);
  }
  Integral I;
  for (int f : e.facets) I += facet_power_integral(facet_trace(v, k, f), q, opt);
  return detail::root(I, q);
}

}  // namespace polysp
