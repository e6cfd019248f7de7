#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "polysp/core/error.hpp"
#include "polysp/geometry/domain.hpp"

namespace polysp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Conjugate index x/(x-1), with 1' = ∞ and ∞' = 1.
inline double conjugate(double x) {
  POLYSP_REQUIRE(x >= 1.0, DomainError, "conjugate: index must be >= 1");
  if (x == 1.0) return kInf;
  if (std::isinf(x)) return 1.0;
  return x / (x - 1.0);
}

/// p and the indices derived from it in dimension d. Infinite members are IEEE infinities.
struct ExponentSet {
  double p = 2.0;
  int d = 2;
  double p_conj = 2.0;   // p'
  double p_star = kInf;  // p* = pd/(d-p) for p < d
  double p_sharp = kInf; // p♯ = p(d-1)/(d-p) for p < d
  double one_star = 2.0; // 1* = d/(d-1)
  double p_ostar = 4.0;  // p·1*

  bool subcritical() const { return p < d; }
};

inline ExponentSet derive_exponents(double p, int d) {
  POLYSP_REQUIRE(std::isfinite(p) && p >= 1.0, DomainError, "derive_exponents: p must be a finite real >= 1");
  POLYSP_REQUIRE(d >= 2, DomainError, "derive_exponents: d must be >= 2");
  ExponentSet e;
  e.p = p;
  e.d = d;
  e.p_conj = conjugate(p);
  if (p < d) {
    e.p_star = p * d / (d - p);
    e.p_sharp = p * (d - 1) / (d - p);
  }
  e.one_star = static_cast<double>(d) / (d - 1);
  e.p_ostar = p * e.one_star;
  return e;
}

/// C_tr(q, s, d, γ) = [d π^{d(s-q)/(2s)} / (γ Γ(d/2+1)^{(s-q)/s}) + (q-1)/γ]^{1/q}; s = ∞ is allowed.
inline double trace_constant(double q, double s, int d, double gamma) {
  POLYSP_REQUIRE(gamma > 0.0 && std::isfinite(gamma), DomainError, "trace_constant: gamma must be positive");
  POLYSP_REQUIRE(std::isfinite(q) && q >= 1.0, DomainError, "trace_constant: q must be a finite real >= 1");
  POLYSP_REQUIRE(s >= q, DomainError, "trace_constant: requires s >= q");
  POLYSP_REQUIRE(d >= 1, DomainError, "trace_constant: d must be >= 1");
  const double theta = std::isinf(s) ? 1.0 : (s - q) / s;
  const double lead = d * std::pow(std::numbers::pi, 0.5 * d * theta) / (gamma * std::pow(std::tgamma(0.5 * d + 1.0), theta));
  return std::pow(lead + (q - 1.0) / gamma, 1.0 / q);
}

/// C_G0 (h_Ω/ρ)^d (1 + h_Ω/ρ): bound for the right inverse of the divergence with full Dirichlet data.
inline double ba_bound_homogeneous(const ExponentSet& e, const DomainGeometry& g, double c_g0) {
  POLYSP_REQUIRE(c_g0 >= 0.0, DomainError, "ba_bound_homogeneous: C_G0 must be nonnegative");
  POLYSP_REQUIRE(g.rho > 0.0, DomainError, "ba_bound_homogeneous: rho = 0");
  const double r = g.diameter / g.rho;
  return c_g0 * std::pow(r, e.d) * (1.0 + r);
}

/// Geometry of the enlarged star-shaped domain used for nonconvex Ω.
struct ExtensionData {
  double diameter = 0.0;  // h_Ω̃
  double rho = 0.0;       // ρ̃
  double area = 0.0;      // |Ω|
  double area_ext = 0.0;  // |Ω_ext|
};

/// Bound for the right inverse with homogeneous data on Γ_D only.
inline double ba_bound_mixed(const ExponentSet& e, const DomainGeometry& g, const std::optional<ExtensionData>& ext,
                             double c_g0) {
  POLYSP_REQUIRE(c_g0 >= 0.0, DomainError, "ba_bound_mixed: C_G0 must be nonnegative");
  if (g.convex) {
    const double r0 = std::min(g.rho, g.rho_gamma);
    POLYSP_REQUIRE(r0 > 0.0, DomainError, "ba_bound_mixed: min(rho, rho_Gamma) = 0");
    const double r = 2.0 * g.diameter / r0;
    return std::pow(2.0, 1.0 / e.p) * c_g0 * std::pow(r, e.d) * (1.0 + r);
  }
  POLYSP_REQUIRE(ext.has_value(), DomainError, "ba_bound_mixed: nonconvex domain needs extension data");
  POLYSP_REQUIRE(ext->rho > 0.0 && ext->area > 0.0 && ext->area_ext > 0.0, DomainError,
                 "ba_bound_mixed: extension data must be positive");
  const double r = ext->diameter / ext->rho;
  const double measure = std::pow(1.0 + std::pow(ext->area / ext->area_ext, e.p - 1.0), 1.0 / e.p);
  return c_g0 * std::pow(r, e.d) * (1.0 + r) * measure;
}

}  // namespace polysp
