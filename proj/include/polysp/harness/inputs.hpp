#pragma once

#include "polysp/exponents/constants.hpp"
#include "polysp/geometry/domain.hpp"
#include "polysp/harness/aux_constants.hpp"

namespace polysp {

struct InputOptions {
  double c_g0 = 1.0;      // universal constant of the right-inverse bound
  double c_gamma = 0.9;   // C_Γ of the Dirichlet-side splitting
  bool estimate = false;  // fill missing C_PS / C_Sob entries with lower-bound estimates
  int domain_degree = 4;  // polynomial degree of the estimates on Ω
  int element_degree = 3; // and on the elements
};

/// Which abstract constant an input key names: kind, exponents (q for C_Sob, p) and region.
struct InputKey {
  enum Kind { BA, PS, Sob } kind = PS;
  double q = 0.0, p = 0.0;
  bool element = false;
};

inline InputKey describe_input(const std::string& key, const ExponentSet& e) {
  const double ps = conjugate(e.p_star), po = conjugate(e.p_ostar);
  if (key == keys::ba_pstar) return {InputKey::BA, 0.0, ps, false};
  if (key == keys::ba_postar) return {InputKey::BA, 0.0, po, false};
  if (key == keys::sob_pstar) return {InputKey::Sob, e.p_conj, ps, false};
  if (key == keys::ps_pstar) return {InputKey::PS, 0.0, ps, false};
  if (key == keys::sob_postar) return {InputKey::Sob, e.p_conj, po, false};
  if (key == keys::ps_postar) return {InputKey::PS, 0.0, po, false};
  if (key == keys::ps_pconj) return {InputKey::PS, 0.0, e.p_conj, false};
  if (key == keys::sob_elem_pstar) return {InputKey::Sob, e.p_star, e.p, true};
  if (key == keys::ps_elem_p) return {InputKey::PS, 0.0, e.p, true};
  if (key == keys::ps_elem_pstar) return {InputKey::PS, 0.0, e.p_star, true};
  if (key == keys::sob_elem_postar) return {InputKey::Sob, e.p_ostar, e.p, true};
  throw DomainError("unknown input constant " + key);
}

/// The input table of `which` completed from `given`: right-inverse bounds from the domain geometry
/// (full Dirichlet data when there are no Neumann facets, otherwise the convex mixed bound), and on request
/// C_PS / C_Sob lower bounds. Entries present in `given` are kept.
inline ConstantTable complete_inputs(const Mesh& mesh, Inequality which, const ExponentSet& e, const ConstantTable& given,
                                     const InputOptions& opt = {}) {
  ConstantTable t = given;
  const DomainGeometry g = domain_geometry(mesh, opt.c_gamma);
  bool neumann = false;
  for (const auto& F : mesh.facets()) neumann |= F.label == FacetLabel::Neumann;
  std::vector<std::string> missing;
  for (const auto& key : required_inputs(which)) {
    if (t.has(key)) continue;
    const InputKey k = describe_input(key, e);
    if (k.kind == InputKey::BA) {
      ExponentSet ek = e;  // the bounds read only d and the integrability index
      ek.p = k.p;
      if (!neumann) {
        t.set(key, ConstantEntry{ba_bound_homogeneous(ek, g, opt.c_g0), Provenance::Formula,
                                 {{"C_G0", {opt.c_g0, Provenance::Configured}}, {"h_Omega", {g.diameter, Provenance::Formula}},
                                  {"rho", {g.rho, Provenance::Formula}}}});
      } else if (g.convex) {
        t.set(key, ConstantEntry{ba_bound_mixed(ek, g, std::nullopt, opt.c_g0), Provenance::Formula,
                                 {{"C_G0", {opt.c_g0, Provenance::Configured}}, {"h_Omega", {g.diameter, Provenance::Formula}},
                                  {"rho", {g.rho, Provenance::Formula}}, {"rho_Gamma", {g.rho_gamma, Provenance::Formula}}}});
      } else {
        missing.push_back(key);
      }
      continue;
    }
    if (!opt.estimate) {
      missing.push_back(key);
      continue;
    }
    POLYSP_REQUIRE(std::isfinite(k.p) && std::isfinite(k.q == 0.0 ? 1.0 : k.q), DomainError,
                   "cannot estimate " + key + ": infinite exponent");
    double best = 0.0;
    auto take = [&](const AuxEstimate& a) { best = std::max(best, k.kind == InputKey::PS ? a.c_ps : a.c_sob); };
    const double q = k.kind == InputKey::Sob ? k.q : k.p;
    if (k.element)
      for (const auto& el : mesh.elements()) take(estimate_aux_constants(el, k.p, q, opt.element_degree));
    else
      take(estimate_aux_constants(mesh, k.p, q, opt.domain_degree));
    t.set(key, ConstantEntry{best, Provenance::Estimated, {{"p", {k.p, Provenance::Formula}}, {"q", {q, Provenance::Formula}}}});
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DomainError("missing input constants: " + list + " (configure them or request estimates)");
  }
  return t;
}

}  // namespace polysp
