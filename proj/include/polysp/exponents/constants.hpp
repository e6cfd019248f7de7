#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "json.hpp"
#include "polysp/exponents/exponents.hpp"
#include "polysp/geometry/mesh.hpp"

namespace polysp {

enum class Provenance { Formula, Configured, Estimated };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Formula: return "formula";
    case Provenance::Configured: return "configured";
    case Provenance::Estimated: return "estimated";
  }
  return "formula";
}

inline Provenance parse_provenance(const std::string& s) {
  if (s == "formula") return Provenance::Formula;
  if (s == "configured") return Provenance::Configured;
  if (s == "estimated") return Provenance::Estimated;
  throw DomainError("unknown provenance \"" + s + "\"");
}

struct InputRef {
  double value = 0.0;
  Provenance provenance = Provenance::Formula;
};

struct ConstantEntry {
  double value = 0.0;
  Provenance provenance = Provenance::Formula;
  std::map<std::string, InputRef> inputs;  // what produced the value
};

/// Named constants with provenance. Every stored value is positive and finite.
class ConstantTable {
public:
  void set(const std::string& name, ConstantEntry e) {
    POLYSP_REQUIRE(std::isfinite(e.value) && e.value > 0.0, DomainError,
                   "constant " + name + " must be positive and finite, got " + std::to_string(e.value));
    entries_[name] = std::move(e);
  }
  void set(const std::string& name, double value, Provenance p) { set(name, ConstantEntry{value, p, {}}); }
  void configure(const std::string& name, double value) { set(name, value, Provenance::Configured); }

  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  const ConstantEntry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    POLYSP_REQUIRE(it != entries_.end(), DomainError, "missing input constant " + name);
    return it->second;
  }
  double value(const std::string& name) const { return entry(name).value; }
  const std::map<std::string, ConstantEntry>& entries() const { return entries_; }

  void merge(const ConstantTable& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] = v;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, e] : entries_) {
      nlohmann::json ins = nlohmann::json::object();
      for (const auto& [k, r] : e.inputs) ins[k] = {{"value", r.value}, {"provenance", to_string(r.provenance)}};
      j[name] = {{"value", e.value}, {"provenance", to_string(e.provenance)}, {"inputs", ins}};
    }
    return j;
  }

  static ConstantTable from_json(const nlohmann::json& j) {
    ConstantTable t;
    try {
      for (const auto& [name, v] : j.items()) {
        ConstantEntry e;
        if (v.is_number()) {
          e.value = v.get<double>();
          e.provenance = Provenance::Configured;
        } else {
          e.value = v.at("value").get<double>();
          e.provenance = parse_provenance(v.value("provenance", std::string("configured")));
          if (v.contains("inputs"))
            for (const auto& [k, r] : v.at("inputs").items())
              e.inputs[k] = {r.at("value").get<double>(), parse_provenance(r.at("provenance").get<std::string>())};
        }
        t.set(name, e);
      }
    } catch (const nlohmann::json::exception& ex) {
      throw DomainError(std::string("malformed constant table: ") + ex.what());
    }
    return t;
  }

private:
  std::map<std::string, ConstantEntry> entries_;
};

/// Names of the abstract constants each assembly reads from its input table.
/// (p*)' is written p*', p·1* as p1*, and the last argument is the region (Omega or an element K).
namespace keys {
inline const std::string ba_pstar = "C_BA(p*')";
inline const std::string sob_pstar = "C_Sob(p',1,p*',Omega)";
inline const std::string ps_pstar = "C_PS(p*',Omega)";
inline const std::string ba_postar = "C_BA(p1*')";
inline const std::string sob_postar = "C_Sob(p',1,p1*',Omega)";
inline const std::string ps_postar = "C_PS(p1*',Omega)";
inline const std::string ps_pconj = "C_PS(p',Omega)";
inline const std::string sob_elem_pstar = "C_Sob(p*,1,p,K)";
inline const std::string ps_elem_p = "C_PS(p,K)";
inline const std::string ps_elem_pstar = "C_PS(p*,K)";
inline const std::string sob_elem_postar = "C_Sob(p1*,1,p,K)";
}  // namespace keys

enum class Inequality { FirstKind, SecondKind, FirstKindAveraged, SecondKindAveraged };

inline std::string to_string(Inequality w) {
  switch (w) {
    case Inequality::FirstKind: return "first";
    case Inequality::SecondKind: return "second";
    case Inequality::FirstKindAveraged: return "first-averaged";
    case Inequality::SecondKindAveraged: return "second-averaged";
  }
  return "first";
}

inline Inequality parse_inequality(const std::string& s) {
  if (s == "first") return Inequality::FirstKind;
  if (s == "second") return Inequality::SecondKind;
  if (s == "first-averaged") return Inequality::FirstKindAveraged;
  if (s == "second-averaged") return Inequality::SecondKindAveraged;
  throw DomainError("unknown inequality \"" + s + "\" (expected first, second, first-averaged, second-averaged)");
}

inline bool is_first_kind(Inequality w) { return w == Inequality::FirstKind || w == Inequality::FirstKindAveraged; }
inline bool is_averaged(Inequality w) {
  return w == Inequality::FirstKindAveraged || w == Inequality::SecondKindAveraged;
}

/// Input constants an assembly needs, in addition to the mesh statistics.
inline std::vector<std::string> required_inputs(Inequality w) {
  switch (w) {
    case Inequality::FirstKind: return {keys::ba_pstar, keys::sob_pstar, keys::ps_pstar};
    case Inequality::SecondKind: return {keys::ba_postar, keys::sob_postar, keys::ps_postar, keys::ps_pconj};
    case Inequality::FirstKindAveraged:
      return {keys::ba_pstar, keys::sob_pstar, keys::ps_pstar, keys::sob_elem_pstar, keys::ps_elem_p, keys::ps_elem_pstar};
    case Inequality::SecondKindAveraged:
      return {keys::ba_postar, keys::sob_postar, keys::ps_postar, keys::ps_pconj, keys::sob_elem_postar, keys::ps_elem_p};
  }
  return {};
}

/// Mesh quantities entering the constants.
struct MeshStatistics {
  double gamma = 0.0;
  double h_omega = 0.0;
  double max_h = 0.0;           // max h_K
  double min_h = 0.0;           // min h_K
  std::size_t max_facets = 0;   // max card(F_K)
  double max_scale_ratio = 1.0; // max over K and F in F_K ∩ (interior ∪ Dirichlet) of (h̃_F/h_K)^{-1+1/p}
};

/// Statistics of `mesh` for exponent p and the given h̃_F convention.
inline MeshStatistics mesh_statistics(const Mesh& mesh, double h_omega, double p, LengthScaleMode mode) {
  MeshStatistics s;
  s.gamma = shape_regularity(mesh);
  s.h_omega = h_omega;
  s.min_h = kInf;
  for (const auto& e : mesh.elements()) {
    s.max_h = std::max(s.max_h, e.diameter);
    s.min_h = std::min(s.min_h, e.diameter);
    s.max_facets = std::max(s.max_facets, e.facets.size());
  }
  const auto ht = facet_length_scale(mesh, mode);
  for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
    if (std::isnan(ht[f])) continue;
    const auto& F = mesh.facet(f);
    for (int side = 0; side < (F.is_interior() ? 2 : 1); ++side) {
      const double hk = mesh.element(F.elements[side]).diameter;
      s.max_scale_ratio = std::max(s.max_scale_ratio, std::pow(ht[f] / hk, -1.0 + 1.0 / p));
    }
  }
  return s;
}

/// Jump constant of an averaged inequality from that of the plain one: 2^{1-1/p} c.
inline double averaged_jump_constant(double c, double p) { return std::pow(2.0, 1.0 - 1.0 / p) * c; }

/// Explicit constants of the broken Sobolev–Poincaré inequality `which`, built from the abstract constants in
/// `inputs` and the mesh statistics. The trace constants are evaluated from γ and included in the result.
inline ConstantTable assemble_theorem_constants(Inequality which, const ExponentSet& e, const MeshStatistics& st,
                                                const ConstantTable& inputs) {
  const double p = e.p;
  const int d = e.d;
  POLYSP_REQUIRE(p > 1.0, DomainError, "constant assembly requires p > 1");
  if (is_first_kind(which))
    POLYSP_REQUIRE(e.subcritical(), DomainError,
                   "inequality '" + to_string(which) + "' requires p < d (p = " + std::to_string(p) +
                       ", d = " + std::to_string(d) + ")");
  POLYSP_REQUIRE(st.gamma > 0.0 && st.h_omega > 0.0 && st.max_h > 0.0, DomainError,
                 "constant assembly: mesh statistics must be positive");
  for (const auto& k : required_inputs(which)) inputs.entry(k);

  ConstantTable out;
  std::map<std::string, InputRef> mesh_in = {{"gamma", {st.gamma, Provenance::Formula}},
                                             {"h_Omega", {st.h_omega, Provenance::Formula}}};
  auto in = [&](const std::string& k) { return InputRef{inputs.value(k), inputs.entry(k).provenance}; };
  auto derived = [&](const std::string& k) { return InputRef{out.value(k), Provenance::Formula}; };
  auto tr = [&](const std::string& name, double q, double s) {
    ConstantEntry c{trace_constant(q, s, d, st.gamma), Provenance::Formula, {}};
    c.inputs = {{"q", {q, Provenance::Formula}}, {"s", {s, Provenance::Formula}}, {"gamma", {st.gamma, Provenance::Formula}}};
    out.set(name, c);
    return c.value;
  };
  const double h = st.h_omega;
  const double w = averaged_jump_constant(1.0, p);

  if (is_first_kind(which)) {
    const double s = conjugate(e.p_star);  // (p*)'
    const double ba = inputs.value(keys::ba_pstar), sob = inputs.value(keys::sob_pstar), ps = inputs.value(keys::ps_pstar);
    ConstantEntry c1{std::pow(2.0, 1.0 / s) * ba * sob * std::pow(1.0 + std::pow(h, s) * std::pow(ps, s), 1.0 / s),
                     Provenance::Formula, mesh_in};
    c1.inputs[keys::ba_pstar] = in(keys::ba_pstar);
    c1.inputs[keys::sob_pstar] = in(keys::sob_pstar);
    c1.inputs[keys::ps_pstar] = in(keys::ps_pstar);
    out.set("C1", c1);
    const double ctr = tr("C_tr(p#',p')", conjugate(e.p_sharp), e.p_conj);
    ConstantEntry c2{ctr * (ba + c1.value), Provenance::Formula, {}};
    c2.inputs = {{"C_tr(p#',p')", derived("C_tr(p#',p')")}, {keys::ba_pstar, in(keys::ba_pstar)}, {"C1", derived("C1")}};
    out.set("C2", c2);
    if (which == Inequality::FirstKindAveraged) {
      const double sobk = inputs.value(keys::sob_elem_pstar), psp = inputs.value(keys::ps_elem_p),
                   pss = inputs.value(keys::ps_elem_pstar);
      const double ctr2 = tr("C_tr(p#,p*)", e.p_sharp, e.p_star);
      ConstantEntry c5{sobk * (1.0 + st.max_h * psp) +
                           w * c2.value * static_cast<double>(st.max_facets) * ctr2 * (1.0 + sobk) * (1.0 + st.max_h * pss),
                       Provenance::Formula, {}};
      c5.inputs = {{"C2", derived("C2")},
                   {"C_tr(p#,p*)", derived("C_tr(p#,p*)")},
                   {"max_h_K", {st.max_h, Provenance::Formula}},
                   {"max_card_F_K", {static_cast<double>(st.max_facets), Provenance::Formula}},
                   {keys::sob_elem_pstar, in(keys::sob_elem_pstar)},
                   {keys::ps_elem_p, in(keys::ps_elem_p)},
                   {keys::ps_elem_pstar, in(keys::ps_elem_pstar)}};
      out.set("C5", c5);
      out.set("C6", ConstantEntry{w * c2.value, Provenance::Formula, {{"C2", derived("C2")}}});
    }
  } else {
    const double s = conjugate(e.p_ostar);  // (p·1*)'
    const double ba = inputs.value(keys::ba_postar), sob = inputs.value(keys::sob_postar),
                 ps = inputs.value(keys::ps_postar), psc = inputs.value(keys::ps_pconj);
    ConstantEntry c3{std::pow(2.0, 1.0 / p) * ba * std::pow(h, d / e.p_conj - d / s + 1.0) * sob * (1.0 + h * ps),
                     Provenance::Formula, mesh_in};
    c3.inputs[keys::ba_postar] = in(keys::ba_postar);
    c3.inputs[keys::sob_postar] = in(keys::sob_postar);
    c3.inputs[keys::ps_postar] = in(keys::ps_postar);
    out.set("C3", c3);
    const double ctr = tr("C_tr(p',p')", e.p_conj, e.p_conj);
    ConstantEntry c4{ba * ctr * std::pow(1.0 + std::pow(st.max_h, e.p_conj), 1.0 / e.p_conj) * (1.0 + h * psc),
                     Provenance::Formula, {}};
    c4.inputs = {{"C_tr(p',p')", derived("C_tr(p',p')")},
                 {keys::ba_postar, in(keys::ba_postar)},
                 {keys::ps_pconj, in(keys::ps_pconj)},
                 {"max_h_K", {st.max_h, Provenance::Formula}},
                 {"h_Omega", {h, Provenance::Formula}}};
    out.set("C4", c4);
    if (which == Inequality::SecondKindAveraged) {
      const double sobk = inputs.value(keys::sob_elem_postar), psp = inputs.value(keys::ps_elem_p);
      const double expo = d / e.p_ostar - d / p + 1.0;
      const double hpow = std::pow(expo >= 0.0 ? st.max_h : st.min_h, expo);
      const double ctr2 = tr("C_tr(p,p)", p, p);
      ConstantEntry c7{hpow * sobk * (1.0 + st.max_h * psp) + w * c4.value * st.max_scale_ratio * ctr2 * (1.0 + st.max_h * psp),
                       Provenance::Formula, {}};
      c7.inputs = {{"C4", derived("C4")},
                   {"C_tr(p,p)", derived("C_tr(p,p)")},
                   {"max_h_K", {st.max_h, Provenance::Formula}},
                   {"max_scale_ratio", {st.max_scale_ratio, Provenance::Formula}},
                   {keys::sob_elem_postar, in(keys::sob_elem_postar)},
                   {keys::ps_elem_p, in(keys::ps_elem_p)}};
      out.set("C7", c7);
      out.set("C8", ConstantEntry{w * c4.value, Provenance::Formula, {{"C4", derived("C4")}}});
    }
  }
  return out;
}

}  // namespace polysp
