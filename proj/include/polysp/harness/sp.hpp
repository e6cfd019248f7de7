#pragma once

#include <limits>
#include <optional>
#include <ostream>

#include "json.hpp"
#include "polysp/brokenfn/norms.hpp"
#include "polysp/brokenfn/samplers.hpp"
#include "polysp/core/parallel.hpp"
#include "polysp/core/random.hpp"
#include "polysp/exponents/constants.hpp"
#include "polysp/geometry/domain.hpp"

namespace polysp {

/// Theorem identifiers accepted besides the inequality names.
inline Inequality parse_theorem(const std::string& s) {
  if (s == "T1.6") return Inequality::FirstKind;
  if (s == "T1.7") return Inequality::SecondKind;
  if (s == "C1.9") return Inequality::FirstKindAveraged;
  if (s == "C1.10") return Inequality::SecondKindAveraged;
  return parse_inequality(s);
}

inline LengthScaleMode parse_length_scale(const std::string& s) {
  if (s == "facet") return LengthScaleMode::Facet;
  if (s == "element-min") return LengthScaleMode::ElementMin;
  throw DomainError("unknown h-tilde mode '" + s + "' (facet, element-min)");
}

inline std::string to_string(LengthScaleMode m) { return m == LengthScaleMode::Facet ? "facet" : "element-min"; }

struct SPConfig {
  Inequality inequality = Inequality::SecondKind;
  double p = 2.0;
  int d = 2;
  SamplerKind sampler = SamplerKind::IidCoefficients;
  int degree = 2;
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  SamplerOptions sampler_options;
  LengthScaleMode htilde = LengthScaleMode::Facet;
  AdaptiveOptions quadrature;
  std::optional<ConstantTable> inputs;  // abstract constants for the assembled bound
  unsigned threads = 0;
};

struct SPRecord {
  std::size_t sample = 0;
  double lhs = 0.0;               // ‖v‖ in L^{p*} (first kind) or L^{p·1*} (second kind)
  double grad = 0.0;              // ‖∇_h v‖_{L^p}
  double jump = 0.0;              // the jump term of the inequality (projected for the averaged forms)
  double jump_interior = 0.0;     // its interior-facet part
  double jump_unprojected = 0.0;  // same sum with the plain jumps
  std::size_t projection_violations = 0;  // facets with ‖Π⁰ jump‖ > ‖jump‖
  double ratio = 0.0;             // lhs / (grad + jump)
  double bound = std::numeric_limits<double>::quiet_NaN();  // C_grad grad + C_jump jump from the assembled constants
  bool approximate = false;
  bool cap_hit = false;

  bool holds() const { return std::isnan(bound) || lhs <= bound; }
};

struct EmpiricalConstants {
  double c_grad = 0.0;
  double c_jump = 0.0;
  double worst_case = 0.0;  // max lhs / (grad + jump)
  std::size_t argmax = 0;
  bool unbounded = false;   // some sample has lhs > 0 with a vanishing right-hand side
};

struct SPSummary {
  std::size_t count = 0;
  EmpiricalConstants empirical;
  std::size_t approximate = 0;  // rows evaluated with adaptive quadrature
  std::size_t cap_hits = 0;     // rows whose quadrature hit the refinement cap
  double max_interior_jump = 0.0;
  std::size_t projection_violations = 0;
  std::optional<std::pair<std::string, std::string>> assembled_names;
  std::optional<std::pair<double, double>> assembled;
  std::optional<double> fraction_holding;
};

struct SPResult {
  std::vector<SPRecord> records;
  SPSummary summary;
};

namespace detail {

inline double lhs_exponent(Inequality w, const ExponentSet& e) { return is_first_kind(w) ? e.p_star : e.p_ostar; }
inline double jump_exponent(Inequality w, const ExponentSet& e) { return is_first_kind(w) ? e.p_sharp : e.p; }

inline void check_sp(const SPConfig& c) {
  POLYSP_REQUIRE(std::isfinite(c.p) && c.p >= 1.0, DomainError, "verify_sp: p must be a finite real >= 1");
  if (is_first_kind(c.inequality))
    POLYSP_REQUIRE(c.p < c.d, DomainError,
                   "exponent incompatibility: '" + to_string(c.inequality) + "' requires p < d (p = " + std::to_string(c.p) + ")");
  POLYSP_REQUIRE(c.samples > 0, DomainError, "verify_sp: need at least one sample");
}

inline SPRecord evaluate_sp(const BrokenFunction& v, const SPConfig& c, const ExponentSet& e, const std::vector<double>& htilde) {
  SPRecord r;
  const Mesh& m = v.mesh();
  const double p = e.p;
  const NormValue L = lq_norm(v, lhs_exponent(c.inequality, e), Region::mesh(), c.quadrature);
  const NormValue G = broken_seminorm(v, p, Region::mesh(), c.quadrature);
  r.lhs = L.value;
  r.grad = G.value;
  r.approximate = L.approximate || G.approximate;
  r.cap_hit = L.cap_hit || G.cap_hit;
  const double t = jump_exponent(c.inequality, e);
  const bool second = !is_first_kind(c.inequality);
  double sum = 0.0, interior = 0.0, plain = 0.0;
  for (std::size_t f = 0; f < m.num_facets(); ++f) {
    const Facet& F = m.facet(f);
    if (F.label == FacetLabel::Neumann) continue;
    const double w = second ? std::pow(htilde[f], 1.0 - p) : 1.0;
    const FacetFunction g = jump(v, f);
    const NormValue n = lq_norm(g, t, c.quadrature);
    r.approximate |= n.approximate;
    r.cap_hit |= n.cap_hit;
    double used = n.value;
    plain += w * std::pow(n.value, p);
    if (is_averaged(c.inequality)) {
      FacetFunction avg = facet_projection(g);
      double scale = 0.0;
      for (int side = 0; side < (F.is_interior() ? 2 : 1); ++side)
        for (double a : facet_trace(v, static_cast<std::size_t>(F.elements[side]), f).g.coeffs()) scale += std::abs(a);
      // An average at the rounding level of the one-sided traces is a zero average.
      if (std::abs(avg.g.coeffs()[0]) <= 64.0 * std::numeric_limits<double>::epsilon() * scale) avg.g.coeffs()[0] = 0.0;
      const NormValue np = lq_norm(avg, t, c.quadrature);
      if (np.value > n.value * (1.0 + 1e-12) + 1e-14) ++r.projection_violations;
      used = np.value;
    }
    const double term = w * std::pow(used, p);
    sum += term;
    if (F.is_interior()) interior += term;
  }
  r.jump = std::pow(sum, 1.0 / p);
  r.jump_interior = std::pow(interior, 1.0 / p);
  r.jump_unprojected = std::pow(plain, 1.0 / p);
  const double rhs = r.grad + r.jump;
  r.ratio = rhs > 0.0 ? r.lhs / rhs : (r.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return r;
}

}  // namespace detail

/// Least-squares (c_grad, c_jump) ≥ 0 for lhs ≈ c_grad grad + c_jump jump, then scaled by the smallest factor
/// making lhs ≤ c_grad grad + c_jump jump on every record. Also the single-scalar worst case.
inline EmpiricalConstants fit_constants(const std::vector<SPRecord>& rs) {
  EmpiricalConstants out;
  double gg = 0.0, gj = 0.0, jj = 0.0, gl = 0.0, jl = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& r = rs[i];
    if (r.ratio > out.worst_case || i == 0) {
      out.worst_case = r.ratio;
      out.argmax = r.sample;
    }
    if (std::isinf(r.ratio)) out.unbounded = true;
    gg += r.grad * r.grad;
    gj += r.grad * r.jump;
    jj += r.jump * r.jump;
    gl += r.grad * r.lhs;
    jl += r.jump * r.lhs;
  }
  // Nonnegative least squares in two unknowns: the interior optimum if feasible, else the best one-sided fit.
  auto sse = [&](double a, double b) { return a * a * gg + 2 * a * b * gj + b * b * jj - 2 * a * gl - 2 * b * jl; };
  double a = 0.0, b = 0.0;
  const double det = gg * jj - gj * gj;
  if (det > 1e-14 * gg * jj) {
    a = (gl * jj - jl * gj) / det;
    b = (jl * gg - gl * gj) / det;
  }
  if (!(a >= 0.0 && b >= 0.0) || det <= 1e-14 * gg * jj) {
    const double a1 = gg > 0.0 ? std::max(0.0, gl / gg) : 0.0, b1 = jj > 0.0 ? std::max(0.0, jl / jj) : 0.0;
    if (sse(a1, 0.0) <= sse(0.0, b1)) {
      a = a1;
      b = 0.0;
    } else {
      a = 0.0;
      b = b1;
    }
  }
  if (a == 0.0 && b == 0.0) {
    a = 1.0;
    b = 1.0;
  }
  double scale = 0.0;
  for (const auto& r : rs) {
    const double rhs = a * r.grad + b * r.jump;
    if (rhs > 0.0)
      scale = std::max(scale, r.lhs / rhs);
    else if (r.lhs > 0.0)
      out.unbounded = true;
  }
  out.c_grad = a * scale;
  out.c_jump = b * scale;
  return out;
}

inline SPSummary summarize(const std::vector<SPRecord>& rs) {
  SPSummary s;
  s.count = rs.size();
  s.empirical = fit_constants(rs);
  std::size_t hold = 0, with_bound = 0;
  for (const auto& r : rs) {
    s.approximate += r.approximate;
    s.cap_hits += r.cap_hit;
    s.max_interior_jump = std::max(s.max_interior_jump, r.jump_interior);
    s.projection_violations += r.projection_violations;
    if (!std::isnan(r.bound)) {
      ++with_bound;
      hold += r.holds();
    }
  }
  if (with_bound > 0) s.fraction_holding = static_cast<double>(hold) / static_cast<double>(with_bound);
  return s;
}

/// Constants (gradient, jump) of the inequality assembled from configured inputs, when every input is a formula
/// or a configured value.
inline std::optional<std::pair<double, double>> assembled_constants(const Mesh& mesh, const SPConfig& c,
                                                                    std::pair<std::string, std::string>* names = nullptr) {
  if (!c.inputs) return std::nullopt;
  for (const auto& k : required_inputs(c.inequality)) {
    if (!c.inputs->has(k)) return std::nullopt;
    if (c.inputs->entry(k).provenance == Provenance::Estimated) return std::nullopt;
  }
  const ExponentSet e = derive_exponents(c.p, c.d);
  const auto st = mesh_statistics(mesh, domain_geometry(mesh).diameter, c.p, c.htilde);
  const ConstantTable t = assemble_theorem_constants(c.inequality, e, st, *c.inputs);
  static const std::map<Inequality, std::pair<std::string, std::string>> key = {
      {Inequality::FirstKind, {"C1", "C2"}},
      {Inequality::SecondKind, {"C3", "C4"}},
      {Inequality::FirstKindAveraged, {"C5", "C6"}},
      {Inequality::SecondKindAveraged, {"C7", "C8"}}};
  const auto& [g, j] = key.at(c.inequality);
  if (names) *names = {g, j};
  return std::make_pair(t.value(g), t.value(j));
}

/// One record per sample; sample i uses the seed sample_seed(seed, degree, i).
inline SPResult verify_sp(const std::shared_ptr<const Mesh>& mesh, const SPConfig& c) {
  detail::check_sp(c);
  const ExponentSet e = derive_exponents(c.p, c.d);
  const auto ht = facet_length_scale(*mesh, c.htilde);
  SPResult out;
  out.records.resize(c.samples);
  parallel_for(c.samples, c.threads, [&](std::size_t i) {
    const BrokenFunction v = sample(mesh, c.sampler, c.degree, sample_seed(c.seed, c.degree, i), c.sampler_options);
    out.records[i] = detail::evaluate_sp(v, c, e, ht);
    out.records[i].sample = i;
  });
  std::pair<std::string, std::string> names;
  const auto C = assembled_constants(*mesh, c, &names);
  if (C)
    for (auto& r : out.records) r.bound = C->first * r.grad + C->second * r.jump;
  out.summary = summarize(out.records);
  if (C) {
    out.summary.assembled = C;
    out.summary.assembled_names = names;
  }
  return out;
}

struct StudyLevel {
  std::string label;
  std::size_t elements = 0;
  SPSummary summary;
};

struct StudyReport {
  std::vector<StudyLevel> levels;
  double min_worst = 0.0, max_worst = 0.0;
  double spread = 0.0;  // max/min of the per-level worst-case constants
};

/// verify_sp on each mesh of a family with the same sampler settings.
inline StudyReport refinement_study(const std::vector<std::pair<std::string, std::shared_ptr<const Mesh>>>& family, const SPConfig& c) {
  POLYSP_REQUIRE(family.size() >= 3, DomainError, "refinement_study: need ≥ 3 resolutions, got " + std::to_string(family.size()));
  StudyReport rep;
  for (const auto& [label, mesh] : family) {
    StudyLevel L{label, mesh->num_elements(), verify_sp(mesh, c).summary};
    rep.levels.push_back(std::move(L));
  }
  rep.min_worst = rep.max_worst = rep.levels.front().summary.empirical.worst_case;
  for (const auto& L : rep.levels) {
    rep.min_worst = std::min(rep.min_worst, L.summary.empirical.worst_case);
    rep.max_worst = std::max(rep.max_worst, L.summary.empirical.worst_case);
  }
  rep.spread = rep.min_worst > 0.0 ? rep.max_worst / rep.min_worst : std::numeric_limits<double>::infinity();
  return rep;
}

inline const char* kSPCsvHeader =
    "sample,lhs,grad,jump,jump_interior,jump_unprojected,ratio,bound,holds,projection_violations,approximate,cap_hit";

inline void write_sp_csv(std::ostream& os, const std::vector<SPRecord>& rs) {
  os << kSPCsvHeader << "\n";
  os.precision(17);
  for (const auto& r : rs)
    os << r.sample << ',' << r.lhs << ',' << r.grad << ',' << r.jump << ',' << r.jump_interior << ',' << r.jump_unprojected
       << ',' << r.ratio << ',' << r.bound << ',' << int(r.holds()) << ',' << r.projection_violations << ','
       << int(r.approximate) << ',' << int(r.cap_hit) << "\n";
}

inline nlohmann::json to_json(const SPSummary& s) {
  nlohmann::json j = {{"count", s.count},
                      {"c_grad", s.empirical.c_grad},
                      {"c_jump", s.empirical.c_jump},
                      {"worst_case", s.empirical.worst_case},
                      {"argmax", s.empirical.argmax},
                      {"unbounded", s.empirical.unbounded},
                      {"approximate", s.approximate},
                      {"cap_hits", s.cap_hits},
                      {"max_interior_jump", s.max_interior_jump},
                      {"projection_violations", s.projection_violations}};
  if (s.assembled) {
    j["assembled"] = {{s.assembled_names->first, s.assembled->first}, {s.assembled_names->second, s.assembled->second}};
    j["fraction_holding"] = *s.fraction_holding;
  }
  return j;
}

inline nlohmann::json to_json(const StudyReport& r) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& L : r.levels)
    levels.push_back({{"label", L.label}, {"elements", L.elements}, {"summary", to_json(L.summary)}});
  return {{"levels", levels}, {"min_worst_case", r.min_worst}, {"max_worst_case", r.max_worst}, {"spread", r.spread}};
}

}  // namespace polysp
