#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include "polysp/brokenfn/norms.hpp"
#include "polysp/brokenfn/samplers.hpp"
#include "polysp/exponents/exponents.hpp"

namespace polysp {

/// Lowest-order Raviart–Thomas field φ(x) = |F|/(d|T|) (x - P) of a boundary sub-simplex T with apex P:
/// unit normal flux through the boundary edge F, zero through the two edges meeting at P.
struct RTField {
  SubSimplex simplex;
  double factor = 0.0;  // |F|/(d|T|)

  explicit RTField(const SubSimplex& t) : simplex(t) {
    POLYSP_REQUIRE(t.has_boundary_edge, DomainError, "RT field: sub-simplex has no boundary edge");
    factor = t.boundary_length / (2.0 * t.area);
  }
  Point operator()(const Point& x) const { return (x - simplex.apex()) * factor; }
  double divergence() const { return 2.0 * factor; }
};

struct RTIdentity {
  double boundary = 0.0;  // ∫_{∂T} |v|^q φ·n
  double volume = 0.0;    // ∫_T div(|v|^q φ)
  double residual = 0.0;  // |boundary - volume| / max(1, |volume|)
  double error = 0.0;     // quadrature error bound on the difference
  bool approximate = false;
};

/// Both sides of the divergence theorem for |v|^q φ on sub-simplex T of element k.
inline RTIdentity rt_divergence_identity(const BrokenFunction& v, std::size_t k, double q, const SubSimplex& T,
                                         const AdaptiveOptions& opt = {}) {
  POLYSP_REQUIRE(q >= 1.0 && std::isfinite(q), DomainError, "rt_divergence_identity: q must be a finite real >= 1");
  RTField phi(T);
  const double h = v.mesh().element(k).diameter;
  const Poly2& p = v.local(k);
  const Point a = v.to_local(k, T.vertices[0]), b = v.to_local(k, T.vertices[1]), c = v.to_local(k, T.vertices[2]);
  RTIdentity r;
  // Only the boundary edge carries flux, and there φ·n = 1.
  Integral B = integrate_power_segment(p.restrict_to(b, c), PowerSpec{q, false, false}, nullptr, opt).scaled(T.boundary_length);
  // div(|v|^q φ) = |v|^q div φ + q |v|^{q-2} v ∇v·φ, with ∇v·(x - P) = ∇_ξ v·(ξ - ξ_P) in scaled coordinates.
  Integral V0 = integrate_power_triangle(p, PowerSpec{q, false, false}, nullptr, a, b, c, opt).scaled(h * h * phi.divergence());
  const Poly2 W = p.dx() * Poly2::affine(-a.x, 1.0, 0.0) + p.dy() * Poly2::affine(-a.y, 0.0, 1.0);
  Integral V1 = integrate_power_triangle(p, PowerSpec{q - 1.0, true, false}, &W, a, b, c, opt).scaled(h * h * q * phi.factor);
  r.boundary = B.value;
  r.volume = V0.value + V1.value;
  r.error = B.error + V0.error + V1.error;
  r.approximate = B.approximate || V0.approximate || V1.approximate;
  r.residual = std::abs(r.boundary - r.volume) / std::max(1.0, std::abs(r.volume));
  return r;
}

enum class TraceKind { General, Standard, Embedding };

/// Which trace inequality to check: general (q, s), standard (s = q) or embedding (exponents q♯, q*).
struct TraceVariant {
  TraceKind kind = TraceKind::Standard;
  double q = 2.0;
  double s = 2.0;

  static TraceVariant general(double q, double s) { return {TraceKind::General, q, s}; }
  static TraceVariant standard(double q) { return {TraceKind::Standard, q, q}; }
  static TraceVariant embedding(double q) { return {TraceKind::Embedding, q, q}; }

  std::string name() const {
    switch (kind) {
      case TraceKind::General: return "general";
      case TraceKind::Standard: return "standard";
      case TraceKind::Embedding: return "embedding";
    }
    return "general";
  }
};

struct TraceRatio {
  std::size_t element = 0;
  std::size_t sample = 0;
  int degree = 0;
  TraceVariant variant;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double slack = 0.0;  // propagated quadrature error of the ratio
  bool approximate = false;
  bool cap_hit = false;

  bool violated() const { return ratio > 1.0 + slack; }
};

/// Norms of one element's restriction, memoized by exponent so several variants share quadrature.
class ElementNorms {
public:
  ElementNorms(const BrokenFunction& v, std::size_t k, const AdaptiveOptions& opt) : v_(v), k_(k), opt_(opt) {}

  const NormValue& boundary(double q) { return get(boundary_, q, [&] { return boundary_norm(v_, k_, q, opt_); }); }
  const NormValue& volume(double s) {
    return get(volume_, s, [&] { return lq_norm(v_, s, Region::of_element(k_), opt_); });
  }
  const NormValue& gradient(double r) {
    return get(gradient_, r, [&] { return broken_seminorm(v_, r, Region::of_element(k_), opt_); });
  }

private:
  template <class F>
  const NormValue& get(std::map<double, NormValue>& cache, double x, F&& f) {
    auto it = cache.find(x);
    if (it == cache.end()) it = cache.emplace(x, f()).first;
    return it->second;
  }

  const BrokenFunction& v_;
  std::size_t k_;
  AdaptiveOptions opt_;
  std::map<double, NormValue> boundary_, volume_, gradient_;
};

namespace detail {

inline void check_variant(const TraceVariant& t, int d) {
  POLYSP_REQUIRE(std::isfinite(t.q) && t.q >= 1.0, DomainError, "verify_trace: q must be a finite real >= 1");
  if (t.kind == TraceKind::General)
    POLYSP_REQUIRE(std::isfinite(t.s) && t.s >= t.q, DomainError, "verify_trace: general variant requires s >= q");
  if (t.kind == TraceKind::Embedding)
    POLYSP_REQUIRE(t.q < d, DomainError, "verify_trace: embedding variant requires q < d");
}

inline TraceRatio finish(TraceRatio r, const NormValue& lhs, double rhs, double rhs_err) {
  r.lhs = lhs.value;
  r.rhs = rhs;
  if (r.lhs == 0.0 && r.rhs == 0.0) {
    r.ratio = 0.0;
  } else if (r.rhs == 0.0) {
    r.ratio = kInf;
  } else {
    r.ratio = r.lhs / r.rhs;
    r.slack = lhs.error / r.rhs + r.lhs * rhs_err / (r.rhs * r.rhs);
    // The inequality is sharp for constants on some elements; leave room for rounding.
    r.slack = std::max(r.slack, 64.0 * std::numeric_limits<double>::epsilon() * r.ratio);
  }
  return r;
}

}  // namespace detail

/// LHS/RHS of the trace inequality `t` on element k, with the regularity parameter gamma.
inline TraceRatio verify_trace(ElementNorms& norms, const Element& e, const TraceVariant& t, double gamma, int d = 2) {
  detail::check_variant(t, d);
  TraceRatio r;
  r.variant = t;
  const double h = e.diameter;
  if (t.kind == TraceKind::Embedding) {
    const ExponentSet ex = derive_exponents(t.q, d);
    const NormValue& lhs = norms.boundary(ex.p_sharp);
    const NormValue& a = norms.volume(ex.p_star);
    const NormValue& g = norms.gradient(t.q);
    const double C = trace_constant(ex.p_sharp, ex.p_star, d, gamma);
    r.approximate = lhs.approximate || a.approximate || g.approximate;
    r.cap_hit = lhs.cap_hit || a.cap_hit || g.cap_hit;
    return detail::finish(r, lhs, C * (a.value + g.value), C * (a.error + g.error));
  }
  const double q = t.q, s = t.kind == TraceKind::Standard ? t.q : t.s;
  const double theta = 1.0 - d * (s - q) / s;
  const double w0 = std::pow(h, -theta / q);
  const double w1 = std::pow(h, (1.0 - 1.0 / q) * theta);
  const NormValue& lhs = norms.boundary(q);
  const NormValue& a = norms.volume(s);
  const NormValue& g = norms.gradient(s / (s - q + 1.0));
  const double C = trace_constant(q, s, d, gamma);
  r.approximate = lhs.approximate || a.approximate || g.approximate;
  r.cap_hit = lhs.cap_hit || a.cap_hit || g.cap_hit;
  return detail::finish(r, lhs, C * (w0 * a.value + w1 * g.value), C * (w0 * a.error + w1 * g.error));
}

inline TraceRatio verify_trace(const BrokenFunction& v, std::size_t k, const TraceVariant& t, double gamma,
                               const AdaptiveOptions& opt = {}) {
  ElementNorms norms(v, k, opt);
  TraceRatio r = verify_trace(norms, v.mesh().element(k), t, gamma);
  r.element = k;
  r.degree = v.degree();
  return r;
}

struct TraceCampaignConfig {
  std::vector<TraceVariant> variants = {TraceVariant::standard(2.0)};
  std::vector<int> degrees = {0, 1, 2, 3, 4};
  std::size_t samples_per_degree = 100;
  std::uint64_t seed = 1;
  SamplerKind sampler = SamplerKind::IidCoefficients;
  SamplerOptions sampler_options;
  AdaptiveOptions quadrature;
};

struct TraceSummary {
  std::size_t count = 0;
  double max_ratio = 0.0;
  std::optional<TraceRatio> argmax;
  std::size_t near_one = 0;    // ratios in (0.9, 1]
  std::size_t above_02 = 0;    // ratios above 0.2
  std::size_t violations = 0;  // ratio > 1 + slack
  double max_slack = 0.0;
  std::size_t approximate = 0;
  std::size_t cap_hits = 0;
};

struct TraceCampaignResult {
  std::vector<TraceRatio> records;
  TraceSummary summary;
  std::vector<nlohmann::json> counterexamples;  // mesh, function and element of each violation
};

inline void accumulate(TraceSummary& s, const TraceRatio& r) {
  ++s.count;
  if (!s.argmax || r.ratio > s.max_ratio) {
    s.max_ratio = r.ratio;
    s.argmax = r;
  }
  if (r.ratio > 0.9 && r.ratio <= 1.0) ++s.near_one;
  if (r.ratio > 0.2) ++s.above_02;
  if (r.violated()) ++s.violations;
  s.max_slack = std::max(s.max_slack, r.slack);
  s.approximate += r.approximate;
  s.cap_hits += r.cap_hit;
}

/// Every variant on every element of every sample. Sample i of degree p uses the seed sample_seed(seed, p, i).
inline TraceCampaignResult trace_campaign(const std::shared_ptr<const Mesh>& mesh, const TraceCampaignConfig& cfg) {
  TraceCampaignResult out;
  const double gamma = shape_regularity(*mesh);
  for (const auto& t : cfg.variants) detail::check_variant(t, 2);
  std::size_t sample_id = 0;
  for (int degree : cfg.degrees) {
    for (std::size_t i = 0; i < cfg.samples_per_degree; ++i, ++sample_id) {
      const BrokenFunction v = sample(mesh, cfg.sampler, degree, sample_seed(cfg.seed, degree, i), cfg.sampler_options);
      for (std::size_t k = 0; k < mesh->num_elements(); ++k) {
        ElementNorms norms(v, k, cfg.quadrature);
        for (const auto& t : cfg.variants) {
          TraceRatio r = verify_trace(norms, mesh->element(k), t, gamma);
          r.element = k;
          r.sample = sample_id;
          r.degree = degree;
          accumulate(out.summary, r);
          if (r.violated())
            out.counterexamples.push_back({{"mesh", mesh_data_to_json(mesh->data())},
                                           {"function", v.to_json()},
                                           {"element", k},
                                           {"variant", t.name()},
                                           {"q", t.q},
                                           {"s", t.s},
                                           {"lhs", r.lhs},
                                           {"rhs", r.rhs},
                                           {"ratio", r.ratio}});
          out.records.push_back(r);
        }
      }
    }
  }
  return out;
}

inline const char* kTraceCsvHeader = "element,sample,degree,variant,q,s,lhs,rhs,ratio,slack,approximate,cap_hit";

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRatio>& records) {
  os << kTraceCsvHeader << "\n";
  os.precision(17);
  for (const auto& r : records)
    os << r.element << ',' << r.sample << ',' << r.degree << ',' << r.variant.name() << ',' << r.variant.q << ','
       << r.variant.s << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio << ',' << r.slack << ',' << int(r.approximate)
       << ',' << int(r.cap_hit) << "\n";
}

inline nlohmann::json to_json(const TraceRatio& r) {
  return {{"element", r.element}, {"sample", r.sample}, {"degree", r.degree}, {"variant", r.variant.name()},
          {"q", r.variant.q},     {"s", r.variant.s},     {"lhs", r.lhs},       {"rhs", r.rhs},
          {"ratio", r.ratio},     {"slack", r.slack},     {"approximate", r.approximate}, {"cap_hit", r.cap_hit}};
}

inline nlohmann::json to_json(const TraceSummary& s) {
  nlohmann::json j = {{"count", s.count},           {"max_ratio", s.max_ratio},   {"ratios_in_0.9_1", s.near_one},
                      {"ratios_above_0.2", s.above_02}, {"violations", s.violations}, {"max_slack", s.max_slack},
                      {"approximate", s.approximate}, {"cap_hits", s.cap_hits}};
  j["argmax"] = s.argmax ? to_json(*s.argmax) : nlohmann::json(nullptr);
  return j;
}

}  // namespace polysp
