// One PASS/FAIL line per acceptance criterion; exit status 1 when any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

#include "frozen_anchors.hpp"
#include "polysp/divinv/extension.hpp"
#include "polysp/divinv/pou.hpp"
#include "polysp/exponents/constants.hpp"
#include "polysp/geometry/generate.hpp"
#include "polysp/geometry/mesh_io.hpp"
#include "polysp/harness/sp.hpp"
#include "polysp/traceck/trace.hpp"

using namespace polysp;

namespace {

using Shared = std::shared_ptr<const Mesh>;

Shared shared(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }
Shared from_file(const char* name) { return shared(load_mesh(std::string(POLYSP_MESH_DIR) + "/" + name)); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  Verdict() { detail.precision(8); }

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

BrokenFunction random_datum(const Shared& m, int degree, std::uint64_t seed, bool zero_mean) {
  BrokenFunction f = sample(m, SamplerKind::IidCoefficients, degree, seed);
  if (zero_mean) {
    double integral = 0.0;
    for (std::size_t k = 0; k < m->num_elements(); ++k) integral += element_integral(f, k);
    for (std::size_t k = 0; k < m->num_elements(); ++k) f.set_local(k, f.local(k) + Poly2::constant(-integral / m->area()));
  }
  return f;
}

void trace_certification(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::pair<std::string, Shared>> suite = {
      {"triangles 4x4", shared(generate_mesh(structured_triangles(4)))},
      {"quads 4x4", shared(generate_mesh(structured_quads(4)))},
      {"fan(6)", shared(generate_mesh(fan_polygon(6)))},
      {"agglomerated(7)", shared(generate_mesh(agglomerated(7)))},
      {"split(3)", shared(generate_mesh(split_facet(3, 1)))}};
  TraceCampaignConfig c;
  c.variants = {TraceVariant::general(1, 1), TraceVariant::general(1, 2), TraceVariant::general(2, 2),
                TraceVariant::general(2, 4), TraceVariant::general(3, 3)};
  c.samples_per_degree = 100;  // 500 samples over degrees 0..4
  std::size_t records = 0, violations = 0, above = 0;
  double max_ratio = 0.0, max_slack = 0.0;
  for (const auto& [name, m] : suite) {
    const auto r = trace_campaign(m, c);
    records += r.summary.count;
    violations += r.summary.violations;
    above += r.summary.above_02;
    max_ratio = std::max(max_ratio, r.summary.max_ratio);
    max_slack = std::max(max_slack, r.summary.max_slack);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.detail << records << " ratios, max " << max_ratio << ", " << above << " above 0.2, max slack " << max_slack << ", "
           << seconds << " s";
  v.require(violations == 0, std::to_string(violations) + " violations");
  v.require(max_slack <= 1e-6, "slack above 1e-6");
  v.require(above >= 1, "vacuous");
  v.require(seconds <= 120.0, "runtime above 2 minutes");
}

void anchors_reproduced(Verdict& v) {
  const double g_square = shape_regularity(*from_file("unit_square.json"));
  const auto tri = from_file("right_triangle.json");
  const double g_tri = shape_regularity(*tri);
  const auto one = BrokenFunction::from_global(tri, Poly2::constant(1.0));
  const double ratio = verify_trace(one, 0, TraceVariant::standard(2), g_tri).ratio;
  v.detail << "gamma square " << g_square << ", gamma triangle " << g_tri << ", trace ratio " << ratio;
  v.require(std::abs(g_square - 1.0 / (2.0 * std::numbers::sqrt2)) <= 1e-12, "gamma of the unit square");
  v.require(std::abs(g_tri - 1.0 / 6.0) <= 1e-12, "gamma of the right triangle");
  v.require(std::abs(ratio - 0.733) <= 1e-3, "trace ratio near 0.733");
  v.require(std::abs(g_square - anchors::gamma_unit_square) <= 1e-12 && std::abs(g_tri - anchors::gamma_right_triangle) <= 1e-12 &&
                std::abs(ratio - anchors::trace_ratio_right_triangle) <= 1e-12,
            "independent oracle values");
}

/// Random non-degenerate triangle as a one-element mesh.
Shared random_triangle(Rng& rng) {
  for (;;) {
    std::vector<Point> p(3);
    for (auto& x : p) x = Point{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double a = cross(p[1] - p[0], p[2] - p[0]);
    if (std::abs(a) < 0.05) continue;
    if (a < 0) std::swap(p[1], p[2]);
    MeshData d{p, {{0, 1, 2}}, {{0, 1, FacetLabel::Dirichlet}, {1, 2, FacetLabel::Dirichlet}, {2, 0, FacetLabel::Dirichlet}}, {}};
    return shared(Mesh::build(d));
  }
}

void rt_identity(Verdict& v) {
  Rng rng(2024);
  double even = 0.0, odd = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto m = random_triangle(rng);
    const SubSimplex& T = m->element(0).sub_triangulation[rng.index(3)];
    const auto f = sample(m, SamplerKind::IidCoefficients, 3, 500 + static_cast<std::uint64_t>(i));
    for (double q : {2.0, 4.0}) even = std::max(even, rt_divergence_identity(f, 0, q, T).residual);
    for (double q : {1.0, 3.0}) odd = std::max(odd, rt_divergence_identity(f, 0, q, T).residual);
  }
  v.detail << "100 sub-simplices, max residual even q " << even << ", odd q " << odd;
  v.require(even <= 1e-12, "even exponents");
  v.require(odd <= 1e-6, "odd exponents");
}

void infsup_identity(Verdict& v) {
  double gap = 0.0;
  for (bool l : {false, true})
    for (int n : {2, 4, 8}) {
      const auto m = shared(generate_mesh(structured_triangles(l ? n / 2 : n, l ? DomainShape::lshape() : DomainShape{})));
      gap = std::max(gap, identity_check(StokesDiscretization(m), VelocityBC::FullDirichlet).gap);
    }
  const Mesh base = generate_mesh(structured_triangles(4, DomainShape::lshape()));
  const double beta = infsup_constant(StokesDiscretization(shared(base)), VelocityBC::FullDirichlet).beta;
  const double dilated =
      infsup_constant(StokesDiscretization(shared(base.transformed([](const Point& x) { return 3.5 * x; }))), VelocityBC::FullDirichlet).beta;
  v.detail << "max |beta C_BA - 1| " << gap << ", dilation change " << std::abs(dilated - beta);
  v.require(gap <= 1e-8, "identity");
  v.require(std::abs(dilated - beta) <= 1e-10, "dilation invariance");
}

void mixed_bc(Verdict& v) {
  const auto sq = shared(generate_mesh(structured_triangles(4, DomainShape{}, dirichlet_on_sides(DomainShape{}, {"left"}))));
  double trace = 0.0, residual = 0.0, norm_gap = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto P = mirror_extension(sq, random_datum(sq, 2, seed, false));
    const auto s = solve_extension(P);
    trace = std::max(trace, s.neumann_trace);
    residual = std::max(residual, s.glued.residual);
    norm_gap = std::max(norm_gap, std::abs(P.norm_sq_tilde - 2.0 * P.norm_sq_original) / P.norm_sq_original);
  }
  const auto L = shared(generate_mesh(structured_triangles(2, DomainShape::lshape())));
  const auto E = shared(generate_mesh(structured_triangles(2, DomainShape{1.0, 1.0, 2.0, 2.0, false})));
  double mean = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) mean = std::max(mean, std::abs(nonconvex_extension(L, E, random_datum(L, 2, seed, false)).mean_tilde));
  v.detail << "Neumann trace " << trace << ", residual " << residual << ", |norm² ratio - 2|/2 " << norm_gap / 2.0
           << ", L-shape mean " << mean;
  v.require(trace <= 1e-10, "Neumann trace");
  v.require(residual <= 1e-8, "divergence residual");
  v.require(norm_gap <= 1e-12, "norm doubling");
  v.require(mean <= 1e-12, "mean of the compensated datum");
}

void pou(Verdict& v) {
  const auto L = shared(generate_mesh(structured_triangles(2, DomainShape::lshape())));
  double residual = 0.0, trace = 0.0;
  std::size_t refined = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = pou_right_inverse(L, random_datum(L, 2, seed, true));
    residual = std::max(residual, r.field.residual);
    trace = std::max(trace, r.field.boundary_trace);
    refined += r.refined;
  }
  v.detail << "20 data, max residual " << residual << ", max boundary trace " << trace << ", refined " << refined;
  v.require(residual <= 1e-8, "divergence residual");
  v.require(trace <= 1e-10, "boundary trace");
}

StudyReport study(const std::string& family, const std::vector<int>& levels, LengthScaleMode mode) {
  std::vector<std::pair<std::string, Shared>> fam;
  for (int n : levels)
    fam.emplace_back(family + ":" + std::to_string(n),
                     shared(generate_mesh(family == "quads" ? structured_quads(n) : split_facet(n, 1))));
  SPConfig c;
  c.inequality = Inequality::SecondKind;
  c.p = 2.0;
  c.sampler = SamplerKind::ConformingPlusJumps;
  c.sampler_options.random_epsilon = true;
  c.sampler_options.dirichlet_cutoff = true;
  c.samples = 300;
  c.htilde = mode;
  return refinement_study(fam, c);
}

void boundedness(Verdict& v) {
  const auto q = study("quads", {2, 4, 8}, LengthScaleMode::Facet);
  const auto s = study("split", {1, 2, 4}, LengthScaleMode::ElementMin);
  v.detail << "quads worst";
  for (const auto& L : q.levels) v.detail << " " << L.summary.empirical.worst_case;
  v.detail << " (spread " << q.spread << "), split-facet worst";
  for (const auto& L : s.levels) v.detail << " " << L.summary.empirical.worst_case;
  v.detail << " (spread " << s.spread << ")";
  v.require(q.spread <= 2.0, "quads spread");
  v.require(s.spread <= 2.0, "split-facet spread");
}

void corollary(Verdict& v) {
  SPConfig c;
  c.inequality = Inequality::FirstKindAveraged;
  c.p = 1.5;
  c.sampler = SamplerKind::CrLike;
  c.degree = 2;
  c.samples = 200;
  const auto r = verify_sp(shared(generate_mesh(structured_triangles(4))), c);
  const auto& s = r.summary;
  v.detail << "max projected interior jump " << s.max_interior_jump << ", c_grad " << s.empirical.c_grad
           << ", contraction violations " << s.projection_violations;
  v.require(s.max_interior_jump <= 1e-10, "projected interior jumps");
  v.require(std::isfinite(s.empirical.c_grad) && !s.empirical.unbounded, "finite c_grad");
  v.require(s.projection_violations == 0, "projection contraction");
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

void constant_formulas(Verdict& v) {
  const DomainGeometry sq = domain_geometry(*from_file("unit_square.json"));
  const auto e2 = derive_exponents(2.0, 2);
  v.require(close(trace_constant(2, 2, 2, 0.5), anchors::trace_constant_2_2_2_half), "trace constant (2,2,2,1/2)");
  v.require(close(trace_constant(2, 4, 2, 1.0), anchors::trace_constant_2_4_2_1), "trace constant (2,4,2,1)");
  v.require(close(ba_bound_homogeneous(e2, sq, 1.0), anchors::ba_homogeneous_unit_square), "homogeneous bound");
  DomainGeometry g;
  g.diameter = std::sqrt(2.0);
  g.rho = g.rho_gamma = 0.45;
  g.convex = true;
  v.require(close(ba_bound_mixed(e2, g, std::nullopt, 1.0), anchors::ba_mixed_unit_square), "mixed bound");

  MeshStatistics st;
  st.gamma = 0.25;
  st.h_omega = std::sqrt(2.0);
  st.max_h = 0.5;
  st.min_h = 0.25;
  st.max_facets = 4;
  st.max_scale_ratio = 1.5;
  const double h = std::sqrt(2.0);
  ConstantTable in1;
  in1.configure(keys::ba_pstar, 2.0);
  in1.configure(keys::sob_pstar, 3.0);
  in1.configure(keys::ps_pstar, 0.5);
  const auto t1 = assemble_theorem_constants(Inequality::FirstKind, derive_exponents(1.5, 2), st, in1);
  const double c1 = std::pow(2.0, 1 / 1.2) * 6.0 * std::pow(1 + std::pow(h, 1.2) * std::pow(0.5, 1.2), 1 / 1.2);
  v.require(close(t1.value("C1"), c1) && close(t1.value("C2"), trace_constant(1.5, 3.0, 2, 0.25) * (2.0 + c1)), "C1, C2");
  ConstantTable in2;
  in2.configure(keys::ba_postar, 2.0);
  in2.configure(keys::sob_postar, 3.0);
  in2.configure(keys::ps_postar, 0.5);
  in2.configure(keys::ps_pconj, 0.25);
  in2.configure(keys::sob_elem_postar, 1.5);
  in2.configure(keys::ps_elem_p, 0.75);
  const auto t2 = assemble_theorem_constants(Inequality::SecondKindAveraged, e2, st, in2);
  const double ct = trace_constant(2, 2, 2, 0.25);
  const double c3 = std::sqrt(2.0) * 2.0 * std::pow(h, 0.5) * 3.0 * (1 + h * 0.5);
  const double c4 = 2.0 * ct * std::sqrt(1.25) * (1 + h * 0.25);
  const double c7 = std::sqrt(0.5) * 1.5 * (1 + 0.5 * 0.75) + std::sqrt(2.0) * c4 * 1.5 * ct * (1 + 0.5 * 0.75);
  v.require(close(t2.value("C3"), c3) && close(t2.value("C4"), c4) && close(t2.value("C7"), c7) &&
                close(t2.value("C8"), std::sqrt(2.0) * c4),
            "C3, C4, C7, C8");
  ConstantTable in3;
  for (const auto& k : required_inputs(Inequality::FirstKindAveraged)) in3.configure(k, 1.0);
  const auto t3 = assemble_theorem_constants(Inequality::FirstKindAveraged, derive_exponents(1.5, 2), st, in3);
  v.require(close(t3.value("C6"), std::pow(2.0, 1.0 / 3.0) * t3.value("C2")), "C6 from C2");

  bool monotone = true;
  for (double q : {1.0, 2.0, 3.0})
    for (double s : {q, 2 * q}) {
      double prev = kInf;
      for (double gam = 0.05; gam <= 1.0; gam += 0.05) {
        const double c = trace_constant(q, s, 2, gam);
        monotone &= c < prev;
        prev = c;
      }
    }
  v.require(monotone, "trace constant decreasing in gamma");
  const Mesh L = generate_mesh(structured_triangles(3, DomainShape::lshape()));
  const auto e = derive_exponents(1.5, 2);
  const double b = ba_bound_homogeneous(e, domain_geometry(L), 1.0);
  const double b2 = ba_bound_homogeneous(e, domain_geometry(L.transformed([](const Point& x) { return 2.0 * x; })), 1.0);
  v.require(close(b2, b), "bound dilation invariance");
  v.detail << "C1 " << t1.value("C1") << ", C3 " << t2.value("C3") << ", C7 " << t2.value("C7") << ", C_BA(square) "
           << ba_bound_homogeneous(e2, sq, 1.0);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria = {
      {"trace certification on the mesh suite", trace_certification},
      {"hand-derived anchors", anchors_reproduced},
      {"Raviart-Thomas divergence identity", rt_identity},
      {"inf-sup / right-inverse identity at p = 2", infsup_identity},
      {"mixed boundary extensions", mixed_bc},
      {"partition-of-unity right inverse", pou},
      {"mesh-family boundedness of the empirical constant", boundedness},
      {"averaged-jump corollary structure", corollary},
      {"constant formulas", constant_formulas}};
  int failed = 0, id = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      check(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failed += !v.pass;
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", ++id, name, v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
