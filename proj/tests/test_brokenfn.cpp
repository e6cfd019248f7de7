#include <gtest/gtest.h>

#include <cmath>

#include "frozen_anchors.hpp"
#include "polysp/brokenfn/norms.hpp"
#include "polysp/brokenfn/samplers.hpp"
#include "polysp/geometry/generate.hpp"

using namespace polysp;

namespace {

std::shared_ptr<const Mesh> shared(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }
std::shared_ptr<const Mesh> unit_square() { return shared(load_mesh(std::string(POLYSP_MESH_DIR) + "/unit_square.json")); }

// Meshes of the unit square.
std::vector<std::shared_ptr<const Mesh>> suite() {
  return {shared(generate_mesh(structured_triangles(3))), shared(generate_mesh(structured_quads(2))),
          shared(generate_mesh(agglomerated(7))), shared(generate_mesh(split_facet(2, 2)))};
}

std::vector<std::shared_ptr<const Mesh>> mixed_suite() {
  auto s = suite();
  s.push_back(shared(load_mesh(std::string(POLYSP_MESH_DIR) + "/hanging_vertex.json")));
  s.push_back(shared(load_mesh(std::string(POLYSP_MESH_DIR) + "/lshape_element_subtri.json")));
  return s;
}

const Poly2 X = Poly2::affine(0, 1, 0);
const Poly2 Y = Poly2::affine(0, 0, 1);

}  // namespace

TEST(LqNorm, ConstantOneOnUnitSquare) {
  auto v = BrokenFunction::from_global(unit_square(), Poly2::constant(1.0));
  EXPECT_NEAR(lq_norm(v, 2.0).value, 1.0, 1e-14);
}

TEST(LqNorm, LinearOnUnitSquare) {
  auto v = BrokenFunction::from_global(unit_square(), X);
  auto n2 = lq_norm(v, 2.0);
  EXPECT_NEAR(n2.value, 1.0 / std::sqrt(3.0), 1e-14);
  EXPECT_FALSE(n2.approximate);
  auto n3 = lq_norm(v, 3.0);
  EXPECT_NEAR(n3.value, anchors::lq_x_cubed_unit_square, 1e-9 * anchors::lq_x_cubed_unit_square);
}

TEST(LqNorm, OddPowerWithSignChangeMatchesClosedForm) {
  // ∫_{[0,1]^2} |x - 1/2|^3 = 1/32
  for (const auto& m : suite()) {
    auto v = BrokenFunction::from_global(m, X - Poly2::constant(0.5));
    auto n = lq_norm(v, 3.0);
    EXPECT_NEAR(n.value, std::cbrt(1.0 / 32.0), 1e-8);
    EXPECT_LE(n.error, 1e-6);
  }
}

TEST(LqNorm, RejectsExponentBelowOne) {
  auto v = BrokenFunction::from_global(unit_square(), X);
  EXPECT_THROW(lq_norm(v, 0.5), DomainError);
}

TEST(LqNorm, InfinityIsFlaggedApproximate) {
  auto v = BrokenFunction::from_global(unit_square(), X);
  auto n = lq_norm(v, kInf);
  EXPECT_TRUE(n.approximate);
  EXPECT_NEAR(n.value, 1.0, 1e-14);  // vertices are sampled
}

TEST(LqNorm, ElementNormBoundedByMeshNorm) {
  for (const auto& m : mixed_suite()) {
    auto v = sample(m, SamplerKind::IidCoefficients, 3, 11);
    for (double q : {1.0, 2.0, 3.0, 2.5}) {
      const double whole = lq_norm(v, q).value;
      for (std::size_t k = 0; k < m->num_elements(); ++k) EXPECT_LE(lq_norm(v, q, Region::of_element(k)).value, whole + 1e-12);
    }
  }
}

TEST(LqNorm, IndependentOfMesh) {
  const Poly2 g = X * X * Y - X * 0.3 + Poly2::constant(0.1);
  double ref = -1;
  for (const auto& m : suite()) {
    const double n = lq_norm(BrokenFunction::from_global(m, g), 1.5).value;
    if (ref < 0) ref = n;
    EXPECT_NEAR(n, ref, 1e-8 * ref);
  }
}

TEST(BrokenSeminorm, PiecewiseConstantIsZero) {
  for (const auto& m : mixed_suite()) EXPECT_EQ(broken_seminorm(sample(m, SamplerKind::IidCoefficients, 0, 3), 2.0).value, 0.0);
}

TEST(BrokenSeminorm, GlobalLinear) {
  for (const auto& m : suite()) {
    auto v = BrokenFunction::from_global(m, X);
    EXPECT_NEAR(broken_seminorm(v, 2.0).value, 1.0, 1e-13);
    EXPECT_NEAR(broken_seminorm(v, 1.5).value, 1.0, 1e-9);
  }
}

TEST(BrokenSeminorm, HalfXSquared) {
  for (const auto& m : suite())
    EXPECT_NEAR(broken_seminorm(BrokenFunction::from_global(m, X * X * 0.5), 2.0).value, 1.0 / std::sqrt(3.0), 1e-13);
}

TEST(BrokenSeminorm, NonEvenExponentAgainstClosedForm) {
  // |∇(x²/2)| = x, so ‖·‖_{L^3}^3 = 1/4
  auto v = BrokenFunction::from_global(shared(generate_mesh(structured_triangles(2))), X * X * 0.5);
  EXPECT_NEAR(broken_seminorm(v, 3.0).value, std::cbrt(0.25), 1e-9);
}

TEST(Jump, ConstantAcrossInteriorFacetVanishes) {
  auto m = shared(generate_mesh(structured_quads(2)));
  auto v = BrokenFunction::from_global(m, Poly2::constant(1.0));
  for (std::size_t f = 0; f < m->num_facets(); ++f)
    if (m->facet(f).is_interior()) EXPECT_LT(jump(v, f).g.max_abs_coeff(), 1e-15);
}

TEST(Jump, SignConvention) {
  auto m = shared(load_mesh(std::string(POLYSP_MESH_DIR) + "/two_triangles.json"));
  for (std::size_t f = 0; f < m->num_facets(); ++f) {
    const auto& F = m->facet(f);
    if (!F.is_interior()) continue;
    BrokenFunction v(m, 0);
    v.set_local(F.elements[0], Poly2::constant(1.0));
    // n_F is the outward normal of the first element
    EXPECT_NEAR(dot(F.normal, F.element_normals[0]), 1.0, 1e-15);
    auto j = jump(v, f);
    EXPECT_NEAR(j(0.0), 1.0, 1e-15);
    EXPECT_NEAR(j(1.0), 1.0, 1e-15);
  }
}

TEST(Jump, TraceOfXOnRightBoundary) {
  auto m = shared(generate_mesh(structured_quads(2)));
  auto v = BrokenFunction::from_global(m, X);
  int found = 0;
  for (std::size_t f = 0; f < m->num_facets(); ++f) {
    const auto& F = m->facet(f);
    if (F.is_interior() || std::abs(F.a.x - 1.0) > 1e-14 || std::abs(F.b.x - 1.0) > 1e-14) continue;
    auto j = jump(v, f);
    EXPECT_NEAR(j(0.3), dot(F.element_normals[0], F.normal), 1e-14);
    EXPECT_NEAR(j(0.3), 1.0, 1e-14);
    ++found;
  }
  EXPECT_EQ(found, 2);
}

TEST(Jump, Linearity) {
  for (const auto& m : mixed_suite()) {
    auto v = sample(m, SamplerKind::IidCoefficients, 3, 1), w = sample(m, SamplerKind::IidCoefficients, 2, 2);
    auto u = v * 0.7 + w * -1.3;
    for (std::size_t f = 0; f < m->num_facets(); ++f) {
      auto ju = jump(u, f), jv = jump(v, f), jw = jump(w, f);
      for (double t : {0.0, 0.25, 0.6, 1.0}) EXPECT_NEAR(ju(t), 0.7 * jv(t) - 1.3 * jw(t), 1e-13);
    }
  }
}

TEST(Jump, RejectsForeignFacet) {
  auto m = unit_square();
  EXPECT_THROW(jump(BrokenFunction(m, 1), 17), DomainError);
}

TEST(FacetAverage, Examples) {
  FacetFunction t{0, 2.0, Poly1::linear(0.0, 1.0)};
  EXPECT_NEAR(facet_average(t), 0.5, 1e-15);
  EXPECT_NEAR(facet_average(FacetFunction{0, 1.0, Poly1::constant(3.25)}), 3.25, 1e-15);
  EXPECT_NEAR(facet_average(FacetFunction{0, 1.0, Poly1::linear(-0.5, 1.0)}), 0.0, 1e-15);
  FacetFunction g{0, 1.0, Poly1({0.3, -1.0, 2.0, 0.7})};
  EXPECT_NEAR(facet_average(facet_projection(g)), facet_average(g), 1e-15);
}

TEST(ElementAverage, Examples) {
  auto v = BrokenFunction::from_global(unit_square(), X);
  EXPECT_NEAR(element_average(v).local(0).coeff(0, 0), 0.5, 1e-15);
  for (const auto& m : mixed_suite()) {
    auto w = sample(m, SamplerKind::IidCoefficients, 4, 5);
    auto a = element_average(w);
    auto aa = element_average(a);
    auto c = w - a;
    for (std::size_t k = 0; k < m->num_elements(); ++k) {
      EXPECT_NEAR(aa.local(k).coeff(0, 0), a.local(k).coeff(0, 0), 1e-14);
      EXPECT_NEAR(element_integral(c, k), 0.0, 1e-14);
    }
    auto pc = sample(m, SamplerKind::IidCoefficients, 0, 5);
    auto pa = element_average(pc);
    for (std::size_t k = 0; k < m->num_elements(); ++k) EXPECT_NEAR(pa.local(k).coeff(0, 0), pc.local(k).coeff(0, 0), 1e-14);
  }
}

TEST(ProjectionContraction, AveragedJumpOfCenteredFunction) {
  for (const auto& m : mixed_suite()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto v = sample(m, SamplerKind::IidCoefficients, 3, seed);
      auto c = v - element_average(v);
      for (std::size_t f = 0; f < m->num_facets(); ++f) {
        auto j = jump(c, f);
        for (double q : {1.0, 1.5, 2.0, 3.0}) {
          auto full = lq_norm(j, q), proj = lq_norm(facet_projection(j), q);
          EXPECT_LE(proj.value, full.value + full.error + proj.error + 1e-13);
        }
      }
    }
  }
}

TEST(Samplers, ConformingWithoutOffsetsHasNoInteriorJumps) {
  for (const auto& m : mixed_suite()) {
    SamplerOptions o;
    o.epsilon = 0.0;
    auto v = sample(m, SamplerKind::ConformingPlusJumps, 4, 9, o);
    for (std::size_t f = 0; f < m->num_facets(); ++f)
      if (m->facet(f).is_interior()) EXPECT_LT(lq_norm(jump(v, f), 2.0).value, 1e-12);
  }
}

TEST(Samplers, CrLikeFacetAveragesAreContinuous) {
  auto m = shared(generate_mesh(structured_triangles(3, DomainShape{}, dirichlet_on_sides(DomainShape{}, {"left", "bottom"}))));
  for (int degree : {1, 2, 4}) {
    auto v = sample(m, SamplerKind::CrLike, degree, 21);
    double worst = 0.0;
    for (std::size_t f = 0; f < m->num_facets(); ++f)
      if (m->facet(f).label != FacetLabel::Neumann) worst = std::max(worst, std::abs(facet_average(jump(v, f))));
    EXPECT_LE(worst, 1e-10);
    // not trivially zero
    EXPECT_GT(lq_norm(v, 2.0).value, 1e-3);
  }
}

TEST(Samplers, CrLikeRequiresTriangles) {
  EXPECT_THROW(sample(shared(generate_mesh(structured_quads(2))), SamplerKind::CrLike, 1, 0), DomainError);
}

TEST(Samplers, Deterministic) {
  auto m = shared(generate_mesh(agglomerated(7)));
  for (SamplerKind k : {SamplerKind::IidCoefficients, SamplerKind::ConformingPlusJumps}) {
    auto a = sample(m, k, 3, 1234), b = sample(m, k, 3, 1234), c = sample(m, k, 3, 1235);
    EXPECT_EQ(a.to_json(), b.to_json());
    EXPECT_NE(a.to_json(), c.to_json());
  }
  EXPECT_THROW(sample(m, SamplerKind::IidCoefficients, 7, 0), DomainError);
}

TEST(BrokenFunction, JsonRoundTrip) {
  auto m = shared(generate_mesh(structured_triangles(2)));
  auto v = sample(m, SamplerKind::IidCoefficients, 2, 4);
  auto j = v.to_json();
  auto r = BrokenFunction::from_json(m, j);
  EXPECT_EQ(r.to_json(), j);
  auto other = shared(generate_mesh(structured_triangles(3)));
  EXPECT_THROW(BrokenFunction::from_json(other, j), DomainError);
}

TEST(BrokenFunction, EvaluationMatchesGlobalPolynomial) {
  const Poly2 g = X * Y * 3.0 - Y * Y + Poly2::constant(0.25);
  for (const auto& m : suite()) {
    auto v = BrokenFunction::from_global(m, g);
    for (std::size_t k = 0; k < m->num_elements(); ++k) {
      const Point c = m->element(k).centroid;
      EXPECT_NEAR(v(k, c), g(c), 1e-14);
      auto grad = v.gradient(k);
      const Point xi = v.to_local(k, c);
      EXPECT_NEAR(grad[0](xi), g.dx()(c), 1e-13);
      EXPECT_NEAR(grad[1](xi), g.dy()(c), 1e-13);
    }
  }
}
