#include <gtest/gtest.h>

#include <cmath>

#include "polysp/brokenfn/samplers.hpp"
#include "polysp/core/random.hpp"
#include "polysp/divinv/extension.hpp"
#include "polysp/divinv/pou.hpp"
#include "polysp/geometry/generate.hpp"

using namespace polysp;

namespace {

std::shared_ptr<const Mesh> shared(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

std::shared_ptr<const Mesh> square(int n, LabelRule labels = all_dirichlet()) {
  return shared(generate_mesh(structured_triangles(n, DomainShape{}, std::move(labels))));
}
std::shared_ptr<const Mesh> lshape(int n) { return shared(generate_mesh(structured_triangles(n, DomainShape::lshape()))); }

double integral(const BrokenFunction& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.mesh().num_elements(); ++k) s += element_integral(f, k);
  return s;
}

BrokenFunction random_datum(const std::shared_ptr<const Mesh>& m, int degree, std::uint64_t seed, bool zero_mean) {
  Rng rng(seed);
  BrokenFunction f(m, degree);
  for (std::size_t k = 0; k < m->num_elements(); ++k) f.set_local(k, detail::random_poly(degree, rng));
  if (zero_mean) {
    const double c = integral(f) / m->area();
    for (std::size_t k = 0; k < m->num_elements(); ++k) f.set_local(k, f.local(k) + Poly2::constant(-c));
  }
  return f;
}

BrokenFunction from_global(const std::shared_ptr<const Mesh>& m, double c0, double cx, double cy) {
  BrokenFunction f(m, 1);
  for (std::size_t k = 0; k < m->num_elements(); ++k) {
    const auto& e = m->element(k);
    f.set_local(k, Poly2::affine(c0 + cx * e.centroid.x + cy * e.centroid.y, cx * e.diameter, cy * e.diameter));
  }
  return f;
}

// Center plus six points on the unit circle, six triangles, all Dirichlet.
std::shared_ptr<const Mesh> hexagon_fan() {
  MeshData d;
  d.vertices.push_back({0.0, 0.0});
  for (int i = 0; i < 6; ++i) d.vertices.push_back({std::cos(M_PI * i / 3.0), std::sin(M_PI * i / 3.0)});
  for (int i = 0; i < 6; ++i) {
    d.cells.push_back({0, 1 + i, 1 + (i + 1) % 6});
    d.boundary.push_back({1 + i, 1 + (i + 1) % 6, FacetLabel::Dirichlet});
  }
  return shared(Mesh::build(d));
}

bool inside(const Element& e, const Point& p) {
  for (std::size_t i = 0; i < e.loop.size(); ++i)
    if (orient(e.loop[i], e.loop[(i + 1) % e.loop.size()], p) < 0.0) return false;
  return true;
}

}  // namespace

TEST(Stokes, RequiresTriangles) {
  EXPECT_THROW(StokesDiscretization(shared(generate_mesh(structured_quads(2)))), MeshError);
}

TEST(Stokes, PressureLoadOfConstantIsMassTimesOnes) {
  auto m = square(3);
  for (auto pr : {PressureSpace::ContinuousP1, PressureSpace::PiecewiseConstant}) {
    StokesDiscretization d(m, {pr, 0, 1.0});
    const Eigen::VectorXd F = d.pressure_load(from_global(m, 1.0, 0.0, 0.0));
    EXPECT_LT((F - d.Mp() * d.constant_pressure()).norm(), 1e-13);
    EXPECT_NEAR(d.constant_pressure().dot(d.Mp() * d.constant_pressure()), 1.0, 1e-13);
  }
}

TEST(RightInverse, ZeroDatumGivesZeroField) {
  auto m = square(4);
  StokesDiscretization d(m);
  auto r = min_energy_right_inverse(d, BrokenFunction(m, 1), VelocityBC::FullDirichlet);
  EXPECT_EQ(r.velocity.norm(), 0.0);
  EXPECT_EQ(r.ratio, 0.0);
}

TEST(RightInverse, LinearDatumOnUnitSquare) {
  auto m = square(4);
  StokesDiscretization d(m);
  auto r = min_energy_right_inverse(d, from_global(m, -1.0, 2.0, 0.0), VelocityBC::FullDirichlet);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_EQ(r.boundary_trace, 0.0);
  EXPECT_NEAR(r.datum_norm, std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_GT(r.seminorm, 0.0);
}

TEST(RightInverse, IsLinearInTheDatum) {
  auto m = square(3);
  StokesDiscretization d(m);
  RightInverseSolver s(d, VelocityBC::FullDirichlet);
  auto f = random_datum(m, 2, 1, true), g = random_datum(m, 2, 2, true);
  BrokenFunction h(m, 2);
  for (std::size_t k = 0; k < m->num_elements(); ++k) h.set_local(k, f.local(k) * 2.0 + g.local(k) * -3.0);
  const auto vf = min_energy_right_inverse(s, f).velocity, vg = min_energy_right_inverse(s, g).velocity;
  const auto vh = min_energy_right_inverse(s, h).velocity;
  EXPECT_LT((vh - 2.0 * vf + 3.0 * vg).norm(), 1e-10 * vh.norm());
}

TEST(RightInverse, RejectsNonzeroMeanUnderFullDirichlet) {
  auto m = square(2);
  StokesDiscretization d(m);
  EXPECT_THROW(min_energy_right_inverse(d, from_global(m, 1.0, 0.0, 0.0), VelocityBC::FullDirichlet), DomainError);
}

TEST(RightInverse, MixedConditionsAcceptNonzeroMean) {
  DomainShape sq;
  auto m = square(3, dirichlet_on_sides(sq, {"left"}));
  StokesDiscretization d(m);
  auto r = min_energy_right_inverse(d, from_global(m, 1.0, 0.0, 0.0), VelocityBC::ZeroOnNeumann);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_EQ(r.boundary_trace, 0.0);
}

TEST(RightInverse, SingleTriangleIsSingular) {
  MeshData data;
  data.vertices = {{0, 0}, {1, 0}, {0, 1}};
  data.cells = {{0, 1, 2}};
  data.boundary = {{0, 1, FacetLabel::Dirichlet}, {1, 2, FacetLabel::Dirichlet}, {2, 0, FacetLabel::Dirichlet}};
  StokesDiscretization d(shared(Mesh::build(data)));
  try {
    RightInverseSolver s(d, VelocityBC::FullDirichlet);
    FAIL() << "expected a singular system";
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("singular system"), std::string::npos);
  }
}

TEST(InfSup, IdentityHoldsOnRefinementSequences) {
  for (auto mk : {+[](int n) { return square(n); }, +[](int n) { return lshape(n); }})
    for (int n : {2, 4, 8}) {
      StokesDiscretization d(mk(n));
      const auto rep = identity_check(d, VelocityBC::FullDirichlet);
      EXPECT_LE(rep.gap, 1e-8) << "n=" << n;
      EXPECT_GT(rep.beta, 0.2);
    }
}

TEST(InfSup, IdentityHoldsWithMixedConditionsAndP0) {
  DomainShape sq;
  StokesDiscretization d(square(4, dirichlet_on_sides(sq, {"left", "bottom"})), {PressureSpace::PiecewiseConstant, 0, 1.0});
  EXPECT_LE(identity_check(d, VelocityBC::ZeroOnNeumann).gap, 1e-8);
}

TEST(InfSup, EigenpressureAttainsTheBound) {
  auto m = square(4);
  StokesDiscretization d(m);
  RightInverseSolver s(d, VelocityBC::FullDirichlet);
  const auto inf = infsup_constant(d, VelocityBC::FullDirichlet);
  const auto r = min_energy_right_inverse(s, inf.eigenpressure);
  EXPECT_NEAR(r.ratio, 1.0 / inf.beta, 1e-8);
  EXPECT_NEAR(d.pressure_norm(inf.eigenpressure), 1.0, 1e-12);
}

TEST(InfSup, InvariantUnderDilationAndRigidMotion) {
  const Mesh base = generate_mesh(structured_triangles(4, DomainShape::lshape()));
  const double beta = infsup_constant(StokesDiscretization(shared(base)), VelocityBC::FullDirichlet).beta;
  const double c = std::cos(0.7), s = std::sin(0.7);
  auto dil = shared(base.transformed([](const Point& x) { return 3.5 * x; }));
  auto rot = shared(base.transformed([&](const Point& x) { return Point{c * x.x - s * x.y + 2.0, s * x.x + c * x.y - 1.0}; }));
  EXPECT_NEAR(infsup_constant(StokesDiscretization(dil), VelocityBC::FullDirichlet).beta, beta, 1e-10);
  EXPECT_NEAR(infsup_constant(StokesDiscretization(rot), VelocityBC::FullDirichlet).beta, beta, 1e-10);
}

TEST(InfSup, MassScaleRescalesBetaAndKeepsTheIdentity) {
  auto m = square(4);
  const double b1 = identity_check(StokesDiscretization(m), VelocityBC::FullDirichlet).beta;
  const auto rep = identity_check(StokesDiscretization(m, {PressureSpace::ContinuousP1, 0, 4.0}), VelocityBC::FullDirichlet);
  // B and M both carry the scale s, so β² = s²/s times the unscaled value.
  EXPECT_NEAR(rep.beta, 2.0 * b1, 1e-10);
  EXPECT_LE(rep.gap, 1e-8);
}

TEST(InfSup, DecreasesUnderRefinementOnTheSquare) {
  double prev = 1.0;
  for (int n : {4, 8, 16}) {
    const double b = infsup_constant(StokesDiscretization(square(n)), VelocityBC::FullDirichlet).beta;
    EXPECT_LT(b, prev);
    EXPECT_GT(b, 0.3);
    prev = b;
  }
}

TEST(Mirror, OddExtensionOfASquare) {
  DomainShape sq;
  auto m = square(4, dirichlet_on_sides(sq, {"left"}));
  auto f = random_datum(m, 2, 7, false);
  const auto P = mirror_extension(m, f);
  EXPECT_EQ(P.glued->num_elements(), 2 * m->num_elements());
  EXPECT_EQ(P.interface_facets.size(), 4u);
  EXPECT_NEAR(P.norm_sq_tilde, 2.0 * P.norm_sq_original, 1e-12);
  EXPECT_NEAR(P.mean_tilde, 0.0, 1e-12);
  // f̃(R x) = -f(x)
  const Point x{0.3, 0.6}, rx{-0.3, 0.6};
  auto loc = [&](const Point& p) {
    for (std::size_t k = 0; k < P.glued->num_elements(); ++k)
      if (inside(P.glued->element(k), p)) return k;
    return P.glued->num_elements();
  };
  EXPECT_NEAR(P.f_tilde(loc(rx), rx), -f(loc(x), x), 1e-12);
  const auto s = solve_extension(P);
  EXPECT_LE(s.glued.residual, 1e-8);
  EXPECT_LE(s.neumann_trace, 1e-10);
}

TEST(Mirror, ConstantDatumHasZeroMeanExtension) {
  DomainShape sq;
  auto m = square(2, dirichlet_on_sides(sq, {"bottom"}));
  const auto P = mirror_extension(m, from_global(m, 1.0, 0.0, 0.0));
  EXPECT_NEAR(P.mean_tilde, 0.0, 1e-14);
  EXPECT_LE(solve_extension(P).neumann_trace, 1e-10);
}

TEST(Mirror, RejectsNonconvexAndBadBoundaries) {
  auto L = lshape(2);
  try {
    mirror_extension(L, BrokenFunction(L, 0));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("nonconvex"), std::string::npos);
  }
  DomainShape sq;
  auto two = square(2, dirichlet_on_sides(sq, {"left", "bottom"}));
  EXPECT_THROW(mirror_extension(two, BrokenFunction(two, 0)), DomainError);
}

TEST(Mirror, RestrictionIsNoCheaperThanTheMixedMinimizer) {
  DomainShape sq;
  auto m = square(4, dirichlet_on_sides(sq, {"left"}));
  const StokesOptions p0{PressureSpace::PiecewiseConstant, 0, 1.0};
  for (std::uint64_t seed : {3, 4, 5}) {
    auto f = random_datum(m, 1, seed, false);
    const auto s = solve_extension(mirror_extension(m, f), p0);
    const auto mixed = min_energy_right_inverse(StokesDiscretization(m, p0), f, VelocityBC::ZeroOnNeumann);
    EXPECT_LE(mixed.seminorm, s.restricted_seminorm * (1.0 + 1e-10));
  }
}

TEST(Nonconvex, CompensatedExtensionOfTheLShape) {
  auto L = lshape(2);
  auto E = shared(generate_mesh(structured_triangles(2, DomainShape{1.0, 1.0, 2.0, 2.0, false})));
  auto f = random_datum(L, 1, 3, false);
  const auto P = nonconvex_extension(L, E, f);
  EXPECT_NEAR(P.mean_tilde, 0.0, 1e-12);
  EXPECT_NEAR(P.measure_factor, 2.0, 1e-14);
  EXPECT_LE(std::sqrt(P.norm_sq_tilde), P.measure_factor * std::sqrt(P.norm_sq_original) * (1.0 + 1e-12));
  const auto s = solve_extension(P);
  EXPECT_LE(s.glued.residual, 1e-8);
}

TEST(Nonconvex, UnitDatumBalancesToMinusOneOnEqualAreas) {
  auto a = square(2);
  auto b = shared(generate_mesh(structured_triangles(2, DomainShape{1.0, 0.0, 2.0, 1.0, false})));
  const auto P = nonconvex_extension(a, b, from_global(a, 1.0, 0.0, 0.0));
  const std::size_t k = a->num_elements();
  EXPECT_NEAR(P.f_tilde(k, P.glued->element(k).centroid), -1.0, 1e-14);
  EXPECT_NEAR(P.norm_sq_tilde, 2.0, 1e-12);
}

TEST(Nonconvex, RejectsDisjointAndOverlappingExtensions) {
  auto a = square(2);
  auto far = shared(generate_mesh(structured_triangles(2, DomainShape{3.0, 0.0, 4.0, 1.0, false})));
  EXPECT_THROW(nonconvex_extension(a, far, BrokenFunction(a, 0)), MeshError);
  auto overlap = shared(generate_mesh(structured_triangles(2, DomainShape{0.5, 0.0, 1.5, 1.0, false})));
  EXPECT_THROW(nonconvex_extension(a, overlap, BrokenFunction(a, 0)), Error);
}

TEST(Pou, RandomZeroMeanData) {
  for (int n : {2, 4}) {
    auto m = square(n);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto f = random_datum(m, 2, 100 + seed, true);
      const auto R = pou_right_inverse(m, f);
      EXPECT_LE(R.field.residual, 1e-8);
      EXPECT_LE(R.field.boundary_trace, 1e-10);
      EXPECT_EQ(R.patches.size(), m->vertices().size());
      double moved = 0.0;
      for (const auto& p : R.patches) moved += p.mass;
      EXPECT_NEAR(moved, 0.0, 1e-12);
    }
  }
}

TEST(Pou, NonconvexDomain) {
  auto L = lshape(2);
  const auto R = pou_right_inverse(L, random_datum(L, 1, 9, true));
  EXPECT_LE(R.field.residual, 1e-8);
  EXPECT_GT(R.field.ratio, 0.0);
}

TEST(Pou, SinglePatchMatchesTheMinimizer) {
  auto m = hexagon_fan();
  StokesDiscretization d(m, {PressureSpace::ContinuousP1, 1, 1.0});
  auto f = random_datum(m, 1, 5, true);
  const Eigen::VectorXd F = d.pressure_load(f);
  const Eigen::VectorXd v = solve_patch(d, 0, F);
  const auto r = min_energy_right_inverse(d, f, VelocityBC::FullDirichlet);
  EXPECT_LT((v - r.velocity).norm(), 1e-10 * r.velocity.norm());
}

TEST(Pou, RejectsNonzeroMean) {
  auto m = square(2);
  EXPECT_THROW(pou_right_inverse(m, from_global(m, 1.0, 0.0, 0.0)), DomainError);
}
