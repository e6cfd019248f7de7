#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "frozen_anchors.hpp"
#include "polysp/geometry/domain.hpp"
#include "polysp/geometry/generate.hpp"
#include "polysp/geometry/mesh_io.hpp"

using namespace polysp;

namespace {

std::string mesh_path(const std::string& name) { return std::string(POLYSP_MESH_DIR) + "/" + name; }

std::vector<Mesh> mesh_suite() {
  std::vector<Mesh> out;
  out.push_back(generate_mesh(structured_triangles(4)));
  out.push_back(generate_mesh(structured_quads(4)));
  out.push_back(generate_mesh(fan_polygon(6)));
  out.push_back(generate_mesh(agglomerated(7)));
  out.push_back(generate_mesh(split_facet(3, 2)));
  out.push_back(generate_mesh(structured_triangles(2, DomainShape::lshape())));
  out.push_back(load_mesh(mesh_path("hanging_vertex.json")));
  out.push_back(load_mesh(mesh_path("lshape_element_subtri.json")));
  return out;
}

}  // namespace

TEST(LoadMesh, UnitSquareSingleElement) {
  Mesh m = load_mesh(mesh_path("unit_square.json"));
  EXPECT_EQ(m.num_elements(), 1u);
  EXPECT_EQ(m.num_facets(), 4u);
  EXPECT_EQ(m.count(FacetLabel::Dirichlet), 4u);
  EXPECT_EQ(m.count(FacetLabel::Interior), 0u);
}

TEST(LoadMesh, TwoTrianglesShareDiagonal) {
  Mesh m = load_mesh(mesh_path("two_triangles.json"));
  EXPECT_EQ(m.count(FacetLabel::Interior), 1u);
  EXPECT_EQ(m.num_facets() - m.count(FacetLabel::Interior), 4u);
  EXPECT_EQ(m.count(FacetLabel::Neumann), 2u);
}

TEST(LoadMesh, GapIsRejected) {
  try {
    load_mesh(mesh_path("gap.json"));
    FAIL() << "expected an error";
  } catch (const MeshError& e) {
    EXPECT_NE(std::string(e.what()).find("non-conforming cover"), std::string::npos) << e.what();
  }
}

TEST(LoadMesh, OverlappingElementsAreRejected) {
  MeshData d;
  d.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  d.cells = {{0, 1, 2, 3}, {0, 1, 2, 3}};
  d.boundary = {{0, 1, FacetLabel::Dirichlet}};
  EXPECT_THROW(Mesh::build(d), MeshError);
}

TEST(LoadMesh, UnlabeledBoundaryFacetIsRejected) {
  MeshData d;
  d.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  d.cells = {{0, 1, 2, 3}};
  d.boundary = {{0, 1, FacetLabel::Dirichlet}, {1, 2, FacetLabel::Dirichlet}, {2, 3, FacetLabel::Neumann}};
  try {
    Mesh::build(d);
    FAIL();
  } catch (const MeshError& e) {
    EXPECT_NE(std::string(e.what()).find("unlabeled boundary facet"), std::string::npos);
  }
}

TEST(LoadMesh, MalformedFileIsRejected) {
  nlohmann::json j = {{"vertices", {{0, 0}, {1}}}, {"cells", {{0, 1, 2}}}};
  EXPECT_THROW(mesh_data_from_json(j), MeshError);
  EXPECT_THROW(load_mesh(mesh_path("does_not_exist.json")), MeshError);
}

TEST(LoadMesh, HangingVertexSplitsEdgeIntoFacets) {
  Mesh m = load_mesh(mesh_path("hanging_vertex.json"));
  EXPECT_EQ(m.num_elements(), 3u);
  EXPECT_EQ(m.element(0).facets.size(), 5u);  // right edge split at (1, 0.5)
  EXPECT_EQ(m.count(FacetLabel::Interior), 3u);
}

TEST(LoadMesh, RoundTripThroughJson) {
  Mesh m = generate_mesh(agglomerated(7));
  Mesh r = Mesh::build(mesh_data_from_json(mesh_data_to_json(m.data())));
  EXPECT_EQ(r.num_facets(), m.num_facets());
  EXPECT_EQ(mesh_hash(r), mesh_hash(m));
}

TEST(GenerateMesh, StructuredQuadsTwoByTwo) {
  Mesh m = generate_mesh(structured_quads(2));
  EXPECT_EQ(m.num_elements(), 4u);
  EXPECT_EQ(m.count(FacetLabel::Interior), 4u);
}

TEST(GenerateMesh, FanPolygonHexagon) {
  Mesh m = generate_mesh(fan_polygon(6));
  ASSERT_EQ(m.num_elements(), 1u);
  EXPECT_EQ(m.element(0).vertices.size(), 6u);
  for (const auto& f : m.facets()) EXPECT_NEAR(f.length, 1.0, 1e-14);
  EXPECT_THROW(generate_mesh(fan_polygon(2)), DomainError);
}

TEST(GenerateMesh, SplitFacetOnSingleQuad) {
  Mesh m = generate_mesh(split_facet(3, 1));
  ASSERT_EQ(m.num_elements(), 1u);
  EXPECT_EQ(m.num_facets(), 12u);
  for (const auto& f : m.facets()) EXPECT_NEAR(f.length, 1.0 / 3.0, 1e-14);
}

TEST(GenerateMesh, AgglomeratedPolygonsHaveThreeToEightEdges) {
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    Mesh m = generate_mesh(agglomerated(seed));
    EXPECT_LT(m.num_elements(), 32u);
    for (const auto& e : m.elements()) {
      EXPECT_GE(e.vertices.size(), 3u);
      EXPECT_LE(e.vertices.size(), 8u);
    }
    EXPECT_NEAR(m.area(), 1.0, 1e-12);
  }
}

TEST(GenerateMesh, ResolutionMustBePositive) { EXPECT_THROW(generate_mesh(structured_quads(0)), DomainError); }

TEST(GenerateMesh, LabelRuleOnSides) {
  DomainShape d;
  Mesh m = generate_mesh(structured_quads(3, d, dirichlet_on_sides(d, {"left"})));
  EXPECT_EQ(m.count(FacetLabel::Dirichlet), 3u);
  EXPECT_EQ(m.count(FacetLabel::Neumann), 9u);
}

TEST(Subtriangulate, UnitSquareFan) {
  auto t = subtriangulate({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  ASSERT_EQ(t.size(), 4u);
  for (const auto& s : t) {
    EXPECT_NEAR(s.area, 0.25, 1e-15);
    EXPECT_TRUE(s.has_boundary_edge);
    EXPECT_NEAR(s.boundary_length, 1.0, 1e-15);
  }
}

TEST(Subtriangulate, RightTriangleFan) {
  auto t = subtriangulate({{0, 0}, {1, 0}, {0, 1}});
  ASSERT_EQ(t.size(), 3u);
  for (const auto& s : t) EXPECT_NEAR(s.area, anchors::fan_area_right_triangle, 1e-15);
}

TEST(Subtriangulate, NonconvexElementWithCentroidOutsideFails) {
  EXPECT_THROW(load_mesh(mesh_path("lshape_element.json")), MeshError);
  EXPECT_THROW(subtriangulate({{0, 0}, {2, 0}, {2, 0.2}, {0.2, 0.2}, {0.2, 2}, {0, 2}}), MeshError);
}

TEST(Subtriangulate, ExplicitSubtriangulationIsAccepted) {
  Mesh m = load_mesh(mesh_path("lshape_element_subtri.json"));
  const auto& e = m.element(0);
  ASSERT_EQ(e.sub_triangulation.size(), 8u);
  int boundary = 0;
  for (const auto& t : e.sub_triangulation) boundary += t.has_boundary_edge;
  EXPECT_EQ(boundary, 6);
  EXPECT_GT(shape_regularity(m), 0.0);
}

TEST(ShapeRegularity, Anchors) {
  EXPECT_NEAR(shape_regularity(load_mesh(mesh_path("unit_square.json"))), anchors::gamma_unit_square, 1e-12);
  EXPECT_NEAR(shape_regularity(load_mesh(mesh_path("right_triangle.json"))), anchors::gamma_right_triangle, 1e-12);
}

TEST(ShapeRegularity, InvariantUnderRigidMotionAndDilation) {
  for (const Mesh& m : mesh_suite()) {
    const double g = shape_regularity(m);
    const double c = std::cos(0.7), s = std::sin(0.7);
    Mesh r = m.transformed([&](const Point& p) { return Point{c * p.x - s * p.y + 3.0, s * p.x + c * p.y - 1.0}; });
    Mesh d = m.transformed([](const Point& p) { return p * 2.0; });
    EXPECT_NEAR(shape_regularity(r), g, 1e-14);
    EXPECT_NEAR(shape_regularity(d), g, 1e-14);
  }
}

TEST(MeshInvariants, AreasPerimetersNormals) {
  for (const Mesh& m : mesh_suite()) {
    for (const auto& e : m.elements()) {
      double a = 0.0;
      for (const auto& t : e.sub_triangulation) {
        EXPECT_GT(t.area, 0.0);
        a += t.area;
      }
      EXPECT_NEAR(a, e.area, 1e-12 * e.area);
      double per = 0.0;
      for (int f : e.facets) per += m.facet(f).length;
      EXPECT_NEAR(per, e.perimeter(), 1e-12 * e.perimeter());
    }
    // Divergence of x over K: the sum of |F| n_K . (m_F - c) equals 2|K| only with outward normals.
    for (std::size_t k = 0; k < m.num_elements(); ++k) {
      const auto& e = m.element(k);
      double flux = 0.0;
      for (int fi : e.facets) {
        const auto& f = m.facet(fi);
        flux += f.length * dot(f.element_normals[f.side_of(static_cast<int>(k))], f.midpoint() - e.centroid);
      }
      EXPECT_NEAR(flux, 2.0 * e.area, 1e-12);
    }
    for (const auto& f : m.facets()) {
      EXPECT_NEAR(norm(f.normal), 1.0, 1e-15);
      if (f.is_interior()) {
        EXPECT_NEAR(f.element_normals[0].x + f.element_normals[1].x, 0.0, 1e-14);
        EXPECT_NEAR(f.element_normals[0].y + f.element_normals[1].y, 0.0, 1e-14);
      }
      EXPECT_NE(f.side_of(f.elements[0]), -1);
    }
  }
}

TEST(FacetLengthScale, ElementMinAndFacetModes) {
  MeshData d;
  const double y1 = std::sqrt(1.0 - 0.0625), y2 = -std::sqrt(4.0 - 0.0625);
  d.vertices = {{0, 0}, {0.5, 0}, {0.25, y1}, {0.25, y2}};
  d.cells = {{0, 1, 2}, {1, 0, 3}};
  d.boundary = {{1, 2, FacetLabel::Dirichlet}, {2, 0, FacetLabel::Dirichlet}, {0, 3, FacetLabel::Neumann},
                {3, 1, FacetLabel::Neumann}};
  Mesh m = Mesh::build(d);
  EXPECT_NEAR(m.element(0).diameter, 1.0, 1e-14);
  EXPECT_NEAR(m.element(1).diameter, 2.0, 1e-14);
  auto em = facet_length_scale(m, LengthScaleMode::ElementMin);
  auto fm = facet_length_scale(m, LengthScaleMode::Facet);
  for (std::size_t i = 0; i < m.num_facets(); ++i) {
    const auto& f = m.facet(i);
    if (f.is_interior()) {
      EXPECT_NEAR(em[i], 1.0, 1e-14);
      EXPECT_NEAR(fm[i], 0.5, 1e-14);
    } else if (f.label == FacetLabel::Neumann) {
      EXPECT_TRUE(std::isnan(em[i]));
    }
  }
  Mesh sq = load_mesh(mesh_path("unit_square.json"));
  for (double h : facet_length_scale(sq, LengthScaleMode::ElementMin)) EXPECT_NEAR(h, std::sqrt(2.0), 1e-15);
}

TEST(FacetLengthScale, ElementMinBoundedByAdjacentDiameters) {
  for (const Mesh& m : mesh_suite()) {
    auto em = facet_length_scale(m, LengthScaleMode::ElementMin);
    for (std::size_t i = 0; i < m.num_facets(); ++i) {
      if (std::isnan(em[i])) continue;
      const auto& f = m.facet(i);
      double hmax = m.element(f.elements[0]).diameter;
      if (f.is_interior()) hmax = std::max(hmax, m.element(f.elements[1]).diameter);
      EXPECT_LE(em[i], hmax);
    }
  }
}

TEST(DomainGeometry, UnitSquare) {
  DomainGeometry g = domain_geometry(load_mesh(mesh_path("unit_square.json")), 0.9);
  EXPECT_NEAR(g.diameter, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(g.rho, 0.5, 1e-14);
  EXPECT_TRUE(g.convex);
  EXPECT_NEAR(g.rho_gamma, 0.45, 1e-15);
  // The same domain meshed finely has the same sides and hence the same ρ_Γ.
  DomainGeometry f = domain_geometry(generate_mesh(split_facet(3, 4)), 0.9);
  EXPECT_NEAR(f.rho_gamma, 0.45, 1e-14);
  EXPECT_NEAR(f.rho, 0.5, 1e-14);
}

TEST(DomainGeometry, LShape) {
  DomainGeometry g = domain_geometry(generate_mesh(structured_triangles(2, DomainShape::lshape())));
  EXPECT_FALSE(g.convex);
  EXPECT_NEAR(g.diameter, anchors::lshape_diameter, 1e-14);
  EXPECT_NEAR(g.rho, 0.5, 1e-12);
  EXPECT_GT(g.rho, 0.0);
  EXPECT_LE(g.rho, g.diameter / 2);
}

TEST(DomainGeometry, RejectsInvalidCGamma) {
  Mesh m = load_mesh(mesh_path("unit_square.json"));
  EXPECT_THROW(domain_geometry(m, 1.0), DomainError);
  EXPECT_THROW(domain_geometry(m, 0.0), DomainError);
}

TEST(DomainGeometry, HexagonInscribedRadius) {
  DomainGeometry g = domain_geometry(generate_mesh(fan_polygon(6)));
  EXPECT_NEAR(g.rho, std::sqrt(3.0) / 2.0, 1e-12);
  EXPECT_NEAR(g.diameter, 2.0, 1e-14);
}
