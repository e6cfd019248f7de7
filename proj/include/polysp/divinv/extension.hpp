#pragma once

#include "polysp/divinv/stokes.hpp"
#include "polysp/geometry/domain.hpp"

namespace polysp {

/// Domain Ω glued to an extension Ω_ext along part of its Dirichlet boundary, with the extended datum f̃.
struct ExtensionProblem {
  std::shared_ptr<const Mesh> original;
  std::shared_ptr<const Mesh> extension;
  std::shared_ptr<const Mesh> glued;  // elements of Ω first, then those of Ω_ext; fully Dirichlet
  BrokenFunction f_tilde;             // on the glued mesh
  std::vector<std::size_t> interface_facets;  // glued facet ids shared by Ω and Ω_ext
  bool mirrored = false;
  double measure_factor = 1.0;  // (1 + |Ω|/|Ω_ext|)^{1/2} for the compensated extension
  double norm_sq_original = 0.0;  // ‖f‖²_{L²(Ω)}
  double norm_sq_tilde = 0.0;     // ‖f̃‖²_{L²(Ω̃)}
  double mean_tilde = 0.0;        // ∫_Ω̃ f̃ / |Ω̃|
};

namespace detail {

struct Glue {
  MeshData data;
  std::vector<std::pair<int, int>> interface;  // vertex pairs in glued numbering
};

/// Union of two meshes with coincident vertices identified; every boundary edge of the union is Dirichlet.
inline Glue glue_meshes(const Mesh& a, const Mesh& b) {
  Glue g;
  g.data.vertices = a.vertices();
  const double tol = 64.0 * std::max(a.tolerance(), b.tolerance());
  std::vector<int> map_b(b.vertices().size());
  for (std::size_t i = 0; i < b.vertices().size(); ++i) {
    const Point& p = b.vertices()[i];
    int found = -1;
    for (std::size_t j = 0; j < a.vertices().size() && found < 0; ++j)
      if (distance(a.vertices()[j], p) <= tol) found = static_cast<int>(j);
    if (found < 0) {
      found = static_cast<int>(g.data.vertices.size());
      g.data.vertices.push_back(p);
    }
    map_b[i] = found;
  }
  for (const auto& c : a.data().cells) g.data.cells.push_back(c);
  for (const auto& c : b.data().cells) {
    std::vector<int> cc;
    for (int v : c) cc.push_back(map_b[v]);
    g.data.cells.push_back(cc);
  }
  std::map<std::pair<int, int>, std::array<int, 2>> uses;  // uses from a, from b
  for (std::size_t k = 0; k < g.data.cells.size(); ++k) {
    const auto& c = g.data.cells[k];
    for (std::size_t i = 0; i < c.size(); ++i) uses[edge_key(c[i], c[(i + 1) % c.size()])][k < a.num_elements() ? 0 : 1]++;
  }
  for (auto& [e, u] : uses) {
    if (u[0] + u[1] == 1) g.data.boundary.push_back({e.first, e.second, FacetLabel::Dirichlet});
    if (u[0] == 1 && u[1] == 1) g.interface.push_back(e);
  }
  POLYSP_REQUIRE(!g.interface.empty(), MeshError, "non-conforming glue: the extension shares no facet with the domain");
  // Shared edges must be Dirichlet facets of Ω.
  for (const auto& F : a.facets()) {
    if (F.is_interior()) continue;
    if (std::find(g.interface.begin(), g.interface.end(), edge_key(F.v0, F.v1)) != g.interface.end())
      POLYSP_REQUIRE(F.label == FacetLabel::Dirichlet, DomainError, "the extension must be glued along Dirichlet facets of the domain");
  }
  return g;
}

inline std::vector<std::size_t> interface_facets(const Mesh& glued, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < glued.num_facets(); ++f) {
    const auto& F = glued.facet(f);
    if (std::find(edges.begin(), edges.end(), edge_key(F.v0, F.v1)) != edges.end()) out.push_back(f);
  }
  return out;
}

inline double l2_sq(const BrokenFunction& f, std::size_t k0, std::size_t k1) {
  double s = 0.0;
  for (std::size_t k = k0; k < k1; ++k) s += element_power_integral(f, k, PowerSpec{2.0, false, false}).value;
  return s;
}

inline void finish_problem(ExtensionProblem& P) {
  const std::size_t n = P.original->num_elements();
  P.norm_sq_original = l2_sq(P.f_tilde, 0, n);
  P.norm_sq_tilde = l2_sq(P.f_tilde, 0, P.glued->num_elements());
  double integral = 0.0;
  for (std::size_t k = 0; k < P.glued->num_elements(); ++k) integral += element_integral(P.f_tilde, k);
  P.mean_tilde = integral / P.glued->area();
}

}  // namespace detail

/// Reflection of a convex domain across the line carrying its Dirichlet side, with the odd extension
/// f̃ = f on Ω and -f∘R on R(Ω).
inline ExtensionProblem mirror_extension(const std::shared_ptr<const Mesh>& mesh, const BrokenFunction& f) {
  POLYSP_REQUIRE(f.mesh_ptr() == mesh, DomainError, "mirror_extension: datum lives on a different mesh");
  const DomainGeometry geo = domain_geometry(*mesh);
  POLYSP_REQUIRE(geo.convex, DomainError, "nonconvex: use nonconvex_extension");
  std::vector<const Facet*> dir, bnd;
  for (const auto& F : mesh->facets())
    if (!F.is_interior()) {
      bnd.push_back(&F);
      if (F.label == FacetLabel::Dirichlet) dir.push_back(&F);
    }
  POLYSP_REQUIRE(!dir.empty(), DomainError, "mirror_extension: the mesh has no Dirichlet facets");
  const Point p0 = dir.front()->a;
  const Point n = right_normal(dir.front()->a, dir.front()->b);
  const double tol = 1e3 * mesh->tolerance();
  auto on_line = [&](const Point& x) { return std::abs(dot(x - p0, n)) <= tol; };
  for (const Facet* F : dir)
    POLYSP_REQUIRE(on_line(F->a) && on_line(F->b), DomainError, "Dirichlet boundary is not a single straight side");
  for (const Facet* F : bnd)
    if (on_line(F->a) && on_line(F->b))
      POLYSP_REQUIRE(F->label == FacetLabel::Dirichlet, DomainError, "Dirichlet boundary does not cover its straight side");
  auto reflect = [&](const Point& x) { return x - 2.0 * dot(x - p0, n) * n; };
  MeshData ext = mesh->data();
  ext.subtriangulation.clear();
  for (auto& v : ext.vertices) v = on_line(v) ? v : reflect(v);
  for (auto& c : ext.cells) std::reverse(c.begin(), c.end());
  auto extension = std::make_shared<const Mesh>(Mesh::build(ext));
  auto g = detail::glue_meshes(*mesh, *extension);
  ExtensionProblem P{.original = mesh, .extension = extension, .glued = std::make_shared<const Mesh>(Mesh::build(g.data)),
                     .f_tilde = BrokenFunction(mesh, f.degree()), .interface_facets = {}};
  P.mirrored = true;
  P.interface_facets = detail::interface_facets(*P.glued, g.interface);
  // On R(K): -p_K((R x - c_K)/h) = -p_K(R_lin ξ) with ξ = (x - R c_K)/h.
  const double m00 = 1.0 - 2.0 * n.x * n.x, m01 = -2.0 * n.x * n.y, m11 = 1.0 - 2.0 * n.y * n.y;
  BrokenFunction ft(P.glued, f.degree());
  const std::size_t ne = mesh->num_elements();
  for (std::size_t k = 0; k < ne; ++k) {
    ft.set_local(k, f.local(k));
    ft.set_local(ne + k, f.local(k).linear_substitute(m00, m01, m01, m11) * -1.0);
  }
  P.f_tilde = std::move(ft);
  detail::finish_problem(P);
  return P;
}

/// Ω glued to a user-supplied Ω_ext; f̃ = f on Ω and the constant -f̄_Ω |Ω|/|Ω_ext| on Ω_ext.
inline ExtensionProblem nonconvex_extension(const std::shared_ptr<const Mesh>& mesh, const std::shared_ptr<const Mesh>& extension,
                                            const BrokenFunction& f) {
  POLYSP_REQUIRE(f.mesh_ptr() == mesh, DomainError, "nonconvex_extension: datum lives on a different mesh");
  POLYSP_REQUIRE(extension && extension->area() > 0.0, DomainError, "nonconvex_extension: extension has zero measure");
  auto g = detail::glue_meshes(*mesh, *extension);
  ExtensionProblem P{.original = mesh, .extension = extension, .glued = std::make_shared<const Mesh>(Mesh::build(g.data)),
                     .f_tilde = BrokenFunction(mesh, f.degree()), .interface_facets = {}};
  P.interface_facets = detail::interface_facets(*P.glued, g.interface);
  const double area = mesh->area(), area_ext = extension->area();
  POLYSP_REQUIRE(std::abs(P.glued->area() - area - area_ext) <= 1e-9 * (area + area_ext), MeshError,
                 "non-conforming glue: the extension overlaps the domain");
  double integral = 0.0;
  for (std::size_t k = 0; k < mesh->num_elements(); ++k) integral += element_integral(f, k);
  const double c = -(integral / area) * area / area_ext;
  BrokenFunction ft(P.glued, f.degree());
  const std::size_t ne = mesh->num_elements();
  for (std::size_t k = 0; k < ne; ++k) ft.set_local(k, f.local(k));
  for (std::size_t k = 0; k < extension->num_elements(); ++k) ft.set_local(ne + k, Poly2::constant(c));
  P.f_tilde = std::move(ft);
  P.measure_factor = std::sqrt(1.0 + area / area_ext);
  detail::finish_problem(P);
  return P;
}

struct ExtensionSolution {
  RightInverseResult glued;           // full-Dirichlet solve on Ω̃
  Eigen::VectorXd restricted;         // the field restricted to Ω, on the quadratic nodes of Ω
  double restricted_seminorm = 0.0;   // |v|_{W^{1,2}(Ω)}
  double neumann_trace = 0.0;         // max |v| over the quadratic nodes of Ω on Neumann facets
  double ratio = 0.0;                 // restricted seminorm / ‖f‖_{L²(Ω)}
};

/// Full-Dirichlet minimum-energy right-inverse of f̃ on Ω̃, restricted to Ω.
inline ExtensionSolution solve_extension(const ExtensionProblem& P, const StokesOptions& opt = {}) {
  ExtensionSolution s;
  StokesDiscretization glued(P.glued, opt), orig(P.original, opt);
  s.glued = min_energy_right_inverse(glued, P.f_tilde, VelocityBC::FullDirichlet);
  s.restricted = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(orig.num_velocity_dofs()));
  for (std::size_t i = 0; i < orig.num_nodes(); ++i) {
    auto j = glued.node_at(orig.nodes()[i]);
    POLYSP_REQUIRE(j.has_value(), MeshError, "restriction: node of the domain missing from the glued mesh");
    s.restricted(2 * i) = s.glued.velocity(2 * *j);
    s.restricted(2 * i + 1) = s.glued.velocity(2 * *j + 1);
    if (orig.on_neumann(i)) s.neumann_trace = std::max(s.neumann_trace, std::hypot(s.restricted(2 * i), s.restricted(2 * i + 1)));
  }
  s.restricted_seminorm = std::sqrt(std::max(0.0, s.restricted.dot(orig.A() * s.restricted)));
  const double nf = std::sqrt(opt.mass_scale * P.norm_sq_original);
  s.ratio = nf > 0.0 ? s.restricted_seminorm / nf : 0.0;
  return s;
}

}  // namespace polysp
