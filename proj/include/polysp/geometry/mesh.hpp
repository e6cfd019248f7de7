#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polysp/core/error.hpp"
#include "polysp/core/point.hpp"

namespace polysp {

enum class FacetLabel { Interior, Dirichlet, Neumann };

inline const char* to_string(FacetLabel l) {
  switch (l) {
    case FacetLabel::Interior: return "I";
    case FacetLabel::Dirichlet: return "D";
    case FacetLabel::Neumann: return "N";
  }
  return "?";
}

/// Triangle of an element's sub-triangulation. When the triangle touches the element boundary
/// along an edge, vertices[1] -> vertices[2] is that edge (counterclockwise) and vertices[0] is
/// the opposite apex.
struct SubSimplex {
  std::array<Point, 3> vertices;
  double area = 0.0;
  bool has_boundary_edge = false;
  double boundary_length = 0.0;

  const Point& apex() const { return vertices[0]; }
};

struct Element {
  std::vector<int> vertices;  // counterclockwise loop
  std::vector<Point> loop;
  Point centroid;
  double area = 0.0;
  double diameter = 0.0;
  std::vector<int> facets;  // in loop order
  std::vector<SubSimplex> sub_triangulation;

  double perimeter() const {
    double p = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) p += distance(loop[i], loop[(i + 1) % loop.size()]);
    return p;
  }
};

struct Facet {
  int v0 = -1, v1 = -1;
  Point a, b;
  double length = 0.0;
  Point normal;  // fixed unit normal n_F (outward for the first adjacent element)
  std::array<int, 2> elements{-1, -1};
  std::array<Point, 2> element_normals;  // outward normals n_K of the adjacent elements
  FacetLabel label = FacetLabel::Interior;

  bool is_interior() const { return elements[1] >= 0; }
  Point midpoint() const { return 0.5 * (a + b); }
  /// Local index (0 or 1) of element k among the adjacent elements.
  int side_of(int k) const { return elements[0] == k ? 0 : (elements[1] == k ? 1 : -1); }
};

struct BoundarySpec {
  int i = 0, j = 0;
  FacetLabel label = FacetLabel::Dirichlet;
};

/// Raw description of a mesh as read from file or produced by a generator.
struct MeshData {
  std::vector<Point> vertices;
  std::vector<std::vector<int>> cells;
  std::vector<BoundarySpec> boundary;
  /// Optional per-cell explicit sub-triangulations (vertex index triples). Empty = centroid fan.
  std::vector<std::vector<std::array<int, 3>>> subtriangulation;
};

namespace detail {

inline double polygon_signed_area(const std::vector<Point>& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) a += cross(p[i], p[(i + 1) % p.size()]);
  return 0.5 * a;
}

inline Point polygon_centroid(const std::vector<Point>& p) {
  // Shift to the first vertex for accuracy.
  const Point o = p[0];
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    Point u = p[i] - o, v = p[(i + 1) % p.size()] - o;
    double c = cross(u, v);
    a += c;
    cx += (u.x + v.x) * c;
    cy += (u.y + v.y) * c;
  }
  return {o.x + cx / (3.0 * a), o.y + cy / (3.0 * a)};
}

inline double point_set_diameter(const std::vector<Point>& p) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) d = std::max(d, distance(p[i], p[j]));
  return d;
}

/// Parameter of p on segment a->b if p lies on the closed segment within tol, else nullopt.
inline std::optional<double> on_segment(const Point& a, const Point& b, const Point& p, double tol) {
  Point d = b - a;
  double l2 = dot(d, d);
  if (l2 == 0.0) return std::nullopt;
  double l = std::sqrt(l2);
  if (std::abs(cross(d, p - a)) > tol * l) return std::nullopt;
  double t = dot(p - a, d) / l2;
  if (t < -tol / l || t > 1.0 + tol / l) return std::nullopt;
  return t;
}

}  // namespace detail

/// Centroid fan of a polygon (counterclockwise loop). Every fan triangle must be positively
/// oriented, i.e. the polygon is star-shaped with respect to its area centroid.
inline std::vector<SubSimplex> subtriangulate(const std::vector<Point>& loop) {
  POLYSP_REQUIRE(loop.size() >= 3, MeshError, "subtriangulate: polygon needs at least 3 vertices");
  const double area = detail::polygon_signed_area(loop);
  POLYSP_REQUIRE(area > 0.0, MeshError, "subtriangulate: polygon must be counterclockwise with positive area");
  const Point c = detail::polygon_centroid(loop);
  std::vector<SubSimplex> out;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Point& p = loop[i];
    const Point& q = loop[(i + 1) % loop.size()];
    double o = orient(c, p, q);
    POLYSP_REQUIRE(o > 1e-12 * 2.0 * area, MeshError,
                   "subtriangulate: element is not star-shaped with respect to its centroid "
                   "(supply an explicit sub-triangulation)");
    SubSimplex t;
    t.vertices = {c, p, q};
    t.area = 0.5 * o;
    t.has_boundary_edge = true;
    t.boundary_length = distance(p, q);
    out.push_back(t);
  }
  return out;
}

/// Immutable polytopic mesh. Facets are extracted from element edges: every element edge is split at
/// all mesh vertices lying on it, so hanging vertices produce several facets along one straight edge.
class Mesh {
public:
  static Mesh build(MeshData data) {
    Mesh m;
    m.data_ = std::move(data);
    m.construct();
    return m;
  }

  const MeshData& data() const { return data_; }
  const std::vector<Point>& vertices() const { return data_.vertices; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const Element& element(std::size_t k) const { return elements_.at(k); }
  const Facet& facet(std::size_t f) const { return facets_.at(f); }
  std::size_t num_elements() const { return elements_.size(); }
  std::size_t num_facets() const { return facets_.size(); }
  constexpr int dimension() const { return 2; }

  std::size_t count(FacetLabel l) const {
    return static_cast<std::size_t>(std::count_if(facets_.begin(), facets_.end(), [&](const Facet& f) { return f.label == l; }));
  }
  bool is_triangular() const {
    return std::all_of(data_.cells.begin(), data_.cells.end(), [](const auto& c) { return c.size() == 3; });
  }
  double area() const {
    double a = 0.0;
    for (const auto& e : elements_) a += e.area;
    return a;
  }
  double max_element_diameter() const {
    double h = 0.0;
    for (const auto& e : elements_) h = std::max(h, e.diameter);
    return h;
  }
  std::size_t max_facets_per_element() const {
    std::size_t n = 0;
    for (const auto& e : elements_) n = std::max(n, e.facets.size());
    return n;
  }
  /// Relative geometric tolerance scaled to the mesh extent.
  double tolerance() const { return tol_; }

  /// Mesh with every vertex mapped by `map` (labels and sub-triangulations carried over).
  Mesh transformed(const std::function<Point(const Point&)>& map) const {
    MeshData d = data_;
    for (auto& v : d.vertices) v = map(v);
    return build(std::move(d));
  }

private:
  void construct();
  void extract_facets();
  void check_cover() const;
  void assign_labels();
  void build_subtriangulations();

  MeshData data_;
  std::vector<Element> elements_;
  std::vector<Facet> facets_;
  double tol_ = 1e-12;
};

inline void Mesh::construct() {
  const auto& V = data_.vertices;
  POLYSP_REQUIRE(!V.empty(), MeshError, "mesh has no vertices");
  POLYSP_REQUIRE(!data_.cells.empty(), MeshError, "mesh has no cells");
  double xmin = V[0].x, xmax = V[0].x, ymin = V[0].y, ymax = V[0].y;
  for (const auto& p : V) {
    POLYSP_REQUIRE(std::isfinite(p.x) && std::isfinite(p.y), MeshError, "non-finite vertex coordinate");
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double extent = std::hypot(xmax - xmin, ymax - ymin);
  POLYSP_REQUIRE(extent > 0.0, MeshError, "degenerate mesh extent");
  tol_ = 1e-12 * extent;

  elements_.clear();
  for (std::size_t k = 0; k < data_.cells.size(); ++k) {
    auto& cell = data_.cells[k];
    POLYSP_REQUIRE(cell.size() >= 3, MeshError, "cell " + std::to_string(k) + " has fewer than 3 vertices");
    for (int v : cell)
      POLYSP_REQUIRE(v >= 0 && static_cast<std::size_t>(v) < V.size(), MeshError,
                     "cell " + std::to_string(k) + " references a missing vertex");
    Element e;
    e.vertices = cell;
    for (int v : cell) e.loop.push_back(V[v]);
    double a = detail::polygon_signed_area(e.loop);
    POLYSP_REQUIRE(std::abs(a) > 1e-12 * extent * extent, MeshError, "cell " + std::to_string(k) + " has zero area");
    if (a < 0) {
      std::reverse(cell.begin(), cell.end());
      std::reverse(e.vertices.begin(), e.vertices.end());
      std::reverse(e.loop.begin(), e.loop.end());
      a = -a;
    }
    e.area = a;
    e.centroid = detail::polygon_centroid(e.loop);
    e.diameter = detail::point_set_diameter(e.loop);
    elements_.push_back(std::move(e));
  }
  extract_facets();
  check_cover();
  assign_labels();
  build_subtriangulations();
}

inline void Mesh::extract_facets() {
  const auto& V = data_.vertices;
  struct Use {
    int element;
    bool forward;  // traversed from min to max vertex id
  };
  std::map<std::pair<int, int>, std::vector<Use>> segments;
  std::vector<std::vector<std::pair<int, int>>> element_segments(elements_.size());
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    const auto& vs = elements_[k].vertices;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      int a = vs[i], b = vs[(i + 1) % vs.size()];
      POLYSP_REQUIRE(a != b, MeshError, "repeated vertex in cell " + std::to_string(k));
      const Point pa = V[a], pb = V[b];
      const double bx0 = std::min(pa.x, pb.x) - tol_, bx1 = std::max(pa.x, pb.x) + tol_;
      const double by0 = std::min(pa.y, pb.y) - tol_, by1 = std::max(pa.y, pb.y) + tol_;
      std::vector<std::pair<double, int>> inner;
      for (std::size_t v = 0; v < V.size(); ++v) {
        if (static_cast<int>(v) == a || static_cast<int>(v) == b) continue;
        const Point& p = V[v];
        if (p.x < bx0 || p.x > bx1 || p.y < by0 || p.y > by1) continue;
        auto t = detail::on_segment(pa, pb, p, tol_);
        if (!t) continue;
        POLYSP_REQUIRE(*t > 0.0 && *t < 1.0, MeshError, "duplicate vertex coordinates near vertex " + std::to_string(v));
        inner.push_back({*t, static_cast<int>(v)});
      }
      std::sort(inner.begin(), inner.end());
      int prev = a;
      auto add = [&](int p, int q) {
        auto key = std::minmax(p, q);
        segments[{key.first, key.second}].push_back({static_cast<int>(k), p < q});
        element_segments[k].push_back({p, q});
      };
      for (auto& [t, v] : inner) {
        add(prev, v);
        prev = v;
      }
      add(prev, b);
    }
  }
  facets_.clear();
  std::map<std::pair<int, int>, int> facet_of;
  for (auto& [key, uses] : segments) {
    POLYSP_REQUIRE(uses.size() <= 2, MeshError,
                   "non-conforming cover: segment (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                       ") is shared by more than two elements");
    if (uses.size() == 2) {
      POLYSP_REQUIRE(uses[0].element != uses[1].element, MeshError,
                     "non-conforming cover: element " + std::to_string(uses[0].element) + " uses an edge twice");
      POLYSP_REQUIRE(uses[0].forward != uses[1].forward, MeshError,
                     "non-conforming cover: overlapping elements share edge (" + std::to_string(key.first) + "," +
                         std::to_string(key.second) + ") with equal orientation");
    }
    Facet f;
    const Use& first = (uses.size() == 1 || uses[0].element < uses[1].element) ? uses[0] : uses[1];
    // Store endpoints in the traversal direction of the first element so that n_F is its outward normal.
    f.v0 = first.forward ? key.first : key.second;
    f.v1 = first.forward ? key.second : key.first;
    f.a = V[f.v0];
    f.b = V[f.v1];
    f.length = distance(f.a, f.b);
    f.normal = right_normal(f.a, f.b);
    f.elements[0] = first.element;
    f.element_normals[0] = f.normal;
    if (uses.size() == 2) {
      const Use& second = (&first == &uses[0]) ? uses[1] : uses[0];
      f.elements[1] = second.element;
      f.element_normals[1] = f.normal * -1.0;
      f.label = FacetLabel::Interior;
    } else {
      f.label = FacetLabel::Dirichlet;  // provisional; assigned from the boundary list
    }
    facet_of[key] = static_cast<int>(facets_.size());
    facets_.push_back(f);
  }
  for (std::size_t k = 0; k < elements_.size(); ++k)
    for (auto [p, q] : element_segments[k]) {
      auto key = std::minmax(p, q);
      elements_[k].facets.push_back(facet_of.at({key.first, key.second}));
    }
}

inline void Mesh::check_cover() const {
  // Element adjacency through facets must be connected.
  const std::size_t n = elements_.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& f : facets_)
    if (f.is_interior()) parent[find(f.elements[0])] = find(f.elements[1]);
  for (std::size_t k = 1; k < n; ++k)
    POLYSP_REQUIRE(find(static_cast<int>(k)) == find(0), MeshError,
                   "non-conforming cover: elements do not form a connected face-adjacent set (gap or vertex-only contact)");
  // Boundary segments must not overlap collinearly, and boundary loops must close.
  std::vector<int> degree(data_.vertices.size(), 0);
  std::vector<const Facet*> bnd;
  for (const auto& f : facets_)
    if (!f.is_interior()) {
      bnd.push_back(&f);
      degree[f.v0]++;
      degree[f.v1]++;
    }
  for (std::size_t v = 0; v < degree.size(); ++v)
    POLYSP_REQUIRE(degree[v] % 2 == 0, MeshError, "non-conforming cover: open boundary at vertex " + std::to_string(v));
  for (std::size_t i = 0; i < bnd.size(); ++i)
    for (std::size_t j = i + 1; j < bnd.size(); ++j) {
      const Facet& f = *bnd[i];
      const Facet& g = *bnd[j];
      const Point d = f.b - f.a;
      if (std::abs(cross(d, g.a - f.a)) > tol_ * f.length || std::abs(cross(d, g.b - f.a)) > tol_ * f.length) continue;
      const double l2 = dot(d, d);
      double t0 = dot(g.a - f.a, d) / l2, t1 = dot(g.b - f.a, d) / l2;
      double overlap = std::min(1.0, std::max(t0, t1)) - std::max(0.0, std::min(t0, t1));
      POLYSP_REQUIRE(overlap <= 1e-9, MeshError,
                     "non-conforming cover: overlapping boundary facets at vertices " + std::to_string(f.v0) + "-" +
                         std::to_string(f.v1));
    }
}

inline void Mesh::assign_labels() {
  const auto& V = data_.vertices;
  std::vector<bool> used(data_.boundary.size(), false);
  for (auto& f : facets_) {
    if (f.is_interior()) continue;
    std::optional<FacetLabel> label;
    for (std::size_t s = 0; s < data_.boundary.size(); ++s) {
      const auto& b = data_.boundary[s];
      POLYSP_REQUIRE(b.i >= 0 && b.j >= 0 && static_cast<std::size_t>(b.i) < V.size() &&
                         static_cast<std::size_t>(b.j) < V.size(),
                     MeshError, "boundary entry references a missing vertex");
      if (b.label == FacetLabel::Interior) throw MeshError("boundary entry with interior label");
      if (!detail::on_segment(V[b.i], V[b.j], f.a, tol_) || !detail::on_segment(V[b.i], V[b.j], f.b, tol_)) continue;
      used[s] = true;
      if (label && *label != b.label)
        throw MeshError("conflicting labels on boundary facet " + std::to_string(f.v0) + "-" + std::to_string(f.v1));
      label = b.label;
    }
    POLYSP_REQUIRE(label.has_value(), MeshError,
                   "unlabeled boundary facet " + std::to_string(f.v0) + "-" + std::to_string(f.v1));
    f.label = *label;
  }
  for (std::size_t s = 0; s < used.size(); ++s)
    POLYSP_REQUIRE(used[s], MeshError,
                   "boundary entry " + std::to_string(data_.boundary[s].i) + "-" + std::to_string(data_.boundary[s].j) +
                       " does not cover any boundary facet");
}

inline void Mesh::build_subtriangulations() {
  const auto& V = data_.vertices;
  const bool explicit_sub = !data_.subtriangulation.empty();
  POLYSP_REQUIRE(!explicit_sub || data_.subtriangulation.size() == elements_.size(), MeshError,
                 "subtriangulation must list one entry per cell");
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    Element& e = elements_[k];
    if (!explicit_sub || data_.subtriangulation[k].empty()) {
      e.sub_triangulation = subtriangulate(e.loop);
      continue;
    }
    double sum = 0.0;
    for (const auto& tri : data_.subtriangulation[k]) {
      std::array<Point, 3> p;
      for (int i = 0; i < 3; ++i) {
        POLYSP_REQUIRE(tri[i] >= 0 && static_cast<std::size_t>(tri[i]) < V.size(), MeshError,
                       "subtriangulation references a missing vertex");
        p[i] = V[tri[i]];
      }
      if (orient(p[0], p[1], p[2]) < 0) std::swap(p[1], p[2]);
      double a = 0.5 * orient(p[0], p[1], p[2]);
      POLYSP_REQUIRE(a > 1e-12 * e.area, MeshError, "subtriangulation of cell " + std::to_string(k) + " has a degenerate triangle");
      // An edge lies on the element boundary when both endpoints are on the same polygon edge.
      auto on_boundary = [&](const Point& u, const Point& v) {
        for (std::size_t i = 0; i < e.loop.size(); ++i) {
          const Point& s0 = e.loop[i];
          const Point& s1 = e.loop[(i + 1) % e.loop.size()];
          if (detail::on_segment(s0, s1, u, tol_) && detail::on_segment(s0, s1, v, tol_)) return true;
        }
        return false;
      };
      SubSimplex t;
      int nb = 0;
      for (int i = 0; i < 3; ++i) {
        const Point& u = p[(i + 1) % 3];
        const Point& v = p[(i + 2) % 3];
        if (on_boundary(u, v)) {
          ++nb;
          t.vertices = {p[i], u, v};
          t.has_boundary_edge = true;
          t.boundary_length = distance(u, v);
        }
      }
      POLYSP_REQUIRE(nb <= 1, MeshError,
                     "subtriangulation of cell " + std::to_string(k) + ": a triangle meets the element boundary in more than one edge");
      if (nb == 0) t.vertices = p;
      t.area = a;
      sum += a;
      e.sub_triangulation.push_back(t);
    }
    POLYSP_REQUIRE(std::abs(sum - e.area) <= 1e-10 * e.area, MeshError,
                   "subtriangulation of cell " + std::to_string(k) + " does not partition the element");
  }
}

/// Largest γ with γ h_K <= d |T| / |F_K^T| for every boundary-touching sub-simplex T.
inline double shape_regularity(const Mesh& mesh) {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& e : mesh.elements()) {
    bool any = false;
    for (const auto& t : e.sub_triangulation) {
      if (!t.has_boundary_edge) continue;
      any = true;
      g = std::min(g, mesh.dimension() * t.area / (t.boundary_length * e.diameter));
    }
    POLYSP_REQUIRE(any, Error, "internal error: element without boundary-touching sub-simplex");
  }
  return g;
}

/// Per-element regularity (same formula restricted to one element).
inline double element_regularity(const Mesh& mesh, std::size_t k) {
  const auto& e = mesh.element(k);
  double g = std::numeric_limits<double>::infinity();
  for (const auto& t : e.sub_triangulation)
    if (t.has_boundary_edge) g = std::min(g, mesh.dimension() * t.area / (t.boundary_length * e.diameter));
  return g;
}

enum class LengthScaleMode { Facet, ElementMin };

/// h̃_F per facet. Neumann facets carry no jump term and are reported as NaN.
inline std::vector<double> facet_length_scale(const Mesh& mesh, LengthScaleMode mode) {
  std::vector<double> h(mesh.num_facets(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < mesh.num_facets(); ++i) {
    const Facet& f = mesh.facet(i);
    if (f.label == FacetLabel::Neumann) continue;
    if (mode == LengthScaleMode::Facet) {
      h[i] = f.length;
    } else if (f.is_interior()) {
      h[i] = std::min(mesh.element(f.elements[0]).diameter, mesh.element(f.elements[1]).diameter);
    } else {
      h[i] = mesh.element(f.elements[0]).diameter;
    }
  }
  return h;
}

}  // namespace polysp
