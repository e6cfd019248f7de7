#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "polysp/core/random.hpp"
#include "polysp/geometry/mesh.hpp"

namespace polysp {

enum class GeneratorKind { StructuredTriangles, StructuredQuads, FanPolygon, Agglomerated, SplitFacet };

/// Rectangle [x0,x1]x[y0,y1]; with `l_shape` the upper-right quarter [xm,x1]x[ym,y1] is removed.
struct DomainShape {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  bool l_shape = false;

  static DomainShape unit_square() { return {}; }
  static DomainShape lshape() { return {0.0, 0.0, 2.0, 2.0, true}; }
  double xm() const { return 0.5 * (x0 + x1); }
  double ym() const { return 0.5 * (y0 + y1); }
};

/// Boundary label as a function of a boundary edge's endpoints.
using LabelRule = std::function<FacetLabel(const Point&, const Point&)>;

inline LabelRule all_dirichlet() {
  return [](const Point&, const Point&) { return FacetLabel::Dirichlet; };
}

/// Dirichlet on the listed sides of the bounding rectangle ("left", "right", "bottom", "top"), Neumann elsewhere.
inline LabelRule dirichlet_on_sides(const DomainShape& d, std::set<std::string> sides) {
  return [d, sides](const Point& a, const Point& b) {
    const double tol = 1e-12 * std::max(d.x1 - d.x0, d.y1 - d.y0);
    auto both = [&](auto pred) { return pred(a) && pred(b); };
    if (sides.count("left") && both([&](const Point& p) { return std::abs(p.x - d.x0) <= tol; })) return FacetLabel::Dirichlet;
    if (sides.count("right") && both([&](const Point& p) { return std::abs(p.x - d.x1) <= tol; })) return FacetLabel::Dirichlet;
    if (sides.count("bottom") && both([&](const Point& p) { return std::abs(p.y - d.y0) <= tol; })) return FacetLabel::Dirichlet;
    if (sides.count("top") && both([&](const Point& p) { return std::abs(p.y - d.y1) <= tol; })) return FacetLabel::Dirichlet;
    return FacetLabel::Neumann;
  };
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::StructuredQuads;
  int resolution = 1;   // cells per side (per unit length for the L-shape)
  int polygon_sides = 6;  // fan-polygon
  std::uint64_t seed = 0; // agglomerated
  int splits = 1;       // split-facet pieces per edge
  DomainShape domain;
  LabelRule labels = all_dirichlet();
};

namespace detail {

class GridBuilder {
public:
  explicit GridBuilder(MeshData& d) : d_(d) {}
  int vertex(const Point& p) {
    auto key = std::make_pair(std::llround(p.x * 1e9), std::llround(p.y * 1e9));
    auto it = ids_.find(key);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(d_.vertices.size());
    d_.vertices.push_back(p);
    ids_[key] = id;
    return id;
  }

private:
  MeshData& d_;
  std::map<std::pair<long long, long long>, int> ids_;
};

/// Cells (i, j) of the structured grid covering the domain.
inline std::vector<std::pair<int, int>> grid_cells(const DomainShape& d, int n, int& nx, int& ny) {
  nx = d.l_shape ? 2 * n : n;
  ny = nx;
  std::vector<std::pair<int, int>> cells;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (d.l_shape && i >= nx / 2 && j >= ny / 2) continue;
      cells.push_back({i, j});
    }
  return cells;
}

inline void label_boundary(MeshData& d, const LabelRule& rule) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& c : d.cells)
    for (std::size_t i = 0; i < c.size(); ++i) {
      auto key = std::minmax(c[i], c[(i + 1) % c.size()]);
      uses[{key.first, key.second}]++;
    }
  for (const auto& c : d.cells)
    for (std::size_t i = 0; i < c.size(); ++i) {
      int a = c[i], b = c[(i + 1) % c.size()];
      auto key = std::minmax(a, b);
      if (uses[{key.first, key.second}] == 1) d.boundary.push_back({a, b, rule(d.vertices[a], d.vertices[b])});
    }
}

/// Boundary loop of a union of counterclockwise triangles; empty if the union is not a simple polygon.
inline std::vector<int> union_loop(const std::vector<std::array<int, 3>>& tris) {
  std::set<std::pair<int, int>> directed;
  for (const auto& t : tris)
    for (int i = 0; i < 3; ++i) directed.insert({t[i], t[(i + 1) % 3]});
  std::map<int, int> next;
  std::size_t count = 0;
  for (auto [a, b] : directed) {
    if (directed.count({b, a})) continue;
    if (next.count(a)) return {};  // pinched vertex
    next[a] = b;
    ++count;
  }
  if (count == 0) return {};
  std::vector<int> loop;
  int start = next.begin()->first, v = start;
  do {
    loop.push_back(v);
    auto it = next.find(v);
    if (it == next.end()) return {};
    v = it->second;
  } while (v != start && loop.size() <= count);
  if (loop.size() != count) return {};  // several loops (hole) or broken chain
  return loop;
}

inline bool star_shaped_about_centroid(const std::vector<Point>& loop) {
  try {
    subtriangulate(loop);
    // Require a margin so that the fan stays well shaped.
    double area = polygon_signed_area(loop);
    Point c = polygon_centroid(loop);
    for (std::size_t i = 0; i < loop.size(); ++i)
      if (orient(c, loop[i], loop[(i + 1) % loop.size()]) < 1e-3 * area) return false;
    return true;
  } catch (const MeshError&) {
    return false;
  }
}

}  // namespace detail

inline MeshData generate_mesh_data(const GeneratorSpec& spec) {
  POLYSP_REQUIRE(spec.resolution >= 1, DomainError, "generate_mesh: resolution < 1");
  MeshData d;
  detail::GridBuilder gb(d);
  const DomainShape& D = spec.domain;
  int nx = 0, ny = 0;
  auto cells = detail::grid_cells(D, spec.resolution, nx, ny);
  auto gp = [&](double i, double j) {
    return Point{D.x0 + (D.x1 - D.x0) * i / nx, D.y0 + (D.y1 - D.y0) * j / ny};
  };
  switch (spec.kind) {
    case GeneratorKind::StructuredQuads:
      for (auto [i, j] : cells)
        d.cells.push_back({gb.vertex(gp(i, j)), gb.vertex(gp(i + 1, j)), gb.vertex(gp(i + 1, j + 1)), gb.vertex(gp(i, j + 1))});
      break;
    case GeneratorKind::StructuredTriangles:
      for (auto [i, j] : cells) {
        int a = gb.vertex(gp(i, j)), b = gb.vertex(gp(i + 1, j)), c = gb.vertex(gp(i + 1, j + 1)), e = gb.vertex(gp(i, j + 1));
        d.cells.push_back({a, b, c});
        d.cells.push_back({a, c, e});
      }
      break;
    case GeneratorKind::FanPolygon: {
      POLYSP_REQUIRE(spec.polygon_sides >= 3, DomainError, "generate_mesh: fan-polygon needs n >= 3");
      std::vector<int> loop;
      for (int i = 0; i < spec.polygon_sides; ++i) {
        double t = 2.0 * std::numbers::pi * i / spec.polygon_sides;
        loop.push_back(gb.vertex({std::cos(t), std::sin(t)}));
      }
      d.cells.push_back(loop);
      break;
    }
    case GeneratorKind::SplitFacet: {
      POLYSP_REQUIRE(spec.splits >= 1, DomainError, "generate_mesh: split-facet needs k >= 1");
      const int k = spec.splits;
      for (auto [i, j] : cells) {
        std::vector<int> loop;
        for (int s = 0; s < k; ++s) loop.push_back(gb.vertex(gp(i + double(s) / k, j)));
        for (int s = 0; s < k; ++s) loop.push_back(gb.vertex(gp(i + 1, j + double(s) / k)));
        for (int s = 0; s < k; ++s) loop.push_back(gb.vertex(gp(i + 1 - double(s) / k, j + 1)));
        for (int s = 0; s < k; ++s) loop.push_back(gb.vertex(gp(i, j + 1 - double(s) / k)));
        d.cells.push_back(loop);
      }
      break;
    }
    case GeneratorKind::Agglomerated: {
      std::vector<std::array<int, 3>> tris;
      for (auto [i, j] : cells) {
        int a = gb.vertex(gp(i, j)), b = gb.vertex(gp(i + 1, j)), c = gb.vertex(gp(i + 1, j + 1)), e = gb.vertex(gp(i, j + 1));
        tris.push_back({a, b, c});
        tris.push_back({a, c, e});
      }
      // Triangle adjacency through shared edges.
      std::map<std::pair<int, int>, std::vector<int>> edge_tris;
      for (std::size_t t = 0; t < tris.size(); ++t)
        for (int i = 0; i < 3; ++i) {
          auto key = std::minmax(tris[t][i], tris[t][(i + 1) % 3]);
          edge_tris[{key.first, key.second}].push_back(static_cast<int>(t));
        }
      std::vector<std::vector<int>> nbr(tris.size());
      for (auto& [e, ts] : edge_tris)
        if (ts.size() == 2) {
          nbr[ts[0]].push_back(ts[1]);
          nbr[ts[1]].push_back(ts[0]);
        }
      Rng rng(spec.seed);
      std::vector<int> order(tris.size());
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order.begin(), order.end());
      std::vector<int> owner(tris.size(), -1);
      for (int seed_tri : order) {
        if (owner[seed_tri] >= 0) continue;
        std::vector<int> cluster{seed_tri};
        owner[seed_tri] = seed_tri;
        const std::size_t target = 2 + rng.index(3);  // 2..4 triangles
        bool grown = true;
        while (cluster.size() < target && grown) {
          grown = false;
          std::vector<int> cand;
          for (int t : cluster)
            for (int u : nbr[t])
              if (owner[u] < 0 && std::find(cand.begin(), cand.end(), u) == cand.end()) cand.push_back(u);
          rng.shuffle(cand.begin(), cand.end());
          for (int u : cand) {
            std::vector<std::array<int, 3>> trial;
            for (int t : cluster) trial.push_back(tris[t]);
            trial.push_back(tris[u]);
            auto loop = detail::union_loop(trial);
            if (loop.size() < 3 || loop.size() > 8) continue;
            std::vector<Point> pts;
            for (int v : loop) pts.push_back(d.vertices[v]);
            if (!detail::star_shaped_about_centroid(pts)) continue;
            cluster.push_back(u);
            owner[u] = seed_tri;
            grown = true;
            break;
          }
        }
        std::vector<std::array<int, 3>> members;
        for (int t : cluster) members.push_back(tris[t]);
        d.cells.push_back(detail::union_loop(members));
      }
      break;
    }
  }
  detail::label_boundary(d, spec.labels);
  return d;
}

inline Mesh generate_mesh(const GeneratorSpec& spec) { return Mesh::build(generate_mesh_data(spec)); }

/// Convenience constructors.
inline GeneratorSpec structured_quads(int n, DomainShape d = {}, LabelRule labels = all_dirichlet()) {
  GeneratorSpec s;
  s.kind = GeneratorKind::StructuredQuads;
  s.resolution = n;
  s.domain = d;
  s.labels = std::move(labels);
  return s;
}
inline GeneratorSpec structured_triangles(int n, DomainShape d = {}, LabelRule labels = all_dirichlet()) {
  GeneratorSpec s = structured_quads(n, d, std::move(labels));
  s.kind = GeneratorKind::StructuredTriangles;
  return s;
}
inline GeneratorSpec fan_polygon(int sides, LabelRule labels = all_dirichlet()) {
  GeneratorSpec s;
  s.kind = GeneratorKind::FanPolygon;
  s.polygon_sides = sides;
  s.labels = std::move(labels);
  return s;
}
inline GeneratorSpec agglomerated(std::uint64_t seed, int n = 4, DomainShape d = {}, LabelRule labels = all_dirichlet()) {
  GeneratorSpec s = structured_quads(n, d, std::move(labels));
  s.kind = GeneratorKind::Agglomerated;
  s.seed = seed;
  return s;
}
inline GeneratorSpec split_facet(int k, int n = 1, DomainShape d = {}, LabelRule labels = all_dirichlet()) {
  GeneratorSpec s = structured_quads(n, d, std::move(labels));
  s.kind = GeneratorKind::SplitFacet;
  s.splits = k;
  return s;
}

}  // namespace polysp
