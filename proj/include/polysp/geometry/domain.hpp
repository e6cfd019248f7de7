#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <vector>

#include "polysp/geometry/mesh.hpp"

namespace polysp {

/// A maximal straight piece of the domain boundary (a side Γ_j of the polygon).
struct BoundarySide {
  Point a, b;
  std::vector<int> facets;
  double length() const { return distance(a, b); }
};

struct DomainGeometry {
  double diameter = 0.0;    // h_Ω
  double rho = 0.0;         // radius of an inscribed ball w.r.t. which Ω is star-shaped (lower bound)
  Point rho_center;
  bool rho_approximate = true;
  double rho_gamma = 0.0;   // ρ_Γ
  double c_gamma = 0.9;     // C_Γ
  bool convex = false;
  double area = 0.0;        // |Ω|
  std::vector<std::vector<BoundarySide>> loops;  // outer loop counterclockwise, holes clockwise
};

/// Boundary facets chained into closed loops, oriented with the domain on the left.
inline std::vector<std::vector<int>> boundary_loops(const Mesh& mesh) {
  std::multimap<int, int> from;  // start vertex -> facet
  for (std::size_t f = 0; f < mesh.num_facets(); ++f)
    if (!mesh.facet(f).is_interior()) from.insert({mesh.facet(f).v0, static_cast<int>(f)});
  std::vector<bool> used(mesh.num_facets(), false);
  std::vector<std::vector<int>> loops;
  for (auto [v, f0] : from) {
    if (used[f0]) continue;
    std::vector<int> loop;
    int f = f0;
    while (f >= 0 && !used[f]) {
      used[f] = true;
      loop.push_back(f);
      int next = -1;
      auto range = from.equal_range(mesh.facet(f).v1);
      for (auto it = range.first; it != range.second; ++it)
        if (!used[it->second]) {
          next = it->second;
          break;
        }
      f = next;
    }
    loops.push_back(loop);
  }
  return loops;
}

namespace detail {

inline std::vector<BoundarySide> merge_sides(const Mesh& mesh, const std::vector<int>& loop) {
  std::vector<BoundarySide> sides;
  for (int f : loop) {
    const Facet& F = mesh.facet(f);
    if (!sides.empty()) {
      BoundarySide& s = sides.back();
      Point d0 = s.b - s.a, d1 = F.b - F.a;
      if (std::abs(cross(d0, d1)) <= 1e-12 * norm(d0) * norm(d1) && dot(d0, d1) > 0) {
        s.b = F.b;
        s.facets.push_back(f);
        continue;
      }
    }
    sides.push_back({F.a, F.b, {f}});
  }
  // Merge the last side into the first when they are collinear.
  if (sides.size() > 1) {
    BoundarySide& first = sides.front();
    BoundarySide& last = sides.back();
    Point d0 = last.b - last.a, d1 = first.b - first.a;
    if (std::abs(cross(d0, d1)) <= 1e-12 * norm(d0) * norm(d1) && dot(d0, d1) > 0) {
      first.a = last.a;
      first.facets.insert(first.facets.begin(), last.facets.begin(), last.facets.end());
      sides.pop_back();
    }
  }
  return sides;
}

}  // namespace detail

/// Diameter, star-shapedness radius, ρ_Γ and convexity of the meshed domain.
inline DomainGeometry domain_geometry(const Mesh& mesh, double c_gamma = 0.9) {
  POLYSP_REQUIRE(c_gamma > 0.0 && c_gamma < 1.0, DomainError, "domain_geometry: C_Gamma must lie in (0,1)");
  DomainGeometry g;
  g.c_gamma = c_gamma;
  g.area = mesh.area();
  POLYSP_REQUIRE(g.area > 0.0, MeshError, "domain_geometry: degenerate (zero-area) domain");
  for (const auto& loop : boundary_loops(mesh)) g.loops.push_back(detail::merge_sides(mesh, loop));

  std::vector<Point> bv;
  for (const auto& loop : g.loops)
    for (const auto& s : loop) bv.push_back(s.a);
  g.diameter = detail::point_set_diameter(bv);

  std::vector<const BoundarySide*> all;
  double min_side = std::numeric_limits<double>::infinity();
  for (const auto& loop : g.loops)
    for (const auto& s : loop) {
      all.push_back(&s);
      min_side = std::min(min_side, s.length());
    }
  g.rho_gamma = c_gamma * 0.5 * min_side;

  g.convex = g.loops.size() == 1;
  if (g.convex) {
    const auto& L = g.loops[0];
    for (std::size_t i = 0; i < L.size(); ++i) {
      const auto& s = L[i];
      const auto& t = L[(i + 1) % L.size()];
      if (cross(s.b - s.a, t.b - t.a) < -1e-12 * s.length() * t.length()) g.convex = false;
    }
  }

  // Largest r such that n_j . (x - a_j) >= r for every side (inward normals): the Chebyshev centre of
  // the kernel. The optimum of this 3-variable linear program is attained where three constraints are
  // active, so all triples of sides are enumerated.
  const std::size_t m = all.size();
  std::vector<Point> nrm(m);
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    Point d = all[i]->b - all[i]->a;
    nrm[i] = Point{-d.y, d.x} / norm(d);
    rhs[i] = dot(nrm[i], all[i]->a);
  }
  auto slack = [&](const Point& x) {
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) r = std::min(r, dot(nrm[i], x) - rhs[i]);
    return r;
  };
  Point centroid{0, 0};
  for (const auto& e : mesh.elements()) centroid += e.centroid * e.area;
  centroid = centroid / g.area;
  double best = slack(centroid);
  Point best_x = centroid;
  const double tol = 1e-12 * g.diameter;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t k = j + 1; k < m; ++k) {
        Eigen::Matrix3d A;
        Eigen::Vector3d b;
        const std::size_t idx[3] = {i, j, k};
        for (int r = 0; r < 3; ++r) {
          A(r, 0) = nrm[idx[r]].x;
          A(r, 1) = nrm[idx[r]].y;
          A(r, 2) = -1.0;
          b(r) = rhs[idx[r]];
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
        if (!lu.isInvertible()) continue;
        Eigen::Vector3d s = lu.solve(b);
        if (!(s(2) > best)) continue;
        Point x{s(0), s(1)};
        if (slack(x) >= s(2) - tol) {
          best = std::min(s(2), slack(x));
          best_x = x;
        }
      }
  g.rho = std::max(0.0, best);
  g.rho_center = best_x;
  return g;
}

}  // namespace polysp
