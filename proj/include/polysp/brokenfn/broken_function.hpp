#pragma once

#include <memory>
#include <vector>

#include "json.hpp"
#include "polysp/core/polynomial.hpp"
#include "polysp/core/power_integrals.hpp"
#include "polysp/geometry/mesh.hpp"
#include "polysp/geometry/mesh_io.hpp"

namespace polysp {

inline constexpr int kMaxBrokenDegree = 6;

/// Piecewise polynomial over a mesh. On element K the polynomial is stored in the scaled
/// coordinates ξ = (x - c_K)/h_K, with c_K the centroid and h_K the diameter.
class BrokenFunction {
public:
  BrokenFunction(std::shared_ptr<const Mesh> mesh, int degree) : mesh_(std::move(mesh)), degree_(degree) {
    POLYSP_REQUIRE(mesh_ != nullptr, DomainError, "BrokenFunction: null mesh");
    POLYSP_REQUIRE(degree >= 0 && degree <= kMaxBrokenDegree, DomainError,
                   "BrokenFunction: degree must lie in [0, " + std::to_string(kMaxBrokenDegree) + "]");
    local_.assign(mesh_->num_elements(), Poly2(degree));
  }

  /// Restriction of a polynomial given in physical coordinates.
  static BrokenFunction from_global(std::shared_ptr<const Mesh> mesh, const Poly2& g) {
    BrokenFunction v(mesh, g.degree());
    for (std::size_t k = 0; k < v.mesh_->num_elements(); ++k) {
      const auto& e = v.mesh_->element(k);
      v.local_[k] = g.affine_substitute(e.centroid.x, e.centroid.y, e.diameter);
    }
    return v;
  }

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  std::size_t dofs_per_element() const { return Poly2::size(degree_); }

  const Poly2& local(std::size_t k) const { return local_.at(k); }
  void set_local(std::size_t k, const Poly2& p) {
    POLYSP_REQUIRE(p.degree() <= degree_, DomainError, "BrokenFunction: local polynomial exceeds the degree");
    local_.at(k) = p.promoted(degree_);
  }
  std::vector<double>& coefficients(std::size_t k) { return local_.at(k).coeffs(); }
  const std::vector<double>& coefficients(std::size_t k) const { return local_.at(k).coeffs(); }

  /// Scaled coordinate of x on element k.
  Point to_local(std::size_t k, const Point& x) const {
    const auto& e = mesh_->element(k);
    return (x - e.centroid) / e.diameter;
  }
  double operator()(std::size_t k, const Point& x) const { return local_.at(k)(to_local(k, x)); }
  /// Physical gradient on element k, as polynomials in the scaled coordinates.
  std::array<Poly2, 2> gradient(std::size_t k) const {
    const double s = 1.0 / mesh_->element(k).diameter;
    return {local_.at(k).dx() * s, local_.at(k).dy() * s};
  }
  /// Trace on facet f from element k, as a polynomial in t ∈ [0,1] along the stored facet direction a -> b.
  Poly1 trace(std::size_t k, std::size_t f) const {
    const auto& F = mesh_->facet(f);
    return local_.at(k).restrict_to(to_local(k, F.a), to_local(k, F.b));
  }

  BrokenFunction operator+(const BrokenFunction& o) const {
    check_same_mesh(o);
    BrokenFunction r(mesh_, std::max(degree_, o.degree_));
    for (std::size_t k = 0; k < local_.size(); ++k) r.local_[k] = local_[k] + o.local_[k];
    return r;
  }
  BrokenFunction operator-(const BrokenFunction& o) const { return *this + o * -1.0; }
  BrokenFunction operator*(double s) const {
    BrokenFunction r = *this;
    for (auto& p : r.local_) p = p * s;
    return r;
  }

  nlohmann::json to_json() const {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& p : local_) c.push_back(p.coeffs());
    return {{"mesh_hash", mesh_hash(*mesh_)}, {"degree", degree_}, {"coefficients", c}};
  }
  static BrokenFunction from_json(std::shared_ptr<const Mesh> mesh, const nlohmann::json& j) {
    try {
      POLYSP_REQUIRE(j.at("mesh_hash").get<std::string>() == mesh_hash(*mesh), DomainError,
                     "broken function was saved for a different mesh");
      BrokenFunction v(mesh, j.at("degree").get<int>());
      const auto& c = j.at("coefficients");
      POLYSP_REQUIRE(c.size() == v.local_.size(), DomainError, "broken function: wrong number of elements");
      for (std::size_t k = 0; k < c.size(); ++k) {
        auto coeffs = c[k].get<std::vector<double>>();
        POLYSP_REQUIRE(coeffs.size() == v.dofs_per_element(), DomainError, "broken function: wrong coefficient count");
        v.local_[k] = Poly2(v.degree_, coeffs);
      }
      return v;
    } catch (const nlohmann::json::exception& e) {
      throw DomainError(std::string("malformed broken function: ") + e.what());
    }
  }

private:
  void check_same_mesh(const BrokenFunction& o) const {
    POLYSP_REQUIRE(mesh_ == o.mesh_, DomainError, "BrokenFunction: operands live on different meshes");
  }

  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  std::vector<Poly2> local_;
};

inline BrokenFunction operator*(double s, const BrokenFunction& v) { return v * s; }

/// Polynomial on a facet in the normalized arclength t ∈ [0,1] (t = 0 at Facet::a).
struct FacetFunction {
  int facet = -1;
  double length = 0.0;
  Poly1 g;

  double operator()(double t) const { return g(t); }
  FacetFunction operator+(const FacetFunction& o) const { return {facet, length, g + o.g}; }
  FacetFunction operator*(double s) const { return {facet, length, g * s}; }
};

/// Signed jump on facet f: v|K1 (n_K1·n_F) + v|K2 (n_K2·n_F), or v|K (n_K·n_F) on the boundary.
inline FacetFunction jump(const BrokenFunction& v, std::size_t f) {
  const Mesh& m = v.mesh();
  POLYSP_REQUIRE(f < m.num_facets(), DomainError, "jump: facet not in mesh");
  const auto& F = m.facet(f);
  FacetFunction out{static_cast<int>(f), F.length, Poly1()};
  for (int side = 0; side < (F.is_interior() ? 2 : 1); ++side) {
    const double sgn = dot(F.element_normals[side], F.normal);
    out.g = out.g + v.trace(F.elements[side], f) * sgn;
  }
  return out;
}

/// Trace of v from element k on facet f.
inline FacetFunction facet_trace(const BrokenFunction& v, std::size_t k, std::size_t f) {
  const auto& F = v.mesh().facet(f);
  POLYSP_REQUIRE(F.side_of(static_cast<int>(k)) >= 0, DomainError, "facet_trace: facet is not on the element");
  return {static_cast<int>(f), F.length, v.trace(k, f)};
}

/// (1/|F|) ∫_F g.
inline double facet_average(const FacetFunction& g) { return g.g.integrate(0.0, 1.0); }

/// The facet function replaced by its average.
inline FacetFunction facet_projection(const FacetFunction& g) { return {g.facet, g.length, Poly1::constant(facet_average(g))}; }

/// ∫_K v, exact.
inline double element_integral(const BrokenFunction& v, std::size_t k) {
  const auto& e = v.mesh().element(k);
  double s = 0.0;
  for (const auto& t : e.sub_triangulation)
    s += integrate_polynomial(v.local(k), v.to_local(k, t.vertices[0]), v.to_local(k, t.vertices[1]),
                              v.to_local(k, t.vertices[2]));
  return s * e.diameter * e.diameter;
}

/// Piecewise-constant function equal to the element means of v.
inline BrokenFunction element_average(const BrokenFunction& v) {
  BrokenFunction r(v.mesh_ptr(), 0);
  for (std::size_t k = 0; k < v.mesh().num_elements(); ++k)
    r.set_local(k, Poly2::constant(element_integral(v, k) / v.mesh().element(k).area));
  return r;
}

}  // namespace polysp
