#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <map>
#include <memory>
#include <optional>

#include "polysp/brokenfn/norms.hpp"
#include "polysp/core/quadrature.hpp"
#include "polysp/core/random.hpp"

namespace polysp {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class PressureSpace { ContinuousP1, PiecewiseConstant };

/// Velocity boundary condition: zero on the whole boundary, or zero on the Neumann facets only
/// (free on the Dirichlet facets).
enum class VelocityBC { FullDirichlet, ZeroOnNeumann };

inline std::string to_string(VelocityBC bc) { return bc == VelocityBC::FullDirichlet ? "full-dirichlet" : "zero-on-neumann"; }

struct StokesOptions {
  PressureSpace pressure = PressureSpace::ContinuousP1;
  int velocity_refinement = 0;  // red refinements of the triangulation carrying the velocity
  double mass_scale = 1.0;      // multiplies the pressure mass matrix and the pressure load
};

namespace detail {

/// Barycentric coordinates of a triangle as affine functions.
struct Barycentric {
  std::array<Point, 3> x;
  double det = 0.0;
  std::array<Point, 3> grad;

  explicit Barycentric(const std::array<Point, 3>& v) : x(v) {
    det = orient(v[0], v[1], v[2]);
    for (int i = 0; i < 3; ++i) {
      const Point& b = v[(i + 1) % 3];
      const Point& c = v[(i + 2) % 3];
      grad[i] = Point{b.y - c.y, c.x - b.x} / det;
    }
  }
  double operator()(int i, const Point& p) const { return orient(p, x[(i + 1) % 3], x[(i + 2) % 3]) / det; }
  double area() const { return 0.5 * std::abs(det); }
};

inline std::pair<int, int> edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace detail

/// Taylor–Hood type discretization: continuous quadratic velocities on the (optionally refined)
/// triangulation, continuous linear or piecewise-constant pressures on the input triangulation.
class StokesDiscretization {
public:
  struct VelocityTriangle {
    std::array<int, 6> nodes;  // three vertices, then the midpoints of edges 01, 12, 20
    int parent = -1;           // element of the input mesh containing it
  };

  explicit StokesDiscretization(std::shared_ptr<const Mesh> mesh, StokesOptions opt = {}) : mesh_(std::move(mesh)), opt_(opt) {
    POLYSP_REQUIRE(mesh_ != nullptr, DomainError, "StokesDiscretization: null mesh");
    POLYSP_REQUIRE(opt_.velocity_refinement >= 0 && opt_.velocity_refinement <= 4, DomainError,
                   "StokesDiscretization: velocity refinement must lie in [0, 4]");
    POLYSP_REQUIRE(opt_.mass_scale > 0.0, DomainError, "StokesDiscretization: mass scale must be positive");
    POLYSP_REQUIRE(mesh_->is_triangular(), MeshError, "Stokes discretization requires a triangular mesh");
    for (const auto& e : mesh_->elements())
      POLYSP_REQUIRE(e.facets.size() == 3, MeshError, "Stokes discretization requires a conforming triangulation (hanging vertex found)");
    build_velocity_mesh();
    assemble();
  }

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const StokesOptions& options() const { return opt_; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_velocity_dofs() const { return 2 * nodes_.size(); }
  std::size_t num_pressure_dofs() const {
    return opt_.pressure == PressureSpace::ContinuousP1 ? mesh_->vertices().size() : mesh_->num_elements();
  }
  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<VelocityTriangle>& velocity_triangles() const { return vtris_; }

  /// Gradient energy (vector Laplacian), divergence B(k, 2i+c) = ∫ q_k ∂_c φ_i, pressure mass.
  const SparseMatrix& A() const { return A_; }
  const SparseMatrix& B() const { return B_; }
  const SparseMatrix& Mp() const { return M_; }

  bool on_dirichlet(std::size_t node) const { return on_d_[node]; }
  bool on_neumann(std::size_t node) const { return on_n_[node]; }
  bool on_boundary(std::size_t node) const { return on_d_[node] || on_n_[node]; }
  bool constrained(std::size_t node, VelocityBC bc) const {
    return bc == VelocityBC::FullDirichlet ? on_boundary(node) : on_n_[node];
  }
  /// True when every boundary node is constrained, so pressures are only defined up to constants.
  bool pressure_modulo_constants(VelocityBC bc) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (on_boundary(i) && !constrained(i, bc)) return false;
    return true;
  }

  std::optional<std::size_t> node_at(const Point& p) const {
    auto it = node_index_.find(key(p));
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Coefficients of the constant pressure 1.
  Eigen::VectorXd constant_pressure() const { return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(num_pressure_dofs())); }

  /// Value at x in element k of the pressure basis function j (zero when j does not touch k).
  double pressure_basis(std::size_t k, std::size_t j, const Point& x) const {
    const auto& e = mesh_->element(k);
    if (opt_.pressure == PressureSpace::PiecewiseConstant) return j == k ? 1.0 : 0.0;
    for (int i = 0; i < 3; ++i)
      if (static_cast<std::size_t>(e.vertices[i]) == j) return coarse_bary_[k](i, x);
    return 0.0;
  }
  /// Pressure degrees of freedom living on element k.
  std::vector<std::size_t> pressure_dofs(std::size_t k) const {
    if (opt_.pressure == PressureSpace::PiecewiseConstant) return {k};
    const auto& v = mesh_->element(k).vertices;
    return {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), static_cast<std::size_t>(v[2])};
  }

  /// Load vector ∫ q_k f (times the mass scale) for a broken polynomial datum on the mesh.
  Eigen::VectorXd pressure_load(const BrokenFunction& f) const {
    check_datum(f);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_pressure_dofs()));
    const QuadratureRule& rule = triangle_rule(f.degree() + 1);
    for (std::size_t k = 0; k < mesh_->num_elements(); ++k) {
      const auto& loop = mesh_->element(k).loop;
      for (std::size_t j : pressure_dofs(k))
        F(static_cast<Eigen::Index>(j)) +=
            integrate_triangle_rule([&](const Point& x) { return pressure_basis(k, j, x) * f(k, x); }, loop[0], loop[1], loop[2], rule);
    }
    return F * opt_.mass_scale;
  }

  /// Pressure coefficients as a broken polynomial on the mesh.
  BrokenFunction pressure_function(const Eigen::VectorXd& q) const {
    BrokenFunction f(mesh_, opt_.pressure == PressureSpace::ContinuousP1 ? 1 : 0);
    for (std::size_t k = 0; k < mesh_->num_elements(); ++k) {
      const auto& e = mesh_->element(k);
      if (opt_.pressure == PressureSpace::PiecewiseConstant) {
        f.set_local(k, Poly2::constant(q(static_cast<Eigen::Index>(k))));
        continue;
      }
      // Σ q_j λ_j is affine: value at the centroid plus gradient times h ξ.
      double c0 = 0.0;
      Point g{0.0, 0.0};
      for (int i = 0; i < 3; ++i) {
        const double qi = q(e.vertices[i]);
        c0 += qi * coarse_bary_[k](i, e.centroid);
        g = g + qi * coarse_bary_[k].grad[i];
      }
      f.set_local(k, Poly2::affine(c0, e.diameter * g.x, e.diameter * g.y));
    }
    return f;
  }

  /// ‖Π_h g‖ for the pressure functional r (coefficients M^{-1} r), in the scaled mass norm.
  double functional_norm(const Eigen::VectorXd& r) const { return std::sqrt(std::max(0.0, r.dot(mass_solver_.solve(r)))); }
  double pressure_norm(const Eigen::VectorXd& q) const { return std::sqrt(std::max(0.0, q.dot(M_ * q))); }

  void check_datum(const BrokenFunction& f) const {
    POLYSP_REQUIRE(f.mesh_ptr() == mesh_ || mesh_hash(f.mesh()) == mesh_hash(*mesh_), DomainError,
                   "datum lives on a different mesh");
  }

private:
  std::pair<long long, long long> key(const Point& p) const {
    const double s = 1.0 / (64.0 * mesh_->tolerance() + 1e-300);
    return {std::llround(p.x * s), std::llround(p.y * s)};
  }

  void build_velocity_mesh() {
    std::vector<Point> verts = mesh_->vertices();
    std::vector<std::array<int, 3>> tris;
    std::vector<int> parent;
    std::map<std::pair<int, int>, FacetLabel> bnd;
    for (std::size_t k = 0; k < mesh_->num_elements(); ++k) {
      const auto& v = mesh_->element(k).vertices;
      tris.push_back({v[0], v[1], v[2]});
      parent.push_back(static_cast<int>(k));
      coarse_bary_.emplace_back(std::array<Point, 3>{verts[v[0]], verts[v[1]], verts[v[2]]});
    }
    for (const auto& F : mesh_->facets())
      if (!F.is_interior()) bnd[detail::edge_key(F.v0, F.v1)] = F.label;
    for (int r = 0; r < opt_.velocity_refinement; ++r) {
      std::map<std::pair<int, int>, int> mid;
      auto midpoint = [&](int a, int b) {
        auto k = detail::edge_key(a, b);
        auto it = mid.find(k);
        if (it != mid.end()) return it->second;
        verts.push_back(0.5 * (verts[a] + verts[b]));
        return mid[k] = static_cast<int>(verts.size()) - 1;
      };
      std::vector<std::array<int, 3>> nt;
      std::vector<int> np;
      for (std::size_t t = 0; t < tris.size(); ++t) {
        auto [a, b, c] = tris[t];
        int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
        for (auto ch : {std::array<int, 3>{a, ab, ca}, {ab, b, bc}, {ca, bc, c}, {ab, bc, ca}}) {
          nt.push_back(ch);
          np.push_back(parent[t]);
        }
      }
      std::map<std::pair<int, int>, FacetLabel> nb;
      for (auto& [e, l] : bnd) {
        int m = mid.at(e);
        nb[detail::edge_key(e.first, m)] = l;
        nb[detail::edge_key(m, e.second)] = l;
      }
      tris = std::move(nt);
      parent = std::move(np);
      bnd = std::move(nb);
    }
    // Quadratic nodes: vertices, then edge midpoints.
    nodes_ = verts;
    std::map<std::pair<int, int>, int> edge_node;
    auto enode = [&](int a, int b) {
      auto k = detail::edge_key(a, b);
      auto it = edge_node.find(k);
      if (it != edge_node.end()) return it->second;
      nodes_.push_back(0.5 * (verts[a] + verts[b]));
      return edge_node[k] = static_cast<int>(nodes_.size()) - 1;
    };
    for (std::size_t t = 0; t < tris.size(); ++t) {
      auto [a, b, c] = tris[t];
      vtris_.push_back({{a, b, c, enode(a, b), enode(b, c), enode(c, a)}, parent[t]});
    }
    on_d_.assign(nodes_.size(), false);
    on_n_.assign(nodes_.size(), false);
    for (auto& [e, l] : bnd) {
      auto& flag = l == FacetLabel::Neumann ? on_n_ : on_d_;
      flag[e.first] = flag[e.second] = true;
      flag[edge_node.at(e)] = true;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) node_index_[key(nodes_[i])] = i;
  }

  void assemble() {
    const QuadratureRule& rule = triangle_rule(2);
    std::vector<Eigen::Triplet<double>> ta, tb, tm;
    for (const auto& vt : vtris_) {
      detail::Barycentric L({nodes_[vt.nodes[0]], nodes_[vt.nodes[1]], nodes_[vt.nodes[2]]});
      const double area = L.area();
      const auto k = static_cast<std::size_t>(vt.parent);
      const auto pd = pressure_dofs(k);
      for (std::size_t qi = 0; qi < rule.nodes.size(); ++qi) {
        const auto& l = rule.nodes[qi];
        const double w = rule.weights[qi] * area;
        const Point x = barycentric_point(l, L.x[0], L.x[1], L.x[2]);
        std::array<Point, 6> g;
        for (int i = 0; i < 3; ++i) g[i] = (4.0 * l[i] - 1.0) * L.grad[i];
        for (int i = 0; i < 3; ++i) {
          int j = (i + 1) % 3;
          g[3 + i] = 4.0 * (l[i] * L.grad[j] + l[j] * L.grad[i]);
        }
        for (int a = 0; a < 6; ++a) {
          for (int b = 0; b < 6; ++b) {
            const double v = w * dot(g[a], g[b]);
            for (int c = 0; c < 2; ++c) ta.emplace_back(2 * vt.nodes[a] + c, 2 * vt.nodes[b] + c, v);
          }
          for (std::size_t j : pd) {
            const double q = pressure_basis(k, j, x);
            tb.emplace_back(static_cast<int>(j), 2 * vt.nodes[a], w * q * g[a].x);
            tb.emplace_back(static_cast<int>(j), 2 * vt.nodes[a] + 1, w * q * g[a].y);
          }
        }
      }
    }
    for (std::size_t k = 0; k < mesh_->num_elements(); ++k) {
      const auto& loop = mesh_->element(k).loop;
      for (std::size_t i : pressure_dofs(k))
        for (std::size_t j : pressure_dofs(k))
          tm.emplace_back(static_cast<int>(i), static_cast<int>(j),
                          opt_.mass_scale * integrate_triangle_rule([&](const Point& x) { return pressure_basis(k, i, x) * pressure_basis(k, j, x); },
                                                                    loop[0], loop[1], loop[2], rule));
    }
    const auto nv = static_cast<Eigen::Index>(num_velocity_dofs()), np = static_cast<Eigen::Index>(num_pressure_dofs());
    A_.resize(nv, nv);
    A_.setFromTriplets(ta.begin(), ta.end());
    B_.resize(np, nv);
    B_.setFromTriplets(tb.begin(), tb.end());
    B_.prune(0.0);
    M_.resize(np, np);
    M_.setFromTriplets(tm.begin(), tm.end());
    B_ *= opt_.mass_scale;
    mass_solver_.compute(M_);
    POLYSP_REQUIRE(mass_solver_.info() == Eigen::Success, SolverError, "singular pressure mass matrix");
  }

  std::shared_ptr<const Mesh> mesh_;
  StokesOptions opt_;
  std::vector<Point> nodes_;
  std::vector<VelocityTriangle> vtris_;
  std::vector<detail::Barycentric> coarse_bary_;
  std::vector<bool> on_d_, on_n_;
  std::map<std::pair<long long, long long>, std::size_t> node_index_;
  SparseMatrix A_, B_, M_;
  Eigen::SimplicialLDLT<SparseMatrix> mass_solver_;
};

/// Outcome of a discrete right-inverse of the divergence.
struct RightInverseResult {
  Eigen::VectorXd velocity;  // 2 values per quadratic node (x, y)
  Eigen::VectorXd multiplier;
  double seminorm = 0.0;     // |v|_{W^{1,2}}
  double datum_norm = 0.0;   // ‖f‖_{L²} in the scaled mass norm
  double ratio = 0.0;        // seminorm / datum_norm, 0 for f = 0
  double residual = 0.0;     // ‖Π_h div v - Π_h f‖_{L²}
  double boundary_trace = 0.0;  // max |v| over the constrained boundary nodes
};

/// Factorized saddle-point system of min ½|v|² subject to ∫ q div v = F(q) for every discrete pressure q.
class RightInverseSolver {
public:
  RightInverseSolver(const StokesDiscretization& d, VelocityBC bc) : d_(d), bc_(bc) {
    free_of_.assign(d.num_velocity_dofs(), -1);
    for (std::size_t i = 0; i < d.num_nodes(); ++i)
      if (!d.constrained(i, bc))
        for (int c = 0; c < 2; ++c) {
          free_of_[2 * i + c] = static_cast<int>(free_.size());
          free_.push_back(static_cast<int>(2 * i + c));
        }
    POLYSP_REQUIRE(!free_.empty(), SolverError, "singular system: no free velocity degrees of freedom");
    modulo_constants_ = d.pressure_modulo_constants(bc);
    const auto nf = static_cast<Eigen::Index>(free_.size()), np = static_cast<Eigen::Index>(d.num_pressure_dofs());
    const Eigen::Index n = nf + np + (modulo_constants_ ? 1 : 0);
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < d.A().outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(d.A(), k); it; ++it) {
        int r = free_of_[it.row()], c = free_of_[it.col()];
        if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
      }
    for (int k = 0; k < d.B().outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(d.B(), k); it; ++it) {
        int c = free_of_[it.col()];
        if (c < 0) continue;
        t.emplace_back(static_cast<int>(nf + it.row()), c, it.value());
        t.emplace_back(c, static_cast<int>(nf + it.row()), it.value());
      }
    if (modulo_constants_) {
      mass_of_one_ = d.Mp() * d.constant_pressure();
      for (Eigen::Index j = 0; j < np; ++j) {
        t.emplace_back(static_cast<int>(nf + j), static_cast<int>(n - 1), mass_of_one_(j));
        t.emplace_back(static_cast<int>(n - 1), static_cast<int>(nf + j), mass_of_one_(j));
      }
    }
    K_.resize(n, n);
    K_.setFromTriplets(t.begin(), t.end());
    K_.makeCompressed();
    lu_.analyzePattern(K_);
    lu_.factorize(K_);
    POLYSP_REQUIRE(lu_.info() == Eigen::Success, SolverError, "singular system: saddle-point factorization failed");
  }

  VelocityBC bc() const { return bc_; }
  bool modulo_constants() const { return modulo_constants_; }
  const std::vector<int>& free_dofs() const { return free_; }
  const StokesDiscretization& discretization() const { return d_; }

  /// Minimum-energy velocity and multiplier λ (A v + Bᵀ λ = 0) for the pressure functional F.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> solve(const Eigen::VectorXd& F) const {
    const auto nf = static_cast<Eigen::Index>(free_.size()), np = static_cast<Eigen::Index>(d_.num_pressure_dofs());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K_.rows());
    rhs.segment(nf, np) = F;
    Eigen::VectorXd x = lu_.solve(rhs);
    const double rn = rhs.norm();
    if (rn > 0.0) {
      const double res = (K_ * x - rhs).norm() / rn;
      POLYSP_REQUIRE(std::isfinite(res) && res <= 1e-8, SolverError,
                     "singular system: saddle-point residual " + std::to_string(res));
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_.num_velocity_dofs()));
    for (Eigen::Index i = 0; i < nf; ++i) v(free_[static_cast<std::size_t>(i)]) = x(i);
    return {v, x.segment(nf, np)};
  }

  /// Subtract the mass-weighted mean when pressures are taken modulo constants.
  Eigen::VectorXd project_mean_zero(const Eigen::VectorXd& q) const {
    if (!modulo_constants_) return q;
    return q - d_.constant_pressure() * (mass_of_one_.dot(q) / mass_of_one_.sum());
  }

private:
  const StokesDiscretization& d_;
  VelocityBC bc_;
  std::vector<int> free_of_, free_;
  bool modulo_constants_ = false;
  Eigen::VectorXd mass_of_one_;
  SparseMatrix K_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

namespace detail {

inline RightInverseResult finish_right_inverse(const StokesDiscretization& d, VelocityBC bc, Eigen::VectorXd v,
                                               Eigen::VectorXd lambda, const Eigen::VectorXd& F, double datum_norm) {
  RightInverseResult r;
  r.seminorm = std::sqrt(std::max(0.0, v.dot(d.A() * v)));
  r.datum_norm = datum_norm;
  r.ratio = datum_norm > 0.0 ? r.seminorm / datum_norm : 0.0;
  r.residual = d.functional_norm(d.B() * v - F);
  for (std::size_t i = 0; i < d.num_nodes(); ++i)
    if (d.constrained(i, bc)) r.boundary_trace = std::max(r.boundary_trace, std::hypot(v(2 * i), v(2 * i + 1)));
  r.velocity = std::move(v);
  r.multiplier = std::move(lambda);
  return r;
}

inline void check_compatible(const RightInverseSolver& s, const Eigen::VectorXd& F, double datum_norm, double area) {
  if (!s.modulo_constants()) return;
  const double mean = std::abs(F.sum());
  POLYSP_REQUIRE(mean <= 1e-10 * std::max(datum_norm * std::sqrt(area), 1e-300) || mean <= 1e-14, DomainError,
                 "datum must have zero mean when the whole boundary is constrained");
}

}  // namespace detail

/// Minimum |v|_{W^{1,2}} field with weak divergence f against every discrete pressure.
inline RightInverseResult min_energy_right_inverse(const RightInverseSolver& s, const BrokenFunction& f) {
  const auto& d = s.discretization();
  const Eigen::VectorXd F = d.pressure_load(f);
  const double norm = std::sqrt(d.options().mass_scale) * lq_norm(f, 2.0).value;
  detail::check_compatible(s, F, norm, d.mesh().area());
  auto [v, lambda] = s.solve(F);
  return detail::finish_right_inverse(d, s.bc(), std::move(v), std::move(lambda), F, norm);
}

inline RightInverseResult min_energy_right_inverse(const StokesDiscretization& d, const BrokenFunction& f, VelocityBC bc) {
  return min_energy_right_inverse(RightInverseSolver(d, bc), f);
}

/// Same for a pressure-space datum given by its coefficients.
inline RightInverseResult min_energy_right_inverse(const RightInverseSolver& s, const Eigen::VectorXd& q) {
  const auto& d = s.discretization();
  const Eigen::VectorXd F = d.Mp() * q;
  const double norm = d.pressure_norm(q);
  detail::check_compatible(s, F, norm, d.mesh().area());
  auto [v, lambda] = s.solve(F);
  return detail::finish_right_inverse(d, s.bc(), std::move(v), std::move(lambda), F, norm);
}

struct InfSupResult {
  double beta = 0.0;
  Eigen::VectorXd eigenpressure;  // unit mass norm
  Eigen::VectorXd eigenvalues;    // β² spectrum, ascending
};

namespace detail {

/// Columns spanning {q : mᵀ q = 0}.
inline Eigen::MatrixXd orthogonal_complement(const Eigen::VectorXd& m) {
  const Eigen::MatrixXd col = m;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(col);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m.size(), m.size());
  return Q.rightCols(m.size() - 1);
}

}  // namespace detail

/// β_h² = smallest eigenvalue of B A^{-1} Bᵀ q = λ M_p q (on mean-zero pressures when the whole boundary
/// is constrained), by a dense generalized symmetric eigensolve with Cholesky reduction.
inline InfSupResult infsup_constant(const StokesDiscretization& d, VelocityBC bc) {
  std::vector<int> free;
  for (std::size_t i = 0; i < d.num_nodes(); ++i)
    if (!d.constrained(i, bc)) {
      free.push_back(static_cast<int>(2 * i));
      free.push_back(static_cast<int>(2 * i + 1));
    }
  POLYSP_REQUIRE(!free.empty(), SolverError, "singular system: no free velocity degrees of freedom");
  const auto nf = static_cast<Eigen::Index>(free.size()), np = static_cast<Eigen::Index>(d.num_pressure_dofs());
  SparseMatrix P(d.num_velocity_dofs(), nf);
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < nf; ++i) t.emplace_back(free[static_cast<std::size_t>(i)], static_cast<int>(i), 1.0);
  P.setFromTriplets(t.begin(), t.end());
  const SparseMatrix Aff = P.transpose() * d.A() * P;
  const SparseMatrix Bf = d.B() * P;
  Eigen::SimplicialLLT<SparseMatrix> llt(Aff);
  POLYSP_REQUIRE(llt.info() == Eigen::Success, SolverError, "singular system: energy matrix not positive definite");
  const Eigen::MatrixXd X = llt.solve(Eigen::MatrixXd(Bf.transpose()));
  Eigen::MatrixXd S = Bf * X;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::MatrixXd M(d.Mp());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(np, np);
  if (d.pressure_modulo_constants(bc)) Q = detail::orthogonal_complement(M * d.constant_pressure());
  POLYSP_REQUIRE(Q.cols() > 0, SolverError, "singular system: no mean-zero pressures");
  Eigen::MatrixXd Sz = Q.transpose() * S * Q, Mz = Q.transpose() * M * Q;
  Sz = 0.5 * (Sz + Sz.transpose()).eval();
  Mz = 0.5 * (Mz + Mz.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Sz, Mz);
  POLYSP_REQUIRE(es.info() == Eigen::Success, SolverError, "inf-sup eigensolver failed");
  InfSupResult r;
  r.eigenvalues = es.eigenvalues();
  const double lmin = r.eigenvalues(0), lmax = r.eigenvalues(r.eigenvalues.size() - 1);
  POLYSP_REQUIRE(lmin > 1e-20 * std::max(lmax, 1e-300), SolverError, "singular system: inf-sup constant vanishes");
  r.beta = std::sqrt(lmin);
  r.eigenpressure = Q * es.eigenvectors().col(0);
  r.eigenpressure /= d.pressure_norm(r.eigenpressure);
  return r;
}

struct IdentityOptions {
  int block = 8;
  double tolerance = 1e-10;
  int max_iterations = 500;
  std::uint64_t seed = 1;
};

struct IdentityReport {
  double beta = 0.0;
  double c_ba = 0.0;  // sup_f |v(f)|_{W^{1,2}} / ‖f‖_{L²}
  double gap = 0.0;   // |β_h C_BA,h - 1|
  int iterations = 0;
};

/// C_BA,h by block power iteration on f -> S^{-1} M f, applied through the saddle-point solver
/// (self-adjoint in the mass inner product, largest eigenvalue C_BA,h²).
inline double sup_stability_ratio(const RightInverseSolver& s, const IdentityOptions& opt, int* iterations = nullptr) {
  const auto& d = s.discretization();
  const SparseMatrix& M = d.Mp();
  const auto np = static_cast<Eigen::Index>(d.num_pressure_dofs());
  const Eigen::Index dim = np - (s.modulo_constants() ? 1 : 0);
  POLYSP_REQUIRE(dim > 0, SolverError, "singular system: no admissible pressures");
  const Eigen::Index b = std::min<Eigen::Index>(opt.block, dim);
  Rng rng(opt.seed);
  Eigen::MatrixXd F(np, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < np; ++i) F(i, j) = rng.uniform(-1.0, 1.0);
    F.col(j) = s.project_mean_zero(F.col(j));
  }
  auto orthonormalize = [&](const Eigen::MatrixXd& G) {
    Eigen::MatrixXd W = G.transpose() * (M * G);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (W + W.transpose()));
    const double top = es.eigenvalues().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < W.rows(); ++j)
      if (es.eigenvalues()(j) > 1e-13 * top) keep.push_back(j);
    Eigen::MatrixXd out(G.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
      out.col(static_cast<Eigen::Index>(j)) = G * es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()(keep[j]));
    return out;
  };
  F = orthonormalize(F);
  double theta = 0.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::MatrixXd G(np, F.cols());
    for (Eigen::Index j = 0; j < F.cols(); ++j) G.col(j) = -s.solve(M * F.col(j)).second;
    Eigen::MatrixXd H = F.transpose() * (M * G);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    const Eigen::Index top = es.eigenvalues().size() - 1;
    theta = es.eigenvalues()(top);
    const Eigen::VectorXd y = F * es.eigenvectors().col(top), Ty = G * es.eigenvectors().col(top);
    const Eigen::VectorXd r = Ty - theta * y;
    const double res = std::sqrt(std::max(0.0, r.dot(M * r))) / std::abs(theta);
    if (iterations) *iterations = it;
    if (res <= opt.tolerance) return std::sqrt(theta);
    F = orthonormalize(G * es.eigenvectors());
    for (Eigen::Index j = 0; j < F.cols(); ++j) F.col(j) = s.project_mean_zero(F.col(j));
  }
  throw SolverError("power iteration stagnated after " + std::to_string(opt.max_iterations) + " iterations");
}

/// β_h from the eigensolve and C_BA,h from the right-inverse solver; at p = 2 their product is 1.
inline IdentityReport identity_check(const StokesDiscretization& d, VelocityBC bc, const IdentityOptions& opt = {}) {
  IdentityReport r;
  r.beta = infsup_constant(d, bc).beta;
  RightInverseSolver s(d, bc);
  r.c_ba = sup_stability_ratio(s, opt, &r.iterations);
  r.gap = std::abs(r.beta * r.c_ba - 1.0);
  return r;
}

}  // namespace polysp
