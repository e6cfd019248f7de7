#pragma once

#include <queue>

#include "polysp/divinv/stokes.hpp"

namespace polysp {

struct PatchReport {
  std::size_t vertex = 0;
  std::size_t elements = 0;
  std::size_t velocity_dofs = 0;
  double mass = 0.0;       // ∫ f φ_ν before the transfer
  double transfer = 0.0;   // mass sent to the parent patch along the spanning tree
  double seminorm = 0.0;   // |v_ν|_{W^{1,2}}
  double datum_norm = 0.0; // ‖f‖_{L²(ω_ν)}
  double ratio = 0.0;      // seminorm / datum_norm
};

struct PouResult {
  std::shared_ptr<const StokesDiscretization> discretization;
  RightInverseResult field;  // Σ_ν v_ν
  std::vector<PatchReport> patches;
  std::size_t simplices = 0;
  bool refined = false;  // the velocity space had to be refined once more for solvable patches
  double max_patch_ratio = 0.0;
};

namespace detail {

struct VertexPatches {
  std::vector<std::vector<std::size_t>> elements;  // ω_ν
  std::vector<int> parent;                         // spanning tree over mesh edges, -1 at the root
  std::vector<std::size_t> order;                  // breadth-first order
};

inline VertexPatches vertex_patches(const Mesh& m) {
  VertexPatches P;
  const std::size_t nv = m.vertices().size();
  P.elements.assign(nv, {});
  std::vector<std::vector<std::size_t>> nbr(nv);
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    const auto& v = m.element(k).vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      P.elements[v[i]].push_back(k);
      nbr[v[i]].push_back(v[(i + 1) % v.size()]);
      nbr[v[(i + 1) % v.size()]].push_back(v[i]);
    }
  }
  P.parent.assign(nv, -2);
  std::size_t root = 0;
  while (root < nv && P.elements[root].empty()) ++root;
  POLYSP_REQUIRE(root < nv, DomainError, "partition of unity: mesh has no vertices in use");
  std::queue<std::size_t> q;
  q.push(root);
  P.parent[root] = -1;
  while (!q.empty()) {
    std::size_t a = q.front();
    q.pop();
    P.order.push_back(a);
    for (std::size_t b : nbr[a])
      if (P.parent[b] == -2) {
        P.parent[b] = static_cast<int>(a);
        q.push(b);
      }
  }
  for (std::size_t v = 0; v < nv; ++v)
    POLYSP_REQUIRE(P.elements[v].empty() || P.parent[v] != -2, DomainError, "partition of unity construction requires a connected mesh");
  return P;
}

inline std::vector<std::size_t> overlap(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  for (std::size_t k : a)
    if (std::find(b.begin(), b.end(), k) != b.end()) out.push_back(k);
  return out;
}

inline bool element_has_vertex(const Mesh& m, std::size_t k, std::size_t v) {
  const auto& vs = m.element(k).vertices;
  return std::find(vs.begin(), vs.end(), static_cast<int>(v)) != vs.end();
}

}  // namespace detail

/// Minimum-energy field supported in the vertex patch ω_ν: velocity nodes strictly inside ω_ν,
/// divergence tested against the pressures living on ω_ν. `load` is a global pressure functional whose
/// restriction to ω_ν has zero sum. Returns a global velocity vector, zero outside ω_ν.
inline Eigen::VectorXd solve_patch(const StokesDiscretization& d, std::size_t vertex, const Eigen::VectorXd& load,
                                   std::size_t* dofs_out = nullptr) {
  const Mesh& m = d.mesh();
  std::vector<char> in_patch(m.num_elements(), 0);
  for (std::size_t k = 0; k < m.num_elements(); ++k) in_patch[k] = detail::element_has_vertex(m, k, vertex);
  // A node is inside ω_ν when all velocity triangles around it belong to ω_ν and it is off ∂Ω.
  std::vector<char> inside(d.num_nodes(), 1), touched(d.num_nodes(), 0);
  for (const auto& t : d.velocity_triangles())
    for (int n : t.nodes) {
      touched[n] = 1;
      if (!in_patch[t.parent]) inside[n] = 0;
    }
  std::vector<int> dofs;
  for (std::size_t i = 0; i < d.num_nodes(); ++i)
    if (inside[i] && touched[i] && !d.on_boundary(i)) {
      dofs.push_back(static_cast<int>(2 * i));
      dofs.push_back(static_cast<int>(2 * i + 1));
    }
  std::vector<std::size_t> pres;
  {
    std::vector<char> seen(d.num_pressure_dofs(), 0);
    for (std::size_t k = 0; k < m.num_elements(); ++k)
      if (in_patch[k])
        for (std::size_t j : d.pressure_dofs(k))
          if (!seen[j]) {
            seen[j] = 1;
            pres.push_back(j);
          }
  }
  if (dofs_out) *dofs_out = dofs.size();
  POLYSP_REQUIRE(!dofs.empty(), SolverError, "singular system: patch of vertex " + std::to_string(vertex) + " has no interior velocity");
  const auto nf = static_cast<Eigen::Index>(dofs.size()), np = static_cast<Eigen::Index>(pres.size());
  const Eigen::Index n = nf + np + 1;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> local(d.num_velocity_dofs(), -1);
  for (Eigen::Index i = 0; i < nf; ++i) local[dofs[static_cast<std::size_t>(i)]] = static_cast<int>(i);
  std::vector<int> plocal(d.num_pressure_dofs(), -1);
  for (Eigen::Index j = 0; j < np; ++j) plocal[pres[static_cast<std::size_t>(j)]] = static_cast<int>(j);
  for (int c = 0; c < d.A().outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(d.A(), c); it; ++it)
      if (local[it.row()] >= 0 && local[it.col()] >= 0) K(local[it.row()], local[it.col()]) = it.value();
  for (int c = 0; c < d.B().outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(d.B(), c); it; ++it)
      if (local[it.col()] >= 0 && plocal[it.row()] >= 0) {
        K(nf + plocal[it.row()], local[it.col()]) = it.value();
        K(local[it.col()], nf + plocal[it.row()]) = it.value();
      }
  // Pressures on the patch are defined up to constants; pin the multiplier's plain sum.
  for (Eigen::Index j = 0; j < np; ++j) K(nf + j, n - 1) = K(n - 1, nf + j) = 1.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < np; ++j) rhs(nf + j) = load(static_cast<Eigen::Index>(pres[static_cast<std::size_t>(j)]));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  POLYSP_REQUIRE(lu.isInvertible(), SolverError, "singular system: patch of vertex " + std::to_string(vertex));
  const Eigen::VectorXd x = lu.solve(rhs);
  const double rn = rhs.norm();
  POLYSP_REQUIRE(rn == 0.0 || (K * x - rhs).norm() <= 1e-9 * rn, SolverError,
                 "singular system: patch of vertex " + std::to_string(vertex));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.num_velocity_dofs()));
  for (Eigen::Index i = 0; i < nf; ++i) v(dofs[static_cast<std::size_t>(i)]) = x(i);
  return v;
}

namespace detail {

inline PouResult pou_attempt(const std::shared_ptr<const Mesh>& mesh, const BrokenFunction& f, StokesOptions opt) {
  PouResult R;
  R.discretization = std::make_shared<const StokesDiscretization>(mesh, opt);
  const auto& d = *R.discretization;
  const Mesh& m = *mesh;
  const auto P = vertex_patches(m);
  const std::size_t nv = m.vertices().size();
  const QuadratureRule& rule = triangle_rule(f.degree() + 2);
  const double scale = opt.mass_scale;

  // ∫ q_j f φ_ν over ω_ν for the pressures j on ω_ν, and the masses m_ν = ∫ f φ_ν.
  auto hat = [&](std::size_t k, std::size_t v, const Point& x) {
    const auto& e = m.element(k);
    Barycentric L({e.loop[0], e.loop[1], e.loop[2]});
    for (int i = 0; i < 3; ++i)
      if (static_cast<std::size_t>(e.vertices[i]) == v) return L(i, x);
    return 0.0;
  };
  std::vector<Eigen::VectorXd> loads(nv);
  std::vector<double> mass(nv, 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    loads[v] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.num_pressure_dofs()));
    for (std::size_t k : P.elements[v]) {
      const auto& loop = m.element(k).loop;
      mass[v] += integrate_triangle_rule([&](const Point& x) { return f(k, x) * hat(k, v, x); }, loop[0], loop[1], loop[2], rule);
      for (std::size_t j : d.pressure_dofs(k))
        loads[v](static_cast<Eigen::Index>(j)) += scale * integrate_triangle_rule(
            [&](const Point& x) { return d.pressure_basis(k, j, x) * f(k, x) * hat(k, v, x); }, loop[0], loop[1], loop[2], rule);
    }
  }
  // Mass transfer along the spanning tree: patch ν sends the total mass of its subtree to its parent
  // through ψ = χ_{ω_ν ∩ ω_parent} / |ω_ν ∩ ω_parent|, which lives in both patches.
  std::vector<double> subtree = mass;
  for (auto it = P.order.rbegin(); it != P.order.rend(); ++it)
    if (P.parent[*it] >= 0) subtree[static_cast<std::size_t>(P.parent[*it])] += subtree[*it];
  R.patches.resize(nv);
  for (std::size_t v : P.order) {
    if (P.parent[v] < 0) continue;
    const auto par = static_cast<std::size_t>(P.parent[v]);
    const auto ov = overlap(P.elements[v], P.elements[par]);
    double area = 0.0;
    for (std::size_t k : ov) area += m.element(k).area;
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(loads[v].size());
    for (std::size_t k : ov) {
      const auto& loop = m.element(k).loop;
      for (std::size_t j : d.pressure_dofs(k))
        psi(static_cast<Eigen::Index>(j)) += scale / area * integrate_triangle_rule(
            [&](const Point& x) { return d.pressure_basis(k, j, x); }, loop[0], loop[1], loop[2], triangle_rule(1));
    }
    loads[v] -= subtree[v] * psi;
    loads[par] += subtree[v] * psi;
    R.patches[v].transfer = subtree[v];
  }
  R.field.velocity = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.num_velocity_dofs()));
  for (std::size_t v : P.order) {
    auto& rep = R.patches[v];
    rep.vertex = v;
    rep.elements = P.elements[v].size();
    rep.mass = mass[v];
    const Eigen::VectorXd vv = solve_patch(d, v, loads[v], &rep.velocity_dofs);
    rep.seminorm = std::sqrt(std::max(0.0, vv.dot(d.A() * vv)));
    double nsq = 0.0;
    for (std::size_t k : P.elements[v]) nsq += element_power_integral(f, k, PowerSpec{2.0, false, false}).value;
    rep.datum_norm = std::sqrt(scale * nsq);
    rep.ratio = rep.datum_norm > 0.0 ? rep.seminorm / rep.datum_norm : 0.0;
    R.max_patch_ratio = std::max(R.max_patch_ratio, rep.ratio);
    R.field.velocity += vv;
  }
  R.patches.erase(std::remove_if(R.patches.begin(), R.patches.end(), [&](const PatchReport& r) { return P.elements[r.vertex].empty(); }),
                  R.patches.end());
  const Eigen::VectorXd F = d.pressure_load(f);
  const double norm = std::sqrt(scale) * lq_norm(f, 2.0).value;
  R.field = finish_right_inverse(d, VelocityBC::FullDirichlet, std::move(R.field.velocity), Eigen::VectorXd(), F, norm);
  R.simplices = m.num_elements();
  return R;
}

}  // namespace detail

/// Σ_ν v_ν with v_ν the patch right-inverse of the mass-balanced datum f φ_ν on ω_ν. If some patch has
/// no admissible velocity, the velocity space is refined once more and the construction repeated.
inline PouResult pou_right_inverse(const std::shared_ptr<const Mesh>& mesh, const BrokenFunction& f, StokesOptions opt = {PressureSpace::ContinuousP1, 1, 1.0}) {
  POLYSP_REQUIRE(f.mesh_ptr() == mesh || mesh_hash(f.mesh()) == mesh_hash(*mesh), DomainError, "pou_right_inverse: datum lives on a different mesh");
  double integral = 0.0;
  for (std::size_t k = 0; k < mesh->num_elements(); ++k) integral += element_integral(f, k);
  POLYSP_REQUIRE(std::abs(integral) <= 1e-10 * std::max(1.0, lq_norm(f, 1.0).value), DomainError,
                 "pou_right_inverse: datum must have zero mean");
  try {
    return detail::pou_attempt(mesh, f, opt);
  } catch (const SolverError&) {
    opt.velocity_refinement += 1;
    PouResult r = detail::pou_attempt(mesh, f, opt);
    r.refined = true;
    return r;
  }
}

}  // namespace polysp
