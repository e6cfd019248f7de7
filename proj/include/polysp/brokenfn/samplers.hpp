#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>

#include "polysp/brokenfn/broken_function.hpp"
#include "polysp/core/random.hpp"

namespace polysp {

enum class SamplerKind { IidCoefficients, ConformingPlusJumps, CrLike };

inline std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::IidCoefficients: return "iid-coefficients";
    case SamplerKind::ConformingPlusJumps: return "conforming-plus-jumps";
    case SamplerKind::CrLike: return "cr-like";
  }
  return "iid-coefficients";
}

inline SamplerKind parse_sampler(const std::string& s) {
  if (s == "iid-coefficients" || s == "iid") return SamplerKind::IidCoefficients;
  if (s == "conforming-plus-jumps" || s == "conforming") return SamplerKind::ConformingPlusJumps;
  if (s == "cr-like") return SamplerKind::CrLike;
  throw DomainError("unknown sampler \"" + s + "\"");
}

struct SamplerOptions {
  double epsilon = 0.1;         // magnitude of the per-element offsets (conforming-plus-jumps)
  bool random_epsilon = false;  // draw the magnitude uniformly from [0, epsilon] per sample
  bool dirichlet_cutoff = false;  // conforming-plus-jumps: the global polynomial vanishes on the lines of the Dirichlet facets
};

namespace detail {

inline Poly2 random_poly(int degree, Rng& rng) {
  Poly2 p(degree);
  for (double& c : p.coeffs()) c = rng.uniform(-1.0, 1.0);
  return p;
}

/// Row vectors a with a·coeffs(v|K) = average over facet f of v|K, one per monomial.
inline Eigen::RowVectorXd facet_average_functional(const BrokenFunction& v, std::size_t k, std::size_t f) {
  const int n = v.degree();
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(Poly2::size(n)));
  const auto& F = v.mesh().facet(f);
  const Point a = v.to_local(k, F.a), b = v.to_local(k, F.b);
  for (int m = 0; m <= n; ++m)
    for (int j = 0; j <= m; ++j)
      row(static_cast<Eigen::Index>(Poly2::index(m - j, j))) = Poly2::monomial(m - j, j).restrict_to(a, b).integrate(0.0, 1.0);
  return row;
}

/// Distinct lines carrying Dirichlet facets, as (unit normal, point).
inline std::vector<std::pair<Point, Point>> dirichlet_lines(const Mesh& mesh) {
  std::vector<std::pair<Point, Point>> out;
  const double tol = 1e3 * mesh.tolerance();
  for (const auto& F : mesh.facets()) {
    if (F.is_interior() || F.label != FacetLabel::Dirichlet) continue;
    const Point n = F.normal;
    bool seen = false;
    for (const auto& [m, a] : out)
      if (std::abs(cross(m, n)) <= 1e-12 && std::abs(dot(m, F.a - a)) <= tol && std::abs(dot(m, F.b - a)) <= tol) seen = true;
    if (!seen) out.push_back({n, F.a});
  }
  return out;
}

}  // namespace detail

/// Random broken function of the given kind. Deterministic in (mesh, kind, degree, seed, options).
inline BrokenFunction sample(const std::shared_ptr<const Mesh>& mesh, SamplerKind kind, int degree, std::uint64_t seed,
                             const SamplerOptions& opt = {}) {
  POLYSP_REQUIRE(degree >= 0 && degree <= kMaxBrokenDegree, DomainError, "sample: degree must lie in [0, 6]");
  Rng rng(seed);
  const std::size_t n = mesh->num_elements();
  switch (kind) {
    case SamplerKind::IidCoefficients: {
      BrokenFunction v(mesh, degree);
      for (std::size_t k = 0; k < n; ++k)
        for (double& c : v.coefficients(k)) c = rng.uniform(-1.0, 1.0);
      return v;
    }
    case SamplerKind::ConformingPlusJumps: {
      const double inf = std::numeric_limits<double>::infinity();
      double xmin = inf, xmax = -inf, ymin = inf, ymax = -inf;
      for (const auto& p : mesh->vertices()) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
      }
      const double H = std::max(xmax - xmin, ymax - ymin);
      const Point c{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
      const Poly2 R = detail::random_poly(degree, rng);
      Poly2 G = R.affine_substitute(-c.x / H, -c.y / H, 1.0 / H);
      if (opt.dirichlet_cutoff) {
        const auto lines = detail::dirichlet_lines(*mesh);
        POLYSP_REQUIRE(degree + static_cast<int>(lines.size()) <= kMaxBrokenDegree, DomainError,
                       "sample: degree plus the number of Dirichlet lines exceeds 6");
        for (const auto& [n, a] : lines) G = G * Poly2::affine(-dot(n, a) / H, n.x / H, n.y / H);
      }
      BrokenFunction v = BrokenFunction::from_global(mesh, G);
      const double eps = opt.random_epsilon ? rng.uniform(0.0, opt.epsilon) : opt.epsilon;
      for (std::size_t k = 0; k < n; ++k) v.coefficients(k)[0] += eps * rng.uniform(-1.0, 1.0);
      return v;
    }
    case SamplerKind::CrLike: {
      POLYSP_REQUIRE(mesh->is_triangular(), DomainError, "cr-like sampler requires a triangular mesh");
      BrokenFunction v(mesh, degree);
      for (std::size_t k = 0; k < n; ++k)
        for (double& c : v.coefficients(k)) c = rng.uniform(-1.0, 1.0);
      // Constraints: zero facet average of the jump on interior facets, zero average on Dirichlet facets.
      const Eigen::Index nd = static_cast<Eigen::Index>(v.dofs_per_element());
      std::vector<std::size_t> rows;
      for (std::size_t f = 0; f < mesh->num_facets(); ++f)
        if (mesh->facet(f).label != FacetLabel::Neumann) rows.push_back(f);
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n) * nd);
      Eigen::VectorXd x(static_cast<Eigen::Index>(n) * nd);
      for (std::size_t k = 0; k < n; ++k)
        for (Eigen::Index i = 0; i < nd; ++i) x(static_cast<Eigen::Index>(k) * nd + i) = v.coefficients(k)[static_cast<std::size_t>(i)];
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& F = mesh->facet(rows[r]);
        for (int side = 0; side < (F.is_interior() ? 2 : 1); ++side) {
          const double sgn = dot(F.element_normals[side], F.normal);
          const auto k = static_cast<std::size_t>(F.elements[side]);
          A.block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k) * nd, 1, nd) +=
              sgn * detail::facet_average_functional(v, k, rows[r]);
        }
      }
      if (A.rows() > 0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
        x -= cod.solve(A * x);
      }
      for (std::size_t k = 0; k < n; ++k)
        for (Eigen::Index i = 0; i < nd; ++i) v.coefficients(k)[static_cast<std::size_t>(i)] = x(static_cast<Eigen::Index>(k) * nd + i);
      return v;
    }
  }
  return BrokenFunction(mesh, degree);
}

}  // namespace polysp
