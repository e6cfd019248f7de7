#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "polysp/core/polynomial.hpp"
#include "polysp/core/quadrature.hpp"
#include "polysp/exponents/exponents.hpp"
#include "polysp/geometry/mesh.hpp"

namespace polysp {

/// Quadrature points of a region X (a whole mesh or one element) with its diameter h_X.
struct RegionCloud {
  std::vector<Point> points;
  std::vector<double> weights;
  Point center;
  double h = 0.0;
  double measure = 0.0;
};

namespace detail {

inline void add_triangles(RegionCloud& c, const std::vector<SubSimplex>& tris, int degree) {
  const QuadratureRule& rule = triangle_rule(degree);
  for (const auto& t : tris) {
    const auto& v = t.vertices;
    for (std::size_t i = 0; i < rule.weights.size(); ++i) {
      c.points.push_back(barycentric_point(rule.nodes[i], v[0], v[1], v[2]));
      c.weights.push_back(rule.weights[i] * t.area);
    }
    c.measure += t.area;
  }
}

}  // namespace detail

inline RegionCloud region_cloud(const Mesh& mesh, int degree) {
  RegionCloud c;
  for (const auto& e : mesh.elements()) detail::add_triangles(c, e.sub_triangulation, degree);
  c.h = detail::point_set_diameter(mesh.vertices());
  Point s{0.0, 0.0};
  for (const auto& e : mesh.elements()) s = s + e.area * e.centroid;
  c.center = (1.0 / mesh.area()) * s;
  return c;
}

inline RegionCloud region_cloud(const Element& e, int degree) {
  RegionCloud c;
  detail::add_triangles(c, e.sub_triangulation, degree);
  c.h = e.diameter;
  c.center = e.centroid;
  return c;
}

struct AuxOptions {
  int iterations = 200;
  double tolerance = 1e-8;
};

/// Lower bounds for C_PS(p, X) (zero-mean functions) and C_Sob(q, 1, p, X), maximizing the quotients over
/// polynomials of total degree ≤ `degree` on X.
struct AuxEstimate {
  double p = 2.0, q = 2.0;
  int degree = 0;
  double c_ps = 0.0;
  double c_sob = 0.0;
  bool ps_converged = false;
  bool sob_converged = false;
  int ps_iterations = 0;
  int sob_iterations = 0;
  bool exact_quadrature = false;  // every integrand polynomial and integrated exactly
};

namespace detail {

/// Values and scaled gradients of a monomial basis at the cloud points; ξ = (x - center)/h.
struct BasisTable {
  Eigen::MatrixXd phi, gx, gy;  // points × basis; gradients with respect to ξ
  Eigen::VectorXd w;
};

inline BasisTable basis_table(const RegionCloud& c, int degree, bool zero_mean) {
  const int first = zero_mean ? 1 : 0;
  const auto np = static_cast<Eigen::Index>(c.points.size());
  std::vector<std::pair<int, int>> mono;
  for (int m = first; m <= degree; ++m)
    for (int b = 0; b <= m; ++b) mono.push_back({m - b, b});
  const auto nb = static_cast<Eigen::Index>(mono.size());
  BasisTable T{Eigen::MatrixXd(np, nb), Eigen::MatrixXd(np, nb), Eigen::MatrixXd(np, nb), Eigen::VectorXd(np)};
  for (Eigen::Index i = 0; i < np; ++i) {
    const double x = (c.points[static_cast<std::size_t>(i)].x - c.center.x) / c.h;
    const double y = (c.points[static_cast<std::size_t>(i)].y - c.center.y) / c.h;
    T.w(i) = c.weights[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < nb; ++j) {
      const auto [a, b] = mono[static_cast<std::size_t>(j)];
      T.phi(i, j) = std::pow(x, a) * std::pow(y, b);
      T.gx(i, j) = a > 0 ? a * std::pow(x, a - 1) * std::pow(y, b) : 0.0;
      T.gy(i, j) = b > 0 ? b * std::pow(x, a) * std::pow(y, b - 1) : 0.0;
    }
  }
  if (zero_mean) {
    const double area = T.w.sum();
    const Eigen::RowVectorXd mean = (T.w.transpose() * T.phi) / area;
    T.phi.rowwise() -= mean;
  }
  return T;
}

/// Σ w |u|^r and its gradient with respect to the coefficients, for u = U c.
inline double power_sum(const Eigen::VectorXd& w, const Eigen::VectorXd& u, double r, const Eigen::MatrixXd& U, Eigen::VectorXd* grad) {
  double s = 0.0;
  Eigen::VectorXd d(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double a = std::abs(u(i));
    s += w(i) * std::pow(a, r);
    d(i) = a > 0.0 ? w(i) * r * std::pow(a, r - 1.0) * (u(i) > 0 ? 1.0 : -1.0) : 0.0;
  }
  if (grad) *grad = U.transpose() * d;
  return s;
}

/// Σ w |∇u|^r (Euclidean) and its gradient.
inline double gradient_power_sum(const BasisTable& T, const Eigen::VectorXd& c, double r, Eigen::VectorXd* grad) {
  const Eigen::VectorXd ux = T.gx * c, uy = T.gy * c;
  double s = 0.0;
  Eigen::VectorXd dx(ux.size()), dy(ux.size());
  for (Eigen::Index i = 0; i < ux.size(); ++i) {
    const double a = std::hypot(ux(i), uy(i));
    s += T.w(i) * std::pow(a, r);
    const double f = a > 0.0 ? T.w(i) * r * std::pow(a, r - 2.0) : 0.0;
    dx(i) = f * ux(i);
    dy(i) = f * uy(i);
  }
  if (grad) *grad = T.gx.transpose() * dx + T.gy.transpose() * dy;
  return s;
}

/// Ascent of a scale-invariant log-quotient on the unit sphere, with backtracking.
template <class F>
double sphere_ascent(const F& objective, Eigen::VectorXd c, const AuxOptions& opt, bool& converged, int& iterations) {
  c.normalize();
  Eigen::VectorXd g;
  double f = objective(c, &g);
  double step = 1.0;
  converged = false;
  for (iterations = 1; iterations <= opt.iterations; ++iterations) {
    const Eigen::VectorXd t = g - g.dot(c) * c;
    if (t.norm() <= opt.tolerance) {
      converged = true;
      break;
    }
    double fn = f;
    Eigen::VectorXd cn;
    for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
      cn = (c + step * t).normalized();
      fn = objective(cn, nullptr);
      if (fn > f) break;
    }
    if (!(fn > f)) {
      converged = true;  // no ascent direction left at working precision
      break;
    }
    const double gain = fn - f;
    c = cn;
    f = objective(c, &g);
    step = std::min(4.0 * step, 1e3);
    if (gain <= opt.tolerance * std::max(1.0, std::abs(f))) {
      converged = true;
      break;
    }
  }
  return f;
}

inline bool even_integer(double r) { return r == std::floor(r) && static_cast<long>(r) % 2 == 0; }

}  // namespace detail

/// C_PS(p, X) ≥ max ‖v‖_{L^p}/(h_X |v|_{W^{1,p}}) and C_Sob(q, 1, p, X) ≥ max ‖v‖_{L^q}/(h_X^{d/q-d/p+1}‖v‖_{W^{1,p}})
/// over polynomials of degree ≤ `degree` (zero mean for C_PS). At p = 2 the Poincaré quotient is a generalized
/// eigenvalue; otherwise both are maximized by ascent started from the p = 2 extremals.
template <class Region>
AuxEstimate estimate_aux_constants(const Region& region, double p, double q, int degree, const AuxOptions& opt = {}) {
  POLYSP_REQUIRE(std::isfinite(p) && p >= 1.0 && std::isfinite(q) && q >= 1.0, DomainError,
                 "estimate_aux_constants: exponents must be finite and >= 1");
  POLYSP_REQUIRE(degree >= 1 && degree <= 10, DomainError, "estimate_aux_constants: degree must lie in [1, 10]");
  const int d = 2;
  AuxEstimate out;
  out.p = p;
  out.q = q;
  out.degree = degree;
  out.exact_quadrature = detail::even_integer(p) && detail::even_integer(q);
  const double r = std::max(p, q);
  const int rule = std::min(detail::kMaxTriangleDegree, static_cast<int>(std::ceil(r * degree)) + (out.exact_quadrature ? 0 : 6));
  const RegionCloud cloud = region_cloud(region, rule);
  const double h = cloud.h;

  // Poincaré quotient, zero mean. Gradients in ξ, so h |∇_x v| = |∇_ξ v|.
  {
    const auto T = detail::basis_table(cloud, degree, true);
    const Eigen::MatrixXd M = T.phi.transpose() * T.w.asDiagonal() * T.phi;
    const Eigen::MatrixXd K = T.gx.transpose() * T.w.asDiagonal() * T.gx + T.gy.transpose() * T.w.asDiagonal() * T.gy;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(M, K);
    POLYSP_REQUIRE(es.info() == Eigen::Success, SolverError, "estimate_aux_constants: eigensolver failed");
    const Eigen::Index top = es.eigenvalues().size() - 1;
    out.c_ps = std::sqrt(es.eigenvalues()(top));
    out.ps_converged = true;
    if (p != 2.0) {
      auto obj = [&](const Eigen::VectorXd& c, Eigen::VectorXd* g) {
        Eigen::VectorXd ga, gb;
        const Eigen::VectorXd u = T.phi * c;
        const double A = detail::power_sum(T.w, u, p, T.phi, g ? &ga : nullptr);
        const double B = detail::gradient_power_sum(T, c, p, g ? &gb : nullptr);
        if (g) *g = ga / (p * A) - gb / (p * B);
        return std::log(A) / p - std::log(B) / p;
      };
      const double f = detail::sphere_ascent(obj, es.eigenvectors().col(top), opt, out.ps_converged, out.ps_iterations);
      out.c_ps = std::exp(f);
    }
  }
  // Embedding quotient with ‖v‖_{W^{1,p}} = (h^{-p}‖v‖_p^p + |v|_{1,p}^p)^{1/p}. With ξ-gradients the
  // denominator is h^{d/q-d/p} (Σ w|v|^p + Σ w|∇_ξ v|^p)^{1/p}.
  {
    const auto T = detail::basis_table(cloud, degree, false);
    const double wscale = std::pow(h, static_cast<double>(d) / q - static_cast<double>(d) / p);
    auto obj = [&](const Eigen::VectorXd& c, Eigen::VectorXd* g) {
      Eigen::VectorXd gq, ga, gb;
      const Eigen::VectorXd u = T.phi * c;
      const double Q = detail::power_sum(T.w, u, q, T.phi, g ? &gq : nullptr);
      const double A = detail::power_sum(T.w, u, p, T.phi, g ? &ga : nullptr);
      const double B = detail::gradient_power_sum(T, c, p, g ? &gb : nullptr);
      if (g) *g = gq / (q * Q) - (ga + gb) / (p * (A + B));
      return std::log(Q) / q - std::log(A + B) / p - std::log(wscale);
    };
    const Eigen::MatrixXd M = T.phi.transpose() * T.w.asDiagonal() * T.phi;
    const Eigen::MatrixXd K = T.gx.transpose() * T.w.asDiagonal() * T.gx + T.gy.transpose() * T.w.asDiagonal() * T.gy;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
    POLYSP_REQUIRE(es.info() == Eigen::Success, SolverError, "estimate_aux_constants: eigensolver failed");
    double best = -kInf;
    const Eigen::Index nb = es.eigenvalues().size();
    // Starts: the constant and the smoothest nonconstant modes.
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(nb, 3); ++j) {
      bool conv = false;
      int it = 0;
      const double f = detail::sphere_ascent(obj, es.eigenvectors().col(j), opt, conv, it);
      if (f > best) {
        best = f;
        out.sob_converged = conv;
        out.sob_iterations = it;
      }
    }
    out.c_sob = std::exp(best);
  }
  return out;
}

}  // namespace polysp
