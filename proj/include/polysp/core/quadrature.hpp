#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

#include "polysp/core/error.hpp"
#include "polysp/core/point.hpp"

namespace polysp {

/// Nodes and weights on a reference cell together with the polynomial degree integrated exactly.
/// Segment rules live on [0,1] (weights sum to 1). Triangle rules store barycentric coordinates
/// and weights normalized to sum 1, so that the integral over T is |T| * sum w_i f(x_i).
struct QuadratureRule {
  int degree = 0;
  std::vector<std::array<double, 3>> nodes;  // segment: {t, 0, 0}; triangle: barycentric
  std::vector<double> weights;
};

/// Value of an integral (or norm) together with an error estimate and evaluation flags.
struct Integral {
  double value = 0.0;
  double error = 0.0;
  bool approximate = false;  // produced by an adaptive or sampling path
  bool cap_hit = false;      // adaptive refinement stopped at the level cap

  Integral& operator+=(const Integral& o) {
    value += o.value;
    error += o.error;
    approximate = approximate || o.approximate;
    cap_hit = cap_hit || o.cap_hit;
    return *this;
  }
  Integral scaled(double s) const {
    Integral r = *this;
    r.value *= s;
    r.error *= std::abs(s);
    return r;
  }
};

struct AdaptiveOptions {
  double rel_tol = 1e-9;
  double abs_tol = 0.0;
  int max_depth = 12;
  std::size_t max_cells = 20000;
};

namespace detail {

inline std::vector<QuadratureRule> build_gauss_legendre(int max_points) {
  std::vector<QuadratureRule> rules(max_points + 1);
  for (int n = 1; n <= max_points; ++n) {
    QuadratureRule& r = rules[n];
    r.degree = 2 * n - 1;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        if (n == 1) {
          p1 = x;
          p0 = 1.0;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      if (n == 1) {
        x = 0.0;
        dp = 1.0;
      }
      double w = 2.0 / ((1.0 - x * x) * dp * dp);
      // map [-1,1] -> [0,1]
      r.nodes[i] = {0.5 * (1.0 - x), 0.0, 0.0};
      r.nodes[n - 1 - i] = {0.5 * (1.0 + x), 0.0, 0.0};
      r.weights[i] = r.weights[n - 1 - i] = 0.5 * w;
    }
    if (n == 1) r.weights[0] = 1.0;
  }
  return rules;
}

inline constexpr int kMaxGaussPoints = 64;

}  // namespace detail

/// n-point Gauss-Legendre rule on [0,1].
inline const QuadratureRule& gauss_legendre(int n) {
  static const std::vector<QuadratureRule> rules = detail::build_gauss_legendre(detail::kMaxGaussPoints);
  POLYSP_REQUIRE(n >= 1 && n <= detail::kMaxGaussPoints, DomainError, "gauss_legendre: unsupported point count");
  return rules[n];
}

/// Gauss-Legendre rule on [0,1] exact for polynomials of the given degree.
inline const QuadratureRule& segment_rule(int degree) {
  return gauss_legendre(std::max(1, degree / 2 + 1));
}

namespace detail {

inline QuadratureRule build_triangle_rule(int degree) {
  // Collapsed product rule: P = (1-u) A + u(1-w) B + u w C, Jacobian 2|T| u.
  const QuadratureRule& gu = segment_rule(degree + 1);
  const QuadratureRule& gw = segment_rule(degree);
  QuadratureRule r;
  r.degree = degree;
  for (std::size_t i = 0; i < gu.nodes.size(); ++i) {
    double u = gu.nodes[i][0];
    for (std::size_t j = 0; j < gw.nodes.size(); ++j) {
      double w = gw.nodes[j][0];
      r.nodes.push_back({1.0 - u, u * (1.0 - w), u * w});
      r.weights.push_back(2.0 * gu.weights[i] * gw.weights[j] * u);
    }
  }
  return r;
}

inline constexpr int kMaxTriangleDegree = 100;

}  // namespace detail

/// Triangle rule exact for bivariate polynomials of total degree `degree`.
inline const QuadratureRule& triangle_rule(int degree) {
  static const std::vector<QuadratureRule> rules = [] {
    std::vector<QuadratureRule> r;
    for (int d = 0; d <= detail::kMaxTriangleDegree; ++d) r.push_back(detail::build_triangle_rule(d));
    return r;
  }();
  POLYSP_REQUIRE(degree >= 0 && degree <= detail::kMaxTriangleDegree, DomainError,
                 "triangle_rule: unsupported degree");
  return rules[std::max(degree, 0)];
}

inline double triangle_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * std::abs(orient(a, b, c));
}

inline Point barycentric_point(const std::array<double, 3>& l, const Point& a, const Point& b, const Point& c) {
  return {l[0] * a.x + l[1] * b.x + l[2] * c.x, l[0] * a.y + l[1] * b.y + l[2] * c.y};
}

/// Fixed-rule integral of f over triangle (a, b, c).
template <class F>
double integrate_triangle_rule(const F& f, const Point& a, const Point& b, const Point& c,
                               const QuadratureRule& rule) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(barycentric_point(rule.nodes[i], a, b, c));
  return s * triangle_area(a, b, c);
}

/// Fixed-rule integral of f over [a, b].
template <class F>
double integrate_segment_rule(const F& f, double a, double b, const QuadratureRule& rule) {
  double s = 0.0;
  const double h = b - a;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(a + h * rule.nodes[i][0]);
  return s * h;
}

/// Globally adaptive bisection on [a, b]. Each interval is scored by the difference between its
/// Gauss estimate and the sum over its halves; the interval with the largest score is split until
/// the summed score drops below the tolerance or the level cap is reached.
template <class F>
Integral adaptive_segment(const F& f, double a, double b, const AdaptiveOptions& opt = {}, int points = 8) {
  const QuadratureRule& rule = gauss_legendre(points);
  struct Cell {
    double a, b, fine, err;
    int depth;
    std::array<double, 2> child;
    bool operator<(const Cell& o) const { return err < o.err; }
  };
  auto make = [&](double lo, double hi, double coarse, int depth) {
    double mid = 0.5 * (lo + hi);
    Cell c{lo, hi, 0.0, 0.0, depth, {integrate_segment_rule(f, lo, mid, rule), integrate_segment_rule(f, mid, hi, rule)}};
    c.fine = c.child[0] + c.child[1];
    c.err = std::abs(c.fine - coarse);
    return c;
  };
  Integral out;
  out.approximate = true;
  if (!(b > a)) return out;
  std::priority_queue<Cell> queue;
  Cell root = make(a, b, integrate_segment_rule(f, a, b, rule), 0);
  queue.push(root);
  double total = root.fine, err = root.err, done_err = 0.0, done_val = 0.0;
  while (!queue.empty()) {
    double tol = std::max(opt.rel_tol * std::abs(total), opt.abs_tol);
    if (err + done_err <= tol || (done_err > 0.0 && err <= tol)) break;
    if (queue.size() >= opt.max_cells) {
      out.cap_hit = true;
      break;
    }
    Cell c = queue.top();
    queue.pop();
    if (c.depth >= opt.max_depth) {
      out.cap_hit = true;
      done_err += c.err;
      done_val += c.fine;
      err -= c.err;
      continue;
    }
    double mid = 0.5 * (c.a + c.b);
    Cell l = make(c.a, mid, c.child[0], c.depth + 1);
    Cell r = make(mid, c.b, c.child[1], c.depth + 1);
    total += l.fine + r.fine - c.fine;
    err += l.err + r.err - c.err;
    queue.push(l);
    queue.push(r);
  }
  out.value = done_val;
  while (!queue.empty()) {
    out.value += queue.top().fine;
    queue.pop();
  }
  out.error = std::max(0.0, err) + done_err;
  // Raw difference estimates can undershoot near kinks; never report below the requested accuracy.
  out.error = std::max(out.error, 10.0 * opt.rel_tol * std::abs(out.value));
  return out;
}

/// Globally adaptive quadrisection of a triangle; same acceptance logic as adaptive_segment.
template <class F>
Integral adaptive_triangle(const F& f, const Point& a, const Point& b, const Point& c,
                           const AdaptiveOptions& opt = {}, int rule_degree = 10) {
  const QuadratureRule& rule = triangle_rule(rule_degree);
  struct Cell {
    std::array<Point, 3> v;
    double fine, err;
    int depth;
    std::array<double, 4> child;
    bool operator<(const Cell& o) const { return err < o.err; }
  };
  auto children = [](const std::array<Point, 3>& v) {
    Point m01 = 0.5 * (v[0] + v[1]), m12 = 0.5 * (v[1] + v[2]), m20 = 0.5 * (v[2] + v[0]);
    return std::array<std::array<Point, 3>, 4>{{{v[0], m01, m20}, {m01, v[1], m12}, {m20, m12, v[2]}, {m12, m20, m01}}};
  };
  auto make = [&](const std::array<Point, 3>& v, double coarse, int depth) {
    Cell cell{v, 0.0, 0.0, depth, {}};
    auto ch = children(v);
    for (int i = 0; i < 4; ++i) {
      cell.child[i] = integrate_triangle_rule(f, ch[i][0], ch[i][1], ch[i][2], rule);
      cell.fine += cell.child[i];
    }
    cell.err = std::abs(cell.fine - coarse);
    return cell;
  };
  Integral out;
  out.approximate = true;
  std::priority_queue<Cell> queue;
  Cell root = make({a, b, c}, integrate_triangle_rule(f, a, b, c, rule), 0);
  queue.push(root);
  double total = root.fine, err = root.err, done_err = 0.0, done_val = 0.0;
  while (!queue.empty()) {
    double tol = std::max(opt.rel_tol * std::abs(total), opt.abs_tol);
    if (err + done_err <= tol || (done_err > 0.0 && err <= tol)) break;
    if (queue.size() >= opt.max_cells) {
      out.cap_hit = true;
      break;
    }
    Cell cell = queue.top();
    queue.pop();
    if (cell.depth >= opt.max_depth) {
      out.cap_hit = true;
      done_err += cell.err;
      done_val += cell.fine;
      err -= cell.err;
      continue;
    }
    auto ch = children(cell.v);
    double sum_fine = 0.0, sum_err = 0.0;
    for (int i = 0; i < 4; ++i) {
      Cell k = make(ch[i], cell.child[i], cell.depth + 1);
      sum_fine += k.fine;
      sum_err += k.err;
      queue.push(k);
    }
    total += sum_fine - cell.fine;
    err += sum_err - cell.err;
  }
  out.value = done_val;
  while (!queue.empty()) {
    out.value += queue.top().fine;
    queue.pop();
  }
  out.error = std::max(0.0, err) + done_err;
  // Raw difference estimates can undershoot near kinks; never report below the requested accuracy.
  out.error = std::max(out.error, 10.0 * opt.rel_tol * std::abs(out.value));
  return out;
}

}  // namespace polysp
