#pragma once

#include <cmath>

namespace polysp {

struct Point {
  double x = 0.0;
  double y = 0.0;

  Point operator+(const Point& o) const { return {x + o.x, y + o.y}; }
  Point operator-(const Point& o) const { return {x - o.x, y - o.y}; }
  Point operator*(double s) const { return {x * s, y * s}; }
  Point operator/(double s) const { return {x / s, y / s}; }
  Point& operator+=(const Point& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Point&) const = default;
};

inline Point operator*(double s, const Point& p) { return p * s; }
inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point& a, const Point& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point& a) { return std::hypot(a.x, a.y); }
inline double distance(const Point& a, const Point& b) { return norm(a - b); }

/// Twice the signed area of the triangle (a, b, c).
inline double orient(const Point& a, const Point& b, const Point& c) {
  return cross(b - a, c - a);
}

/// Unit normal pointing to the right of the direction a -> b.
inline Point right_normal(const Point& a, const Point& b) {
  Point t = b - a;
  double l = norm(t);
  return {t.y / l, -t.x / l};
}

}  // namespace polysp
