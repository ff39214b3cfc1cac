#pragma once

#include <cmath>

namespace famle {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double t) const { return {x * t, y * t}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double t, Vec2 v) { return v * t; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }
inline Vec2 unit_direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Symmetric 2x2 matrix [[a11, a12], [a12, a22]].
struct Sym2 {
  double a11 = 1.0;
  double a12 = 0.0;
  double a22 = 1.0;

  constexpr Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }
  constexpr double quadratic(Vec2 v) const { return dot(apply(v), v); }
  constexpr double det() const { return a11 * a22 - a12 * a12; }
  constexpr Sym2 inverse() const {
    const double d = det();
    return {a22 / d, -a12 / d, a11 / d};
  }
  double min_eigenvalue() const {
    const double m = 0.5 * (a11 + a22);
    return m - std::hypot(0.5 * (a11 - a22), a12);
  }
  double max_eigenvalue() const {
    const double m = 0.5 * (a11 + a22);
    return m + std::hypot(0.5 * (a11 - a22), a12);
  }
  constexpr bool operator==(const Sym2&) const = default;
};

}  // namespace famle
