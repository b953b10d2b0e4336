#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace vsg {

// Input or file-format problems. The CLI maps these to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures (NaN losses, gradient-check misses). CLI exit code 2.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  // Componentwise product (used for RGB).
  Vec3 operator*(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length_squared(const Vec3& v) { return dot(v, v); }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
  double len = length(v);
  if (len == 0.0) throw NumericError("cannot normalize zero-length vector");
  return v / len;
}
inline double max_component(const Vec3& v) { return std::max(v.x, std::max(v.y, v.z)); }
inline double mean_component(const Vec3& v) { return (v.x + v.y + v.z) / 3.0; }
inline bool all_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

struct Vec3i {
  int x = 0, y = 0, z = 0;
  int operator[](int i) const { return (&x)[i]; }
  bool operator==(const Vec3i& o) const { return x == o.x && y == o.y && z == o.z; }
};

// Row-major 3x3 matrix; columns of a rotation are the world-space frame axes.
struct Mat3 {
  double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  static Mat3 identity() { return {}; }
  static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    Mat3 r;
    for (int i = 0; i < 3; ++i) { r.m[i][0] = c0[i]; r.m[i][1] = c1[i]; r.m[i][2] = c2[i]; }
    return r;
  }

  Vec3 col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }
  Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }

  Vec3 operator*(const Vec3& v) const {
    return {dot(row(0), v), dot(row(1), v), dot(row(2), v)};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }

  double orthonormality_error() const {
    Mat3 g = *this * transposed();
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(g.m[i][j] - (i == j ? 1.0 : 0.0)));
    return err;
  }
};

// Rotation by angle about a unit axis (Rodrigues).
inline Mat3 rotation_about_axis(const Vec3& axis, double angle) {
  Vec3 u = normalized(axis);
  double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Mat3 r;
  r.m[0][0] = c + u.x * u.x * t;
  r.m[0][1] = u.x * u.y * t - u.z * s;
  r.m[0][2] = u.x * u.z * t + u.y * s;
  r.m[1][0] = u.y * u.x * t + u.z * s;
  r.m[1][1] = c + u.y * u.y * t;
  r.m[1][2] = u.y * u.z * t - u.x * s;
  r.m[2][0] = u.z * u.x * t - u.y * s;
  r.m[2][1] = u.z * u.y * t + u.x * s;
  r.m[2][2] = c + u.z * u.z * t;
  return r;
}

struct AABB {
  Vec3 min, max;

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5; }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
};

// Slab intersection of a ray with an axis-aligned box. On a hit, [t0, t1] is
// the parametric overlap (possibly with t0 < 0 when the origin is inside) and
// entry/exit axes identify the faces crossed (-1 when the origin/terminus lies
// on no face, which cannot happen for finite boxes and nonzero directions).
inline bool intersect_aabb(const AABB& b, const Vec3& o, const Vec3& d, double& t0, double& t1,
                           int* entry_axis = nullptr, int* exit_axis = nullptr) {
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  int ax0 = -1, ax1 = -1;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < b.min[a] || o[a] > b.max[a]) return false;
      continue;
    }
    double inv = 1.0 / d[a];
    double ta = (b.min[a] - o[a]) * inv;
    double tb = (b.max[a] - o[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) { t0 = ta; ax0 = a; }
    if (tb < t1) { t1 = tb; ax1 = a; }
  }
  if (t0 > t1) return false;
  if (entry_axis) *entry_axis = ax0;
  if (exit_axis) *exit_axis = ax1;
  return true;
}

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Numerically stable log(1 + e^x) and its inverse.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double inverse_softplus(double y) {
  if (y <= 0.0) throw NumericError("inverse_softplus requires a positive argument");
  return y > 30.0 ? y : std::log(std::expm1(y));
}
inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace vsg
