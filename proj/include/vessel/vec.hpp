#pragma once

#include <array>
#include <cmath>
#include <type_traits>

#include "vessel/ad.hpp"

namespace vessel {

using ad::value;

template <class T>
struct Vec3 {
  T x{}, y{}, z{};

  T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

using Vec3d = Vec3<double>;

template <class T>
Vec3<T> operator+(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <class T>
Vec3<T> operator-(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <class T>
Vec3<T> operator-(const Vec3<T>& a) {
  return {-a.x, -a.y, -a.z};
}
template <class T>
Vec3<T> operator*(const Vec3<T>& a, const std::type_identity_t<T>& s) {
  return {a.x * s, a.y * s, a.z * s};
}
template <class T>
Vec3<T> operator*(const std::type_identity_t<T>& s, const Vec3<T>& a) {
  return {a.x * s, a.y * s, a.z * s};
}
template <class T>
Vec3<T> operator/(const Vec3<T>& a, const std::type_identity_t<T>& s) {
  return {a.x / s, a.y / s, a.z / s};
}

// Scaling a differentiable vector by a plain constant.
inline Vec3<ad::Var> operator*(const Vec3<ad::Var>& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline Vec3<ad::Var> operator*(double s, const Vec3<ad::Var>& a) { return {a.x * s, a.y * s, a.z * s}; }

template <class T>
T dot(const Vec3<T>& a, const Vec3<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class T>
T squared_norm(const Vec3<T>& a) {
  return dot(a, a);
}

template <class T>
T norm(const Vec3<T>& a) {
  using std::sqrt;
  return sqrt(squared_norm(a));
}

template <class T>
Vec3<T> normalized(const Vec3<T>& a) {
  return a / norm(a);
}

inline double distance(const Vec3d& a, const Vec3d& b) { return norm(a - b); }

template <class T>
Vec3d values(const Vec3<T>& a) {
  return {value(a.x), value(a.y), value(a.z)};
}

template <class T>
Vec3<T> promote(const Vec3d& a) {
  return {T(a.x), T(a.y), T(a.z)};
}

template <class T>
bool all_finite(const Vec3<T>& a) {
  return std::isfinite(value(a.x)) && std::isfinite(value(a.y)) && std::isfinite(value(a.z));
}

struct Vec2d {
  double u = 0.0, v = 0.0;
  friend bool operator==(const Vec2d&, const Vec2d&) = default;
};

inline Vec2d operator+(Vec2d a, Vec2d b) { return {a.u + b.u, a.v + b.v}; }
inline Vec2d operator-(Vec2d a, Vec2d b) { return {a.u - b.u, a.v - b.v}; }
inline Vec2d operator*(Vec2d a, double s) { return {a.u * s, a.v * s}; }
inline double dot(Vec2d a, Vec2d b) { return a.u * b.u + a.v * b.v; }
inline double cross(Vec2d a, Vec2d b) { return a.u * b.v - a.v * b.u; }
inline double norm(Vec2d a) { return std::hypot(a.u, a.v); }

}  // namespace vessel
