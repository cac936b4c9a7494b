#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace rvd {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

// 3x3 real matrix, row-major. The matrix norm used throughout is the
// sup-entry norm |D| = max_ij |d_ij|.
struct Mat3 {
  std::array<double, 9> m{};

  double& operator()(int i, int j) { return m[static_cast<std::size_t>(3 * i + j)]; }
  double operator()(int i, int j) const { return m[static_cast<std::size_t>(3 * i + j)]; }

  static Mat3 identity() {
    Mat3 r;
    r(0, 0) = r(1, 1) = r(2, 2) = 1.0;
    return r;
  }

  Mat3& operator+=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) m[static_cast<std::size_t>(i)] += o.m[static_cast<std::size_t>(i)];
    return *this;
  }
  Mat3& operator-=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) m[static_cast<std::size_t>(i)] -= o.m[static_cast<std::size_t>(i)];
    return *this;
  }
  Mat3& operator*=(double s) {
    for (double& v : m) v *= s;
    return *this;
  }
};

inline Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
inline Mat3 operator-(Mat3 a, const Mat3& b) { return a -= b; }
inline Mat3 operator*(double s, Mat3 a) { return a *= s; }

inline Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z,
          m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
          m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
}

inline Mat3 outer(const Vec3& a, const Vec3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = a[i] * b[j];
  return r;
}

inline double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }

inline double sup_norm(const Mat3& m) {
  double r = 0.0;
  for (double v : m.m) r = std::max(r, std::abs(v));
  return r;
}

inline double det(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// Phase-space point (x, p) in R^6.
struct Vec6 {
  Vec3 x, p;

  double operator[](int i) const { return i < 3 ? x[i] : p[i - 3]; }
  double& operator[](int i) { return i < 3 ? x[i] : p[i - 3]; }

  Vec6& operator+=(const Vec6& o) { x += o.x; p += o.p; return *this; }
  Vec6& operator-=(const Vec6& o) { x -= o.x; p -= o.p; return *this; }
  Vec6& operator*=(double s) { x *= s; p *= s; return *this; }
};

inline Vec6 operator+(Vec6 a, const Vec6& b) { return a += b; }
inline Vec6 operator-(Vec6 a, const Vec6& b) { return a -= b; }
inline Vec6 operator*(double s, Vec6 a) { return a *= s; }

inline double dot(const Vec6& a, const Vec6& b) { return dot(a.x, b.x) + dot(a.p, b.p); }
inline double norm2(const Vec6& a) { return norm2(a.x) + norm2(a.p); }
inline double norm(const Vec6& a) { return std::sqrt(norm2(a)); }

}  // namespace rvd
