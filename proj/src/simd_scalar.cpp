#include <cmath>

#include "rvd/simd.hpp"

// Scalar reference kernels. Kept deliberately plain: this is the path the
// vector backends are checked against.

namespace rvd::simd::scalar_impl {

void coulomb(const SourceTable& tab, const Vec3& x, double eps, double& phi, Vec3& grad_phi) {
  const std::size_t n = tab.padded_size();
  const double* y1 = tab.y1();
  const double* y2 = tab.y2();
  const double* y3 = tab.y3();
  const double* w = tab.w();
  const double eps2 = eps * eps;
  double p = 0.0, g1 = 0.0, g2 = 0.0, g3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = y1[i] - x.x;
    const double d2 = y2[i] - x.y;
    const double d3 = y3[i] - x.z;
    const double s2 = d1 * d1 + d2 * d2 + d3 * d3 + eps2;
    const double inv_s = 1.0 / std::sqrt(s2);
    const double wi = w[i];
    const double c = wi * inv_s * inv_s * inv_s;
    p += wi * inv_s;
    g1 += c * d1;
    g2 += c * d2;
    g3 += c * d3;
  }
  phi = p;
  grad_phi = {g1, g2, g3};
}

Vec3 darwin_a(const SourceTable& tab, const Vec3& x, double eps) {
  const std::size_t n = tab.padded_size();
  const double* y1 = tab.y1();
  const double* y2 = tab.y2();
  const double* y3 = tab.y3();
  const double* v1 = tab.v1();
  const double* v2 = tab.v2();
  const double* v3 = tab.v3();
  const double* w = tab.w();
  const double eps2 = eps * eps;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = y1[i] - x.x;
    const double d2 = y2[i] - x.y;
    const double d3 = y3[i] - x.z;
    const double s = std::sqrt(d1 * d1 + d2 * d2 + d3 * d3 + eps2);
    const double se = s + eps;
    const double inv_s = 1.0 / s;
    const double beta = inv_s / (se * se);
    const double dv = d1 * v1[i] + d2 * v2[i] + d3 * v3[i];
    const double hw = 0.5 * w[i];
    const double c = hw * beta * dv;
    a1 += hw * inv_s * v1[i] + c * d1;
    a2 += hw * inv_s * v2[i] + c * d2;
    a3 += hw * inv_s * v3[i] + c * d3;
  }
  return {a1, a2, a3};
}

FieldSums all_fields(const SourceTable& tab, const Vec3& x, double eps) {
  const std::size_t n = tab.padded_size();
  const double* y1 = tab.y1();
  const double* y2 = tab.y2();
  const double* y3 = tab.y3();
  const double* v1 = tab.v1();
  const double* v2 = tab.v2();
  const double* v3 = tab.v3();
  const double* w = tab.w();
  const double eps2 = eps * eps;
  FieldSums out;
  double m[3][3] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const double d[3] = {y1[i] - x.x, y2[i] - x.y, y3[i] - x.z};
    const double v[3] = {v1[i], v2[i], v3[i]};
    const double s = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + eps2);
    const double se = s + eps;
    const double inv_s = 1.0 / s;
    const double inv_s3 = inv_s * inv_s * inv_s;
    const double beta = inv_s / (se * se);
    const double big_g = (3.0 * s + eps) * inv_s3 / (se * se * se);
    const double dv = d[0] * v[0] + d[1] * v[1] + d[2] * v[2];
    const double wi = w[i];
    const double hw = 0.5 * wi;

    out.phi += wi * inv_s;
    const double c = wi * inv_s3;
    out.grad_phi.x += c * d[0];
    out.grad_phi.y += c * d[1];
    out.grad_phi.z += c * d[2];

    const double ca = hw * beta * dv;
    out.a.x += hw * inv_s * v[0] + ca * d[0];
    out.a.y += hw * inv_s * v[1] + ca * d[1];
    out.a.z += hw * inv_s * v[2] + ca * d[2];

    // M_km = 1/2 w [d_k v_m / s^3 + G d_k d_m (d.v) - beta delta_km (d.v) - beta d_m v_k]
    const double g_dv = big_g * dv;
    for (int k = 0; k < 3; ++k) {
      const double dk3 = d[k] * inv_s3;
      for (int mi = 0; mi < 3; ++mi) {
        double t = dk3 * v[mi] + g_dv * d[k] * d[mi] - beta * d[mi] * v[k];
        if (k == mi) t -= beta * dv;
        m[k][mi] += hw * t;
      }
    }
  }
  for (int k = 0; k < 3; ++k)
    for (int mi = 0; mi < 3; ++mi) out.grad_a(k, mi) = m[k][mi];
  return out;
}

}  // namespace rvd::simd::scalar_impl
