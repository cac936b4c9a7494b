#include <immintrin.h>

#include "rvd/simd.hpp"

// AVX2 + FMA variants of the particle-sum kernels, 4 sources per iteration.
// Lane sums are combined in a fixed order, so results are bitwise
// reproducible for a given table (they differ from the scalar path at
// rounding level because of FMA contraction and lane blocking).

namespace rvd::simd::avx2_impl {

namespace {

inline double hsum_ordered(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return ((lane[0] + lane[1]) + lane[2]) + lane[3];
}

}  // namespace

void coulomb(const SourceTable& tab, const Vec3& x, double eps, double& phi, Vec3& grad_phi) {
  const std::size_t n = tab.padded_size();
  const double* y1 = tab.y1();
  const double* y2 = tab.y2();
  const double* y3 = tab.y3();
  const double* w = tab.w();
  const __m256d x1 = _mm256_set1_pd(x.x);
  const __m256d x2 = _mm256_set1_pd(x.y);
  const __m256d x3 = _mm256_set1_pd(x.z);
  const __m256d e2 = _mm256_set1_pd(eps * eps);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc_p = _mm256_setzero_pd();
  __m256d acc_g1 = _mm256_setzero_pd();
  __m256d acc_g2 = _mm256_setzero_pd();
  __m256d acc_g3 = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n; i += 4) {
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(y1 + i), x1);
    const __m256d d2 = _mm256_sub_pd(_mm256_loadu_pd(y2 + i), x2);
    const __m256d d3 = _mm256_sub_pd(_mm256_loadu_pd(y3 + i), x3);
    __m256d s2 = _mm256_fmadd_pd(d1, d1, e2);
    s2 = _mm256_fmadd_pd(d2, d2, s2);
    s2 = _mm256_fmadd_pd(d3, d3, s2);
    const __m256d inv_s = _mm256_div_pd(one, _mm256_sqrt_pd(s2));
    const __m256d wi = _mm256_loadu_pd(w + i);
    const __m256d inv_s3 = _mm256_mul_pd(_mm256_mul_pd(inv_s, inv_s), inv_s);
    const __m256d c = _mm256_mul_pd(wi, inv_s3);
    acc_p = _mm256_fmadd_pd(wi, inv_s, acc_p);
    acc_g1 = _mm256_fmadd_pd(c, d1, acc_g1);
    acc_g2 = _mm256_fmadd_pd(c, d2, acc_g2);
    acc_g3 = _mm256_fmadd_pd(c, d3, acc_g3);
  }
  phi = hsum_ordered(acc_p);
  grad_phi = {hsum_ordered(acc_g1), hsum_ordered(acc_g2), hsum_ordered(acc_g3)};
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
  const __m256d x1 = _mm256_set1_pd(x.x);
  const __m256d x2 = _mm256_set1_pd(x.y);
  const __m256d x3 = _mm256_set1_pd(x.z);
  const __m256d e2 = _mm256_set1_pd(eps * eps);
  const __m256d ev = _mm256_set1_pd(eps);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n; i += 4) {
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(y1 + i), x1);
    const __m256d d2 = _mm256_sub_pd(_mm256_loadu_pd(y2 + i), x2);
    const __m256d d3 = _mm256_sub_pd(_mm256_loadu_pd(y3 + i), x3);
    __m256d s2 = _mm256_fmadd_pd(d1, d1, e2);
    s2 = _mm256_fmadd_pd(d2, d2, s2);
    s2 = _mm256_fmadd_pd(d3, d3, s2);
    const __m256d s = _mm256_sqrt_pd(s2);
    const __m256d inv_s = _mm256_div_pd(one, s);
    const __m256d inv_se = _mm256_div_pd(one, _mm256_add_pd(s, ev));
    const __m256d beta = _mm256_mul_pd(inv_s, _mm256_mul_pd(inv_se, inv_se));
    const __m256d u1 = _mm256_loadu_pd(v1 + i);
    const __m256d u2 = _mm256_loadu_pd(v2 + i);
    const __m256d u3 = _mm256_loadu_pd(v3 + i);
    __m256d dv = _mm256_mul_pd(d1, u1);
    dv = _mm256_fmadd_pd(d2, u2, dv);
    dv = _mm256_fmadd_pd(d3, u3, dv);
    const __m256d hw = _mm256_mul_pd(half, _mm256_loadu_pd(w + i));
    const __m256d hs = _mm256_mul_pd(hw, inv_s);
    const __m256d ca = _mm256_mul_pd(hw, _mm256_mul_pd(beta, dv));
    a1 = _mm256_fmadd_pd(hs, u1, _mm256_fmadd_pd(ca, d1, a1));
    a2 = _mm256_fmadd_pd(hs, u2, _mm256_fmadd_pd(ca, d2, a2));
    a3 = _mm256_fmadd_pd(hs, u3, _mm256_fmadd_pd(ca, d3, a3));
  }
  return {hsum_ordered(a1), hsum_ordered(a2), hsum_ordered(a3)};
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
  const __m256d x1 = _mm256_set1_pd(x.x);
  const __m256d x2 = _mm256_set1_pd(x.y);
  const __m256d x3 = _mm256_set1_pd(x.z);
  const __m256d e2 = _mm256_set1_pd(eps * eps);
  const __m256d ev = _mm256_set1_pd(eps);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d three = _mm256_set1_pd(3.0);

  __m256d acc_p = _mm256_setzero_pd();
  __m256d acc_g[3] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
  __m256d acc_a[3] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
  __m256d acc_m[3][3];
  for (auto& row : acc_m)
    for (auto& cell : row) cell = _mm256_setzero_pd();

  for (std::size_t i = 0; i < n; i += 4) {
    const __m256d d[3] = {_mm256_sub_pd(_mm256_loadu_pd(y1 + i), x1),
                          _mm256_sub_pd(_mm256_loadu_pd(y2 + i), x2),
                          _mm256_sub_pd(_mm256_loadu_pd(y3 + i), x3)};
    const __m256d u[3] = {_mm256_loadu_pd(v1 + i), _mm256_loadu_pd(v2 + i), _mm256_loadu_pd(v3 + i)};
    __m256d s2 = _mm256_fmadd_pd(d[0], d[0], e2);
    s2 = _mm256_fmadd_pd(d[1], d[1], s2);
    s2 = _mm256_fmadd_pd(d[2], d[2], s2);
    const __m256d s = _mm256_sqrt_pd(s2);
    const __m256d inv_s = _mm256_div_pd(one, s);
    const __m256d inv_se = _mm256_div_pd(one, _mm256_add_pd(s, ev));
    const __m256d inv_s3 = _mm256_mul_pd(_mm256_mul_pd(inv_s, inv_s), inv_s);
    const __m256d inv_se2 = _mm256_mul_pd(inv_se, inv_se);
    const __m256d beta = _mm256_mul_pd(inv_s, inv_se2);
    const __m256d big_g =
        _mm256_mul_pd(_mm256_fmadd_pd(three, s, ev), _mm256_mul_pd(inv_s3, _mm256_mul_pd(inv_se2, inv_se)));
    __m256d dv = _mm256_mul_pd(d[0], u[0]);
    dv = _mm256_fmadd_pd(d[1], u[1], dv);
    dv = _mm256_fmadd_pd(d[2], u[2], dv);

    const __m256d wi = _mm256_loadu_pd(w + i);
    const __m256d hw = _mm256_mul_pd(half, wi);

    acc_p = _mm256_fmadd_pd(wi, inv_s, acc_p);
    const __m256d cg = _mm256_mul_pd(wi, inv_s3);
    for (int k = 0; k < 3; ++k) acc_g[k] = _mm256_fmadd_pd(cg, d[k], acc_g[k]);

    const __m256d hs = _mm256_mul_pd(hw, inv_s);
    const __m256d ca = _mm256_mul_pd(hw, _mm256_mul_pd(beta, dv));
    for (int k = 0; k < 3; ++k) acc_a[k] = _mm256_fmadd_pd(hs, u[k], _mm256_fmadd_pd(ca, d[k], acc_a[k]));

    // M_km: e_k v_m + (f_k - hb v_k) d_m - delta_km hb (d.v)
    const __m256d hb = _mm256_mul_pd(hw, beta);
    const __m256d hs3 = _mm256_mul_pd(hw, inv_s3);
    const __m256d hg = _mm256_mul_pd(hw, _mm256_mul_pd(big_g, dv));
    const __m256d hb_dv = _mm256_mul_pd(hb, dv);
    for (int k = 0; k < 3; ++k) {
      const __m256d e_k = _mm256_mul_pd(hs3, d[k]);
      const __m256d g_k = _mm256_fnmadd_pd(hb, u[k], _mm256_mul_pd(hg, d[k]));
      for (int mi = 0; mi < 3; ++mi)
        acc_m[k][mi] = _mm256_fmadd_pd(e_k, u[mi], _mm256_fmadd_pd(g_k, d[mi], acc_m[k][mi]));
      acc_m[k][k] = _mm256_sub_pd(acc_m[k][k], hb_dv);
    }
  }

  FieldSums out;
  out.phi = hsum_ordered(acc_p);
  out.grad_phi = {hsum_ordered(acc_g[0]), hsum_ordered(acc_g[1]), hsum_ordered(acc_g[2])};
  out.a = {hsum_ordered(acc_a[0]), hsum_ordered(acc_a[1]), hsum_ordered(acc_a[2])};
  for (int k = 0; k < 3; ++k)
    for (int mi = 0; mi < 3; ++mi) out.grad_a(k, mi) = hsum_ordered(acc_m[k][mi]);
  return out;
}

}  // namespace rvd::simd::avx2_impl
