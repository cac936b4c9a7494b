#pragma once

#include <cmath>

#include "rvd/errors.hpp"
#include "rvd/vec.hpp"

namespace rvd {

// Regularization length for the singular kernels. eps = 0 reproduces the
// exact kernels. Softening convention, applied everywhere downstream:
//   1/|y-x|  ->  1/s              with s = sqrt(|y-x|^2 + eps^2)
//   omega    ->  (y-x)/(s + eps)
// The omega denominator is s + eps rather than s so that the columns of the
// softened matrix kernel stay exactly divergence-free; this keeps
// trace(grad A) = 0 at rounding level while the kernel gradient remains the
// exact derivative of the kernel. Entries are dominated by the eps = 0 values
// and the 2/|y-x| and 6/|y-x|^2 sup-entry bounds survive unchanged.
struct Softening {
  double eps = 0.0;

  Softening() = default;
  explicit Softening(double e) : eps(e) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw invalid_spec("softening length must be finite and >= 0");
  }
};

// relativistic velocity map v(g) = g / sqrt(1 + |g|^2); |v| < 1 always
inline Vec3 velocity(const Vec3& g) {
  const double inv = 1.0 / std::sqrt(1.0 + norm2(g));
  return inv * g;
}

// Dv(g) = (1 + |g|^2)^{-1/2} [id - g (x) g / (1 + |g|^2)]
// Symmetric positive definite; det = (1 + |g|^2)^{-5/2}; the lowest
// eigenvalue is (1 + |g|^2)^{-3/2} along g, (1 + |g|^2)^{-1/2} transverse.
inline Mat3 velocity_jacobian(const Vec3& g) {
  const double q = 1.0 + norm2(g);
  const double inv_sqrt = 1.0 / std::sqrt(q);
  Mat3 r = Mat3::identity();
  r -= (1.0 / q) * outer(g, g);
  r *= inv_sqrt;
  return r;
}

namespace detail {

// shared geometry of a softened pair: d = y - x, s = sqrt(|d|^2 + eps^2)
struct pair_geometry {
  Vec3 d;
  double s;
};

inline pair_geometry make_pair_geometry(const Vec3& x, const Vec3& y, Softening eps) {
  const Vec3 d = y - x;
  const double r2 = norm2(d);
  if (eps.eps == 0.0 && r2 == 0.0) throw degenerate_kernel("kernel evaluated at coincident points with eps = 0");
  return {d, std::sqrt(r2 + eps.eps * eps.eps)};
}

}  // namespace detail

// matrix kernel [id + omega (x) omega] / |y-x|, softened as documented above:
//   K_eps(x, y) = id/s + d (x) d / (s (s+eps)^2)
inline Mat3 darwin_kernel(const Vec3& x, const Vec3& y, Softening eps = {}) {
  const auto [d, s] = detail::make_pair_geometry(x, y, eps);
  const double se = s + eps.eps;
  const double beta = 1.0 / (s * se * se);
  Mat3 r = outer(d, d);
  r *= beta;
  const double inv_s = 1.0 / s;
  r(0, 0) += inv_s;
  r(1, 1) += inv_s;
  r(2, 2) += inv_s;
  return r;
}

// rank-3 spatial gradient of the matrix kernel, entry (i, m, k) = d K_im / d x_k
struct KernelGradient {
  double e[3][3][3] = {};

  double& operator()(int i, int m, int k) { return e[i][m][k]; }
  double operator()(int i, int m, int k) const { return e[i][m][k]; }

  double sup_norm() const {
    double r = 0.0;
    for (const auto& a : e)
      for (const auto& b : a)
        for (double v : b) r = std::max(r, std::abs(v));
    return r;
  }
};

// (dK)_imk = delta_im d_k / s^3 + G d_i d_m d_k - beta (delta_ik d_m + delta_mk d_i)
// with G = (3s + eps) / (s^3 (s+eps)^3), beta = 1 / (s (s+eps)^2).
// At eps = 0 this is |y-x|^{-2} [delta_im w_k - delta_km w_i - delta_ik w_m + 3 w_i w_k w_m].
inline KernelGradient darwin_kernel_gradient(const Vec3& x, const Vec3& y, Softening eps = {}) {
  const auto [d, s] = detail::make_pair_geometry(x, y, eps);
  const double se = s + eps.eps;
  const double beta = 1.0 / (s * se * se);
  const double inv_s3 = 1.0 / (s * s * s);
  const double big_g = (3.0 * s + eps.eps) * inv_s3 / (se * se * se);
  KernelGradient g;
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 3; ++k) {
        double v = big_g * d[i] * d[m] * d[k];
        if (i == m) v += d[k] * inv_s3;
        if (i == k) v -= beta * d[m];
        if (m == k) v -= beta * d[i];
        g(i, m, k) = v;
      }
  return g;
}

// Interpolation constant for Newtonian-type kernels of order m in {1, 2},
// between the L^r and L^s norms with r < 3/(3-m) < s. Only the (r, s) =
// (1, inf) endpoint has an explicit value, 3 (4 pi / m)^{m/3} / (3 - m);
// other exponent pairs must bring their own constant.
inline double pallard_constant(int m, double r, double s) {
  if (m != 1 && m != 2) throw invalid_exponents("kernel order m must be 1 or 2");
  const double r0 = 3.0 / (3.0 - m);
  if (!(r < r0 && r0 < s)) throw invalid_exponents("exponents must satisfy r < 3/(3-m) < s");
  if (!(r == 1.0 && std::isinf(s)))
    throw invalid_exponents("only the (r, s) = (1, inf) endpoint constant is explicit");
  return 3.0 * std::pow(4.0 * M_PI / m, m / 3.0) / (3.0 - m);
}

inline double pallard_constant(int m, double r, double s, double supplied) {
  if (m != 1 && m != 2) throw invalid_exponents("kernel order m must be 1 or 2");
  const double r0 = 3.0 / (3.0 - m);
  if (!(r < r0 && r0 < s)) throw invalid_exponents("exponents must satisfy r < 3/(3-m) < s");
  if (!(supplied > 0.0) || !std::isfinite(supplied)) throw invalid_exponents("supplied constant must be finite and positive");
  return supplied;
}

}  // namespace rvd
