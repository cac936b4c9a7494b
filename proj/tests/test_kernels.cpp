#include <doctest.h>

#include <cmath>
#include <limits>

#include "rvd/kernels.hpp"
#include "rvd/rng.hpp"

using namespace rvd;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("velocity: closed-form values") {
  const Vec3 zero = velocity({0.0, 0.0, 0.0});
  CHECK(zero.x == 0.0);
  CHECK(zero.y == 0.0);
  CHECK(zero.z == 0.0);

  const Vec3 vx = velocity({1.0, 0.0, 0.0});
  CHECK(vx.x == doctest::Approx(0.7071067811865475).epsilon(1e-15));
  CHECK(vx.y == 0.0);

  // |g| = 1e3 in a few directions: speed pinned just below 1
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Vec3 g = rng.gaussian_vec3(1.0);
    g *= 1e3 / norm(g);
    const double speed = norm(velocity(g));
    CHECK(speed > 0.9999995);
    CHECK(speed < 1.0);
  }
}

TEST_CASE("velocity: |v| < 1 and monotone in |g|") {
  Rng rng(11);
  for (int t = 0; t < 10000; ++t) {
    const Vec3 g = rng.gaussian_vec3(std::exp(rng.uniform(-3.0, 6.0)));
    CHECK(norm(velocity(g)) < 1.0);
  }
  // 1-D sweep: strictly increasing speed
  double prev = -1.0;
  for (int k = 0; k <= 200; ++k) {
    const double r = 0.05 * k;
    const double speed = norm(velocity({r, 0.0, 0.0}));
    CHECK(speed > prev);
    prev = speed;
  }
}

TEST_CASE("velocity_jacobian: identity at zero, exact determinant, PD floor") {
  const Mat3 id = velocity_jacobian({0.0, 0.0, 0.0});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(id(i, j) == (i == j ? 1.0 : 0.0));

  CHECK(det(velocity_jacobian({1.0, 1.0, 1.0})) == doctest::Approx(0.03125).epsilon(1e-13));

  Rng rng(17);
  for (int t = 0; t < 10000; ++t) {
    const Vec3 g = rng.gaussian_vec3(1.5);
    const Mat3 dv = velocity_jacobian(g);
    const double q = 1.0 + norm2(g);
    CHECK(std::abs(det(dv) - std::pow(q, -2.5)) <= 1e-12);

    const Vec3 xi = rng.gaussian_vec3(1.0);
    const double quad = dot(dv * xi, xi);
    CHECK(quad >= std::pow(q, -1.5) * norm2(xi) - 1e-12 * norm2(xi));

    // symmetry
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(dv(i, j) == dv(j, i));
  }
}

TEST_CASE("velocity_jacobian matches central differences with order-2 Richardson") {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    const Vec3 g = rng.gaussian_vec3(1.0);
    auto fd_error = [&](double h) {
      double worst = 0.0;
      const Mat3 dv = velocity_jacobian(g);
      for (int k = 0; k < 3; ++k) {
        Vec3 gp = g, gm = g;
        gp[k] += h;
        gm[k] -= h;
        const Vec3 diff = (1.0 / (2.0 * h)) * (velocity(gp) - velocity(gm));
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(diff[i] - dv(i, k)));
      }
      return worst;
    };
    const double e1 = fd_error(1e-3);
    const double e2 = fd_error(5e-4);
    if (e2 > 1e-12) {  // above roundoff, the ratio must be ~4
      CHECK(e1 / e2 >= 3.5);
      CHECK(e1 / e2 <= 4.5);
    }
  }
}

TEST_CASE("darwin_kernel: hand value, symmetry, degenerate error") {
  const Mat3 k = darwin_kernel({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
  CHECK(k(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(k(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k(2, 2) == doctest::Approx(1.0).epsilon(1e-15));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(k(i, j) == 0.0);

  CHECK_THROWS_AS(darwin_kernel({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), degenerate_kernel);
  CHECK_NOTHROW(darwin_kernel({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, Softening(0.1)));

  Rng rng(31);
  for (int t = 0; t < 1000; ++t) {
    const Vec3 x = rng.gaussian_vec3(1.0);
    const Vec3 y = rng.gaussian_vec3(1.0);
    if (norm(y - x) < 1e-12) continue;
    const Mat3 kxy = darwin_kernel(x, y);
    const Mat3 kyx = darwin_kernel(y, x);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        CHECK(kxy(i, j) == kyx(i, j));  // exchange symmetry, entrywise
        CHECK(kxy(i, j) == kxy(j, i));  // matrix symmetry
      }
  }
}

TEST_CASE("darwin_kernel: sup-entry bound 2/|y-x| on 1e5 pairs") {
  Rng rng(37);
  for (int t = 0; t < 100000; ++t) {
    const Vec3 x = rng.gaussian_vec3(1.0);
    const Vec3 y = rng.gaussian_vec3(1.0);
    const double r = norm(y - x);
    if (r < 1e-12) continue;
    CHECK(sup_norm(darwin_kernel(x, y)) <= 2.0 / r * (1.0 + 1e-14));
  }
}

TEST_CASE("darwin_kernel: softened entries dominated by exact entries") {
  Rng rng(41);
  for (int t = 0; t < 20000; ++t) {
    const Vec3 x = rng.gaussian_vec3(1.0);
    const Vec3 y = rng.gaussian_vec3(1.0);
    const double r = norm(y - x);
    if (r < 1e-12) continue;
    const Mat3 exact = darwin_kernel(x, y);
    for (double eps : {1e-3, 0.05, 0.3, 2.0}) {
      const Mat3 soft = darwin_kernel(x, y, Softening(eps));
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(soft(i, j)) <= std::abs(exact(i, j)) + 1e-15);
    }
  }
}

TEST_CASE("darwin_kernel_gradient: hand entry, sup bound, FD oracle") {
  const KernelGradient g = darwin_kernel_gradient({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
  CHECK(g(0, 0, 0) == doctest::Approx(2.0).epsilon(1e-14));

  Rng rng(43);
  for (int t = 0; t < 100000; ++t) {
    const Vec3 x = rng.gaussian_vec3(1.0);
    const Vec3 y = rng.gaussian_vec3(1.0);
    const double r = norm(y - x);
    if (r < 1e-12) continue;
    CHECK(darwin_kernel_gradient(x, y).sup_norm() <= 6.0 / (r * r) * (1.0 + 1e-13));
  }

  // central differences at separation >= 1
  for (int t = 0; t < 50; ++t) {
    const Vec3 x = rng.gaussian_vec3(0.3);
    Vec3 y = rng.gaussian_vec3(1.0);
    const double r = norm(y - x);
    if (r < 1.0) y = x + (1.5 / r) * (y - x);
    for (double eps : {0.0, 0.2}) {
      const KernelGradient an = darwin_kernel_gradient(x, y, Softening(eps));
      const double h = 1e-5;
      double worst = 0.0, scale = 0.0;
      for (int k = 0; k < 3; ++k) {
        Vec3 xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Mat3 fd = (1.0 / (2.0 * h)) * (darwin_kernel(xp, y, Softening(eps)) - darwin_kernel(xm, y, Softening(eps)));
        for (int i = 0; i < 3; ++i)
          for (int m = 0; m < 3; ++m) {
            worst = std::max(worst, std::abs(fd(i, m) - an(i, m, k)));
            scale = std::max(scale, std::abs(an(i, m, k)));
          }
      }
      CHECK(worst <= 1e-6 * std::max(scale, 1.0));
    }
  }
}

TEST_CASE("darwin kernel: softened columns are divergence-free") {
  // sum_k dK_imk with k = i must vanish identically for every eps
  Rng rng(47);
  for (int t = 0; t < 2000; ++t) {
    const Vec3 x = rng.gaussian_vec3(1.0);
    const Vec3 y = rng.gaussian_vec3(1.0);
    for (double eps : {0.0, 0.01, 0.05, 0.5}) {
      if (eps == 0.0 && norm(y - x) < 1e-12) continue;
      const KernelGradient g = darwin_kernel_gradient(x, y, Softening(eps));
      for (int m = 0; m < 3; ++m) {
        const double div = g(0, m, 0) + g(1, m, 1) + g(2, m, 2);
        CHECK(std::abs(div) <= 1e-12 * std::max(1.0, g.sup_norm()));
      }
    }
  }
}

TEST_CASE("pallard_constant: explicit endpoint values and validation") {
  CHECK(pallard_constant(1, 1.0, kInf) == doctest::Approx(3.0 * std::cbrt(4.0 * M_PI) / 2.0).epsilon(1e-15));
  CHECK(pallard_constant(2, 1.0, kInf) == doctest::Approx(3.0 * std::pow(2.0 * M_PI, 2.0 / 3.0)).epsilon(1e-15));
  // frozen arithmetic oracle on the closed formula
  CHECK(pallard_constant(1, 1.0, kInf) == doctest::Approx(3.48734205452888).epsilon(1e-14));
  CHECK(pallard_constant(2, 1.0, kInf) == doctest::Approx(10.2150657644303).epsilon(1e-14));

  CHECK_THROWS_AS(pallard_constant(1, 2.0, kInf), invalid_exponents);   // r >= r0
  CHECK_THROWS_AS(pallard_constant(2, 1.0, 2.0), invalid_exponents);    // s <= r0
  CHECK_THROWS_AS(pallard_constant(3, 1.0, kInf), invalid_exponents);   // bad order
  CHECK_THROWS_AS(pallard_constant(1, 1.2, 100.0), invalid_exponents);  // no explicit constant
  CHECK(pallard_constant(1, 1.2, 100.0, 7.5) == 7.5);                   // caller-supplied
}

TEST_CASE("softening validation") {
  CHECK_THROWS_AS(Softening(-0.1), invalid_spec);
  CHECK_THROWS_AS(Softening(std::numeric_limits<double>::quiet_NaN()), invalid_spec);
  CHECK(Softening(0.0).eps == 0.0);
}
