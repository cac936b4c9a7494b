#include <doctest.h>

#include <cmath>

#include "rvd/kernels.hpp"
#include "rvd/rng.hpp"
#include "rvd/simd.hpp"
#include "rvd/threading.hpp"

using namespace rvd;

namespace {

simd::SourceTable random_table(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  simd::SourceTable tab(n);
  for (std::size_t i = 0; i < n; ++i) {
    tab.set_source(i, rng.gaussian_vec3(1.0), rng.uniform(0.5, 2.0) / static_cast<double>(n));
    tab.set_velocity(i, 0.9 * rng.ball_vec3(1.0));
  }
  return tab;
}

// slow direct evaluation through the kernel-module objects
simd::FieldSums oracle_sums(const simd::SourceTable& tab, const Vec3& x, double eps) {
  simd::FieldSums out;
  const Softening s(eps);
  for (std::size_t i = 0; i < tab.size(); ++i) {
    const Vec3 y = tab.position(i);
    const Vec3 v = tab.velocity(i);
    const double w = tab.weight(i);
    const Vec3 d = y - x;
    const double se = std::sqrt(norm2(d) + eps * eps);
    out.phi += w / se;
    out.grad_phi += (w / (se * se * se)) * d;
    out.a += (0.5 * w) * (darwin_kernel(x, y, s) * v);
    const KernelGradient dk = darwin_kernel_gradient(x, y, s);
    for (int k = 0; k < 3; ++k)
      for (int m = 0; m < 3; ++m)
        out.grad_a(k, m) += 0.5 * w * (dk(m, 0, k) * v.x + dk(m, 1, k) * v.y + dk(m, 2, k) * v.z);
  }
  return out;
}

void check_close(const simd::FieldSums& a, const simd::FieldSums& b, double tol) {
  CHECK(std::abs(a.phi - b.phi) <= tol * (1.0 + std::abs(b.phi)));
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(a.grad_phi[i] - b.grad_phi[i]) <= tol * (1.0 + norm(b.grad_phi)));
    CHECK(std::abs(a.a[i] - b.a[i]) <= tol * (1.0 + norm(b.a)));
  }
  for (int k = 0; k < 3; ++k)
    for (int m = 0; m < 3; ++m)
      CHECK(std::abs(a.grad_a(k, m) - b.grad_a(k, m)) <= tol * (1.0 + sup_norm(b.grad_a)));
}

}  // namespace

TEST_CASE("scalar backend agrees with the kernel-module oracle") {
  const auto tab = random_table(137, 5);
  Rng rng(6);
  for (int t = 0; t < 40; ++t) {
    const Vec3 x = rng.gaussian_vec3(1.2);
    for (double eps : {0.05, 0.3}) {
      const simd::FieldSums ref = oracle_sums(tab, x, eps);
      const simd::FieldSums got = simd::scalar_impl::all_fields(tab, x, eps);
      check_close(got, ref, 1e-13);
      double phi = 0.0;
      Vec3 g;
      simd::scalar_impl::coulomb(tab, x, eps, phi, g);
      CHECK(std::abs(phi - ref.phi) <= 1e-13 * (1.0 + std::abs(ref.phi)));
      CHECK(norm(g - ref.grad_phi) <= 1e-13 * (1.0 + norm(ref.grad_phi)));
      CHECK(norm(simd::scalar_impl::darwin_a(tab, x, eps) - ref.a) <= 1e-13 * (1.0 + norm(ref.a)));
    }
  }
}

TEST_CASE("vector backend equivalence with the scalar reference") {
  if (!simd::supported(simd::Backend::avx2)) {
    MESSAGE("avx2 backend not available on this machine; equivalence pair not exercised");
    return;
  }
  const auto tab = random_table(229, 9);  // odd size: padding lanes in play
  Rng rng(10);
  for (int t = 0; t < 60; ++t) {
    const Vec3 x = rng.gaussian_vec3(1.5);
    for (double eps : {0.0, 0.05, 0.7}) {
      const simd::FieldSums ref = simd::scalar_impl::all_fields(tab, x, eps);
      const simd::FieldSums got = simd::avx2_impl::all_fields(tab, x, eps);
      check_close(got, ref, 1e-12);
      double phi_s = 0.0, phi_v = 0.0;
      Vec3 gs, gv;
      simd::scalar_impl::coulomb(tab, x, eps, phi_s, gs);
      simd::avx2_impl::coulomb(tab, x, eps, phi_v, gv);
      CHECK(std::abs(phi_s - phi_v) <= 1e-12 * (1.0 + std::abs(phi_s)));
      CHECK(norm(gs - gv) <= 1e-12 * (1.0 + norm(gs)));
      CHECK(norm(simd::scalar_impl::darwin_a(tab, x, eps) - simd::avx2_impl::darwin_a(tab, x, eps)) <=
            1e-12);
    }
  }
}

TEST_CASE("dispatch honors the active backend and padding is inert") {
  const simd::Backend saved = simd::active();
  const auto tab = random_table(3, 21);  // padded to 4
  const Vec3 x{0.1, -0.2, 0.3};

  simd::set_active(simd::Backend::scalar);
  const simd::FieldSums s = simd::all_fields(tab, x, 0.1);
  const simd::FieldSums ref = oracle_sums(tab, x, 0.1);
  check_close(s, ref, 1e-13);

  if (simd::supported(simd::Backend::avx2)) {
    simd::set_active(simd::Backend::avx2);
    check_close(simd::all_fields(tab, x, 0.1), ref, 1e-12);
  }
  simd::set_active(saved);

  CHECK(simd::set_active_by_name("auto"));
  CHECK_FALSE(simd::set_active_by_name("sse9"));
  simd::set_active(saved);
}

TEST_CASE("results independent of thread count") {
  const auto tab = random_table(513, 33);
  std::vector<Vec3> probes;
  Rng rng(34);
  for (int i = 0; i < 64; ++i) probes.push_back(rng.gaussian_vec3(1.0));

  auto eval_all = [&] {
    std::vector<double> out;
    std::vector<simd::FieldSums> sums(probes.size());
    detail::parallel_for(probes.size(), [&](std::size_t i) { sums[i] = simd::all_fields(tab, probes[i], 0.05); });
    for (const auto& f : sums) {
      out.push_back(f.phi);
      for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 3; ++m) out.push_back(f.grad_a(k, m));
    }
    return out;
  };

  set_thread_count(1);
  const auto ref = eval_all();
  for (int t : {2, 3, 8}) {
    set_thread_count(t);
    const auto got = eval_all();
    REQUIRE(got.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got[i] == ref[i]);
  }
  set_thread_count(1);
}
