#include "rvd/simd.hpp"

#include <atomic>

#include "rvd/errors.hpp"
#include "rvd/threading.hpp"

namespace rvd {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(n < 0 ? 1 : n); }
int thread_count() { return g_threads.load(); }

}  // namespace rvd

namespace rvd::simd {

namespace {

constexpr std::size_t kLane = 4;
constexpr double kPadCoord = 1e30;  // far away: padded lanes stay finite and weightless

Backend& active_slot() {
  static Backend b = detect_best();
  return b;
}

}  // namespace

bool supported(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(RVD_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Backend detect_best() { return supported(Backend::avx2) ? Backend::avx2 : Backend::scalar; }

Backend active() { return active_slot(); }

void set_active(Backend b) {
  if (!supported(b)) throw invalid_spec("requested kernel backend is not supported on this machine");
  active_slot() = b;
}

std::string name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool set_active_by_name(const std::string& s) {
  if (s == "auto") {
    set_active(detect_best());
    return true;
  }
  if (s == "scalar") {
    set_active(Backend::scalar);
    return true;
  }
  if (s == "avx2") {
    set_active(Backend::avx2);
    return true;
  }
  return false;
}

SourceTable::SourceTable(std::size_t n) : n_(n) {
  const std::size_t padded = (n + kLane - 1) / kLane * kLane;
  y1_.assign(padded, kPadCoord);
  y2_.assign(padded, kPadCoord);
  y3_.assign(padded, kPadCoord);
  v1_.assign(padded, 0.0);
  v2_.assign(padded, 0.0);
  v3_.assign(padded, 0.0);
  w_.assign(padded, 0.0);
}

void SourceTable::set_source(std::size_t i, const Vec3& y, double w) {
  y1_[i] = y.x;
  y2_[i] = y.y;
  y3_[i] = y.z;
  w_[i] = w;
}

void SourceTable::set_velocity(std::size_t i, const Vec3& v) {
  v1_[i] = v.x;
  v2_[i] = v.y;
  v3_[i] = v.z;
}

void coulomb(const SourceTable& tab, const Vec3& x, double eps, double& phi, Vec3& grad_phi) {
#if defined(RVD_HAVE_AVX2)
  if (active() == Backend::avx2) {
    avx2_impl::coulomb(tab, x, eps, phi, grad_phi);
    return;
  }
#endif
  scalar_impl::coulomb(tab, x, eps, phi, grad_phi);
}

Vec3 darwin_a(const SourceTable& tab, const Vec3& x, double eps) {
#if defined(RVD_HAVE_AVX2)
  if (active() == Backend::avx2) return avx2_impl::darwin_a(tab, x, eps);
#endif
  return scalar_impl::darwin_a(tab, x, eps);
}

FieldSums all_fields(const SourceTable& tab, const Vec3& x, double eps) {
#if defined(RVD_HAVE_AVX2)
  if (active() == Backend::avx2) return avx2_impl::all_fields(tab, x, eps);
#endif
  return scalar_impl::all_fields(tab, x, eps);
}

}  // namespace rvd::simd
