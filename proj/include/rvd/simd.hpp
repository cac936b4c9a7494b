#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rvd/vec.hpp"

namespace rvd::simd {

// Runtime-selected kernel backend. The scalar path is the reference; the
// AVX2 path must agree with it to rounding (equivalence-tested). Within one
// backend results are bitwise deterministic and independent of the thread
// count, since parallel loops only split over independent targets.
enum class Backend { scalar, avx2 };

Backend detect_best();
bool supported(Backend b);
Backend active();
void set_active(Backend b);
std::string name(Backend b);
bool set_active_by_name(const std::string& s);  // "scalar" | "avx2" | "auto"

// Structure-of-arrays source set: positions y, transport velocities v,
// weights w. Arrays are padded to a lane multiple with zero weight and
// far-away positions, so padded lanes contribute exactly zero.
class SourceTable {
 public:
  SourceTable() = default;
  explicit SourceTable(std::size_t n);

  void set_source(std::size_t i, const Vec3& y, double w);
  void set_velocity(std::size_t i, const Vec3& v);
  Vec3 position(std::size_t i) const { return {y1_[i], y2_[i], y3_[i]}; }
  Vec3 velocity(std::size_t i) const { return {v1_[i], v2_[i], v3_[i]}; }
  double weight(std::size_t i) const { return w_[i]; }

  std::size_t size() const { return n_; }
  std::size_t padded_size() const { return w_.size(); }

  const double* y1() const { return y1_.data(); }
  const double* y2() const { return y2_.data(); }
  const double* y3() const { return y3_.data(); }
  const double* v1() const { return v1_.data(); }
  const double* v2() const { return v2_.data(); }
  const double* v3() const { return v3_.data(); }
  const double* w() const { return w_.data(); }

 private:
  std::size_t n_ = 0;
  std::vector<double> y1_, y2_, y3_, v1_, v2_, v3_, w_;
};

struct FieldSums {
  double phi = 0.0;  // sum w / s
  Vec3 grad_phi;     // sum w d / s^3            (d = y - x)
  Vec3 a;            // 1/2 sum w [v/s + d (d.v) beta]
  Mat3 grad_a;       // entry (k,m) = dA_m/dx_k
};

// full sums over the table at one target point; no self-exclusion here
void coulomb(const SourceTable& tab, const Vec3& x, double eps, double& phi, Vec3& grad_phi);
Vec3 darwin_a(const SourceTable& tab, const Vec3& x, double eps);
FieldSums all_fields(const SourceTable& tab, const Vec3& x, double eps);

namespace scalar_impl {
void coulomb(const SourceTable& tab, const Vec3& x, double eps, double& phi, Vec3& grad_phi);
Vec3 darwin_a(const SourceTable& tab, const Vec3& x, double eps);
FieldSums all_fields(const SourceTable& tab, const Vec3& x, double eps);
}  // namespace scalar_impl

#if defined(RVD_HAVE_AVX2)
namespace avx2_impl {
void coulomb(const SourceTable& tab, const Vec3& x, double eps, double& phi, Vec3& grad_phi);
Vec3 darwin_a(const SourceTable& tab, const Vec3& x, double eps);
FieldSums all_fields(const SourceTable& tab, const Vec3& x, double eps);
}  // namespace avx2_impl
#endif

}  // namespace rvd::simd
