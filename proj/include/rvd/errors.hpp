#pragma once

#include <stdexcept>
#include <string>

namespace rvd {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct degenerate_kernel : error {
  using error::error;
};

struct invalid_exponents : error {
  using error::error;
};

struct empty_ensemble : error {
  using error::error;
};

struct invalid_spec : error {
  using error::error;
};

struct no_convergence : error {
  double residual;
  int iterations;
  explicit no_convergence(double res, int iters, const std::string& context = "")
      : error("fixed-point iteration did not converge: residual " + std::to_string(res) + " after " +
              std::to_string(iters) + " iterations" + (context.empty() ? "" : " " + context)),
        residual(res),
        iterations(iters) {}
};

struct size_mismatch : error {
  using error::error;
};

struct weight_mismatch : error {
  using error::error;
};

struct theta_out_of_range : error {
  using error::error;
};

struct label_mismatch : error {
  using error::error;
};

struct regime_violated : error {
  using error::error;
};

struct non_positive_q : error {
  using error::error;
};

struct quadrature_too_coarse : error {
  using error::error;
};

struct io_error : error {
  using error::error;
};

}  // namespace rvd
