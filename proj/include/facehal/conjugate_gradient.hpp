#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "facehal/image.hpp"

namespace facehal {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  // ||b - A x_i|| / ||b|| for i = 0..iterations
  std::vector<double> residual_history;
};

// Conjugate gradient for a symmetric positive definite operator given as
// apply(in, out). x holds the starting guess on entry and the solution on
// exit. Stops once ||b - Ax|| <= tol * ||b||.
template <typename ApplyFn>
CgResult conjugate_gradient(ApplyFn&& apply, std::span<const double> b, std::vector<double>& x,
                            double tol, int max_iter) {
  const std::size_t n = b.size();
  std::vector<double> r(n), p(n), q(n);
  apply(std::span<const double>(x), std::span<double>(q));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

  const double b_norm = norm2(b);
  const double scale = b_norm > 0.0 ? b_norm : 1.0;
  double rr = dot(r, r);

  CgResult res;
  res.residual_history.push_back(std::sqrt(rr) / scale);
  if (std::sqrt(rr) <= tol * scale) {
    res.relative_residual = res.residual_history.back();
    res.converged = true;
    return res;
  }
  p = r;
  for (int it = 0; it < max_iter; ++it) {
    apply(std::span<const double>(p), std::span<double>(q));
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // lost positive definiteness or exact breakdown
    const double alpha = rr / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double rr_new = dot(r, r);
    res.iterations = it + 1;
    res.residual_history.push_back(std::sqrt(rr_new) / scale);
    if (std::sqrt(rr_new) <= tol * scale) {
      res.converged = true;
      rr = rr_new;
      break;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  res.relative_residual = std::sqrt(rr) / scale;
  return res;
}

}  // namespace facehal
