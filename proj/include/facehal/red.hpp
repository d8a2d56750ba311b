#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "facehal/degradation.hpp"
#include "facehal/denoise.hpp"
#include "facehal/error.hpp"
#include "facehal/image.hpp"

namespace facehal {

enum class RedInit { bicubic, zeros };

inline std::string to_string(RedInit i) { return i == RedInit::zeros ? "zeros" : "bicubic"; }

inline RedInit red_init_from_string(const std::string& s) {
  if (s == "bicubic") return RedInit::bicubic;
  if (s == "zeros") return RedInit::zeros;
  throw Error("unknown RED init '" + s + "'");
}

struct RedConfig {
  double lambda = 0.23;
  int outer_iters = 30;
  NoiseSchedule schedule{};
  double cg_tol = 1e-6;
  int cg_max_iter = 200;
  RedInit init = RedInit::bicubic;
  // stop once ||x_{k+1} - x_k|| / ||x_k|| falls below this; 0 disables
  double min_rel_change = 1e-5;
  // energy and gradient cost one extra denoiser call per iteration
  bool record_trace = true;

  void validate() const {
    if (!(lambda > 0.0)) throw Error("RED lambda must be > 0");
    if (outer_iters < 1) throw Error("RED outer_iters must be >= 1");
    if (schedule.steps != outer_iters) {
      throw Error("noise schedule length " + std::to_string(schedule.steps) +
                  " must equal outer_iters " + std::to_string(outer_iters));
    }
  }
};

struct RedIteration {
  int iteration = 0;
  double energy = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  double cg_residual = 0.0;
  int cg_iterations = 0;
  double rel_change = 0.0;
};

struct RedTrace {
  std::vector<RedIteration> records;

  void write_csv(std::ostream& out) const {
    out << "iteration,energy,grad_norm,cg_residual,rel_change\n";
    out << std::setprecision(17);
    for (const auto& r : records) {
      out << r.iteration << ',' << r.energy << ',' << r.grad_norm << ',' << r.cg_residual << ','
          << r.rel_change << '\n';
    }
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_csv(out);
  }
};

struct RedResult {
  Image x;
  RedTrace trace;
};

namespace detail {

inline void check_red_shapes(const Image& y, const Image& x, const DegradationOperator& op) {
  if (op.lr_size(x.width()) != y.width() || op.lr_size(x.height()) != y.height() ||
      x.channels() != y.channels()) {
    throw ShapeError("RED: LR " + y.shape_string() + " inconsistent with HR " + x.shape_string() +
                     " at scale " + std::to_string(op.scale()));
  }
}

inline double red_energy_given(const Image& y, const Image& x, const Image& hx,
                               const DegradationOperator& op, double lambda) {
  const Image residual = subtract(y, op.apply(x));
  const double data = 0.5 * dot(residual.samples(), residual.samples());
  double reg = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) reg += x.data()[i] * (x.data()[i] - hx.data()[i]);
  return data + 0.5 * lambda * reg;
}

inline std::vector<double> red_gradient_given(const Image& y, const Image& x, const Image& hx,
                                              const DegradationOperator& op, double lambda) {
  const Image back = op.adjoint(subtract(op.apply(x), y), x.width(), x.height());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = back.data()[i] + lambda * (x.data()[i] - hx.data()[i]);
  }
  return g;
}

}  // namespace detail

// E(x) = 1/2 ||y - Hx||^2 + lambda/2 * x^T (x - h(x))
inline double red_energy(const Image& y, const Image& x, const DegradationOperator& op,
                         const Denoiser& d, double sigma, double lambda) {
  detail::check_red_shapes(y, x, op);
  return detail::red_energy_given(y, x, denoise(d, x, sigma), op, lambda);
}

// H^T (Hx - y) + lambda (x - h(x)); the true gradient of red_energy when h is
// a symmetric linear smoother.
inline ImageVector red_gradient(const Image& y, const Image& x, const DegradationOperator& op,
                                const Denoiser& d, double sigma, double lambda) {
  detail::check_red_shapes(y, x, op);
  return {x.width(), x.height(), x.channels(),
          detail::red_gradient_given(y, x, denoise(d, x, sigma), op, lambda)};
}

inline Image red_initial_guess(const Image& y, const DegradationOperator& op, RedInit init) {
  const int w = y.width() * op.scale();
  const int h = y.height() * op.scale();
  if (init == RedInit::zeros) return Image(w, h, y.channels());
  return bicubic_resize(y, w, h);
}

// Fixed-point iteration x_{k+1} = (H^T H + lambda I)^{-1} (H^T y + lambda h(x_k)),
// with h frozen at x_k for each step and a per-step noise level.
inline RedResult red_solve(const Image& y, const DegradationOperator& op, const Denoiser& d,
                           const RedConfig& cfg, const Image& x0) {
  cfg.validate();
  detail::check_red_shapes(y, x0, op);
  const std::vector<double> sigmas = cfg.schedule.values();
  RedResult result{x0, {}};
  Image& x = result.x;
  for (int k = 0; k < cfg.outer_iters; ++k) {
    const Image z = denoise(d, x, sigmas[k]);
    RegularizedSolve step = solve_regularized(op, y, z, cfg.lambda, cfg.cg_tol, cfg.cg_max_iter);
    if (!all_finite(step.x.samples())) {
      throw NumericError("RED: non-finite iterate at outer iteration " + std::to_string(k));
    }
    const double prev_norm = norm2(x.samples());
    const double change = distance2(step.x.samples(), x.samples());
    RedIteration rec;
    rec.iteration = k + 1;
    rec.cg_residual = step.cg.relative_residual;
    rec.cg_iterations = step.cg.iterations;
    rec.rel_change = prev_norm > 0.0 ? change / prev_norm : change;
    x = std::move(step.x);
    if (cfg.record_trace) {
      const double sigma = sigmas[k];
      const Image hx = denoise(d, x, sigma);
      rec.energy = detail::red_energy_given(y, x, hx, op, cfg.lambda);
      rec.grad_norm = norm2(detail::red_gradient_given(y, x, hx, op, cfg.lambda));
    }
    result.trace.records.push_back(rec);
    if (cfg.min_rel_change > 0.0 && rec.rel_change < cfg.min_rel_change) break;
  }
  return result;
}

inline RedResult red_solve(const Image& y, const DegradationOperator& op, const Denoiser& d,
                           const RedConfig& cfg) {
  return red_solve(y, op, d, cfg, red_initial_guess(y, op, cfg.init));
}

}  // namespace facehal
