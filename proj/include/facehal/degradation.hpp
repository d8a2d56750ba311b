#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "facehal/conjugate_gradient.hpp"
#include "facehal/error.hpp"
#include "facehal/image.hpp"

namespace facehal {

enum class KernelType { gaussian, bicubic, box, identity };

inline std::string to_string(KernelType t) {
  switch (t) {
    case KernelType::gaussian: return "gaussian";
    case KernelType::bicubic: return "bicubic";
    case KernelType::box: return "box";
    case KernelType::identity: return "identity";
  }
  return "unknown";
}

inline KernelType kernel_type_from_string(const std::string& s) {
  if (s == "gaussian") return KernelType::gaussian;
  if (s == "bicubic") return KernelType::bicubic;
  if (s == "box") return KernelType::box;
  if (s == "identity") return KernelType::identity;
  throw Error("unknown kernel type '" + s + "'");
}

struct KernelSpec {
  KernelType type = KernelType::gaussian;
  double sigma = 0.0;  // gaussian only; <= 0 selects 0.5 * scale
  int scale = 8;
  int size = 0;        // box only; <= 0 selects the smallest odd side >= scale
};

// Normalized blur kernel with odd side lengths, row-major.
struct Kernel2D {
  int width = 1;
  int height = 1;
  std::vector<double> weights{1.0};

  double at(int u, int v) const { return weights[static_cast<std::size_t>(v) * width + u]; }
  int radius_x() const { return width / 2; }
  int radius_y() const { return height / 2; }
};

inline Kernel2D outer_product_kernel(const std::vector<double>& taps) {
  Kernel2D k;
  k.width = k.height = static_cast<int>(taps.size());
  k.weights.resize(taps.size() * taps.size());
  double sum = 0.0;
  for (std::size_t v = 0; v < taps.size(); ++v)
    for (std::size_t u = 0; u < taps.size(); ++u) {
      k.weights[v * taps.size() + u] = taps[v] * taps[u];
      sum += taps[v] * taps[u];
    }
  for (double& w : k.weights) w /= sum;
  return k;
}

inline Kernel2D make_kernel(const KernelSpec& spec) {
  if (spec.scale < 1) throw Error("kernel scale must be >= 1");
  std::vector<double> taps;
  switch (spec.type) {
    case KernelType::identity:
      return Kernel2D{};
    case KernelType::gaussian: {
      const double sigma = spec.sigma > 0.0 ? spec.sigma : 0.5 * spec.scale;
      const int r = static_cast<int>(std::ceil(3.0 * sigma));
      for (int t = -r; t <= r; ++t) taps.push_back(std::exp(-0.5 * t * t / (sigma * sigma)));
      break;
    }
    case KernelType::bicubic: {
      // the antialiased cubic kernel that bicubic downsampling by `scale` applies
      const int s = spec.scale;
      const int r = 2 * s - 1;
      for (int t = -r; t <= r; ++t) taps.push_back(detail::cubic_kernel(static_cast<double>(t) / s));
      break;
    }
    case KernelType::box: {
      int side = spec.size > 0 ? spec.size : spec.scale;
      if (side % 2 == 0) ++side;
      taps.assign(side, 1.0);
      break;
    }
  }
  return outer_product_kernel(taps);
}

// Blur-then-decimate operator H and its adjoint. Samples are taken every
// `scale` pixels starting at scale/2; out-of-range reads replicate the edge.
class DegradationOperator {
 public:
  DegradationOperator() = default;
  DegradationOperator(Kernel2D kernel, int scale) : kernel_(std::move(kernel)), scale_(scale) {
    if (scale_ < 1) throw Error("decimation factor must be >= 1");
    if (kernel_.width % 2 == 0 || kernel_.height % 2 == 0) {
      throw Error("kernel side lengths must be odd");
    }
    double sum = 0.0;
    for (double w : kernel_.weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-12) throw Error("kernel must sum to 1");
  }
  explicit DegradationOperator(const KernelSpec& spec)
      : DegradationOperator(make_kernel(spec), spec.scale) {}

  const Kernel2D& kernel() const { return kernel_; }
  int scale() const { return scale_; }
  int offset() const { return scale_ / 2; }
  int lr_size(int hr) const { return (hr + scale_ - 1) / scale_; }

  Image apply(const Image& x) const {
    check_kernel_fits(x.width(), x.height());
    const int lw = lr_size(x.width());
    const int lh = lr_size(x.height());
    const int c = x.channels();
    Image y(lw, lh, c);
    const auto cols = tap_indices(lw, x.width(), kernel_.width);
    const auto rows = tap_indices(lh, x.height(), kernel_.height);
    const int kw = kernel_.width;
    const int kh = kernel_.height;
    std::vector<double> acc(c);
    for (int j = 0; j < lh; ++j) {
      for (int i = 0; i < lw; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int v = 0; v < kh; ++v) {
          const int sy = rows[static_cast<std::size_t>(j) * kh + v];
          for (int u = 0; u < kw; ++u) {
            const int sx = cols[static_cast<std::size_t>(i) * kw + u];
            const double w = kernel_.at(u, v);
            for (int ch = 0; ch < c; ++ch) acc[ch] += w * x.at(sx, sy, ch);
          }
        }
        for (int ch = 0; ch < c; ++ch) y.at(i, j, ch) = acc[ch];
      }
    }
    return y;
  }

  Image adjoint(const Image& y, int hr_width, int hr_height) const {
    if (lr_size(hr_width) != y.width() || lr_size(hr_height) != y.height()) {
      throw ShapeError("adjoint: LR image " + y.shape_string() + " does not match HR size " +
                       std::to_string(hr_width) + "x" + std::to_string(hr_height) +
                       " at scale " + std::to_string(scale_));
    }
    check_kernel_fits(hr_width, hr_height);
    const int c = y.channels();
    Image x(hr_width, hr_height, c);
    const auto cols = tap_indices(y.width(), hr_width, kernel_.width);
    const auto rows = tap_indices(y.height(), hr_height, kernel_.height);
    const int kw = kernel_.width;
    const int kh = kernel_.height;
    for (int j = 0; j < y.height(); ++j) {
      for (int i = 0; i < y.width(); ++i) {
        for (int v = 0; v < kh; ++v) {
          const int sy = rows[static_cast<std::size_t>(j) * kh + v];
          for (int u = 0; u < kw; ++u) {
            const int sx = cols[static_cast<std::size_t>(i) * kw + u];
            const double w = kernel_.at(u, v);
            for (int ch = 0; ch < c; ++ch) x.at(sx, sy, ch) += w * y.at(i, j, ch);
          }
        }
      }
    }
    return x;
  }

  Image adjoint(const Image& y) const {
    return adjoint(y, y.width() * scale_, y.height() * scale_);
  }

 private:
  void check_kernel_fits(int w, int h) const {
    if (kernel_.width > w || kernel_.height > h) {
      throw ShapeError("kernel " + std::to_string(kernel_.width) + "x" +
                       std::to_string(kernel_.height) + " is larger than image " +
                       std::to_string(w) + "x" + std::to_string(h));
    }
  }

  // For each output sample along one axis, the clamped source index of every
  // kernel tap. Convolution reads x[p - t], so tap u maps to p + r - u.
  std::vector<int> tap_indices(int out_size, int in_size, int side) const {
    const int r = side / 2;
    std::vector<int> idx(static_cast<std::size_t>(out_size) * side);
    for (int i = 0; i < out_size; ++i) {
      const int p = i * scale_ + offset();
      for (int u = 0; u < side; ++u) {
        idx[static_cast<std::size_t>(i) * side + u] = std::clamp(p + r - u, 0, in_size - 1);
      }
    }
    return idx;
  }

  Kernel2D kernel_;
  int scale_ = 1;
};

struct RegularizedSolve {
  Image x;
  CgResult cg;
};

// Solves (H^T H + lambda I) x = H^T y + lambda z by conjugate gradient,
// starting from z.
inline RegularizedSolve solve_regularized(const DegradationOperator& op, const Image& y,
                                          const Image& z, double lambda, double cg_tol,
                                          int cg_max_iter) {
  if (!(lambda > 0.0)) throw NumericError("solve_regularized: lambda must be > 0");
  if (!all_finite(y.samples()) || !all_finite(z.samples())) {
    throw NumericError("solve_regularized: non-finite input");
  }
  if (op.lr_size(z.width()) != y.width() || op.lr_size(z.height()) != y.height() ||
      z.channels() != y.channels()) {
    throw ShapeError("solve_regularized: LR " + y.shape_string() + " inconsistent with HR " +
                     z.shape_string());
  }
  const int w = z.width();
  const int h = z.height();
  const int c = z.channels();

  Image rhs = op.adjoint(y, w, h);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs.samples()[i] += lambda * z.data()[i];

  auto normal_op = [&](std::span<const double> in, std::span<double> out) {
    const Image xi(w, h, c, std::vector<double>(in.begin(), in.end()));
    const Image back = op.adjoint(op.apply(xi), w, h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = back.data()[i] + lambda * in[i];
  };

  std::vector<double> x = z.data();
  CgResult cg = conjugate_gradient(normal_op, rhs.samples(), x, cg_tol, cg_max_iter);
  if (!all_finite(x)) throw NumericError("solve_regularized: CG produced non-finite values");
  return {Image(w, h, c, std::move(x)), std::move(cg)};
}

}  // namespace facehal
