#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facehal/error.hpp"

namespace facehal {

// Row-major, channel-interleaved raster of double samples. Nominal range is
// [0,1]; intermediate results may leave it and are clamped only at I/O.
class Image {
 public:
  Image() = default;

  Image(int width, int height, int channels, double fill = 0.0)
      : width_(width), height_(height), channels_(channels) {
    validate_shape();
    data_.assign(size(), fill);
  }

  Image(int width, int height, int channels, std::vector<double> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != size()) {
      throw ShapeError("image data length " + std::to_string(data_.size()) +
                       " does not match " + shape_string());
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const { return pixel_count() * static_cast<std::size_t>(channels_); }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  std::span<double> samples() { return data_; }
  std::span<const double> samples() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  std::string shape_string() const {
    return std::to_string(width_) + "x" + std::to_string(height_) + "x" +
           std::to_string(channels_);
  }

  bool operator==(const Image& other) const = default;

 private:
  void validate_shape() const {
    if (width_ <= 0 || height_ <= 0) {
      throw ShapeError("image dimensions must be positive, got " + shape_string());
    }
    if (channels_ != 1 && channels_ != 3) {
      throw ShapeError("image must have 1 or 3 channels, got " + std::to_string(channels_));
    }
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Flat vector form of an Image; keeps the shape so reshape() is exact.
struct ImageVector {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

inline ImageVector vectorize(const Image& img) {
  return {img.width(), img.height(), img.channels(), img.data()};
}

inline Image reshape(ImageVector vec) {
  return Image(vec.width, vec.height, vec.channels, std::move(vec.values));
}

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double s) { return std::isfinite(s); });
}

// Small dense-vector helpers shared by the solvers.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance2(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline Image add(const Image& a, const Image& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Image(a.width(), a.height(), a.channels(), std::move(out));
}

inline Image subtract(const Image& a, const Image& b) {
  require_same_shape(a, b, "subtract");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return Image(a.width(), a.height(), a.channels(), std::move(out));
}

inline Image clamp01(const Image& img) {
  std::vector<double> out(img.data());
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return Image(img.width(), img.height(), img.channels(), std::move(out));
}

inline Image extract_channel(const Image& img, int c) {
  Image out(img.width(), img.height(), 1);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    out.samples()[p] = img.data()[p * img.channels() + c];
  }
  return out;
}

inline void insert_channel(Image& dst, const Image& plane, int c) {
  for (std::size_t p = 0; p < dst.pixel_count(); ++p) {
    dst.samples()[p * dst.channels() + c] = plane.data()[p];
  }
}

// BT.601 luma; identity on single-channel input.
inline Image to_luma(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  const auto& d = img.data();
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    out.samples()[p] = 0.299 * d[3 * p] + 0.587 * d[3 * p + 1] + 0.114 * d[3 * p + 2];
  }
  return out;
}

// Places images left to right on a common canvas; shorter ones are
// top-aligned on black. All inputs must share the channel count.
inline Image hconcat(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("hconcat: no images");
  int total_w = 0;
  int max_h = 0;
  const int channels = images.front().channels();
  for (const auto& im : images) {
    if (im.channels() != channels) throw ShapeError("hconcat: channel mismatch");
    total_w += im.width();
    max_h = std::max(max_h, im.height());
  }
  Image out(total_w, max_h, channels);
  int x0 = 0;
  for (const auto& im : images) {
    for (int y = 0; y < im.height(); ++y)
      for (int x = 0; x < im.width(); ++x)
        for (int c = 0; c < channels; ++c) out.at(x0 + x, y, c) = im.at(x, y, c);
    x0 += im.width();
  }
  return out;
}

namespace detail {

// Cubic convolution kernel with a = -0.5 (Keys / Catmull-Rom).
inline double cubic_kernel(double t) {
  constexpr double a = -0.5;
  const double x = std::abs(t);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct AxisWeights {
  std::vector<int> first;          // first source index per output sample
  std::vector<std::vector<double>> weights;
};

// Resampling weights for one axis. Downsampling widens the kernel by the
// inverse scale (antialiasing); source indices are clamped (replicate edge).
inline AxisWeights axis_weights(int in_size, int out_size) {
  const double scale = static_cast<double>(out_size) / in_size;
  const double kscale = std::min(scale, 1.0);
  const double support = 2.0 / kscale;
  AxisWeights aw;
  aw.first.resize(out_size);
  aw.weights.resize(out_size);
  for (int i = 0; i < out_size; ++i) {
    const double center = (i + 0.5) / scale - 0.5;
    const int lo = static_cast<int>(std::floor(center - support));
    const int hi = static_cast<int>(std::ceil(center + support));
    std::vector<double> w;
    w.reserve(hi - lo + 1);
    double sum = 0.0;
    for (int s = lo; s <= hi; ++s) {
      const double v = kscale * cubic_kernel(kscale * (s - center));
      w.push_back(v);
      sum += v;
    }
    for (double& v : w) v /= sum;
    aw.first[i] = lo;
    aw.weights[i] = std::move(w);
  }
  return aw;
}

}  // namespace detail

// Separable bicubic resampling (a = -0.5) with antialiasing on downscale.
inline Image bicubic_resize(const Image& img, int new_w, int new_h) {
  if (new_w < 1 || new_h < 1) {
    throw ShapeError("bicubic_resize: target size must be at least 1x1");
  }
  const int c = img.channels();
  const auto wx = detail::axis_weights(img.width(), new_w);
  const auto wy = detail::axis_weights(img.height(), new_h);

  Image tmp(new_w, img.height(), c);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < new_w; ++x) {
      const auto& w = wx.weights[x];
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t t = 0; t < w.size(); ++t) {
          const int sx = std::clamp(wx.first[x] + static_cast<int>(t), 0, img.width() - 1);
          acc += w[t] * img.at(sx, y, ch);
        }
        tmp.at(x, y, ch) = acc;
      }
    }
  }
  Image out(new_w, new_h, c);
  for (int y = 0; y < new_h; ++y) {
    const auto& w = wy.weights[y];
    for (int x = 0; x < new_w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t t = 0; t < w.size(); ++t) {
          const int sy = std::clamp(wy.first[y] + static_cast<int>(t), 0, img.height() - 1);
          acc += w[t] * tmp.at(x, sy, ch);
        }
        out.at(x, y, ch) = acc;
      }
    }
  }
  return out;
}

}  // namespace facehal
