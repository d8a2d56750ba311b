#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "facehal/image.hpp"

namespace facehal {

// Generator for aligned, face-like test images with eyes, brows, nose and
// mouth at canonical 128x128 positions and randomized shape parameters.
// Output is quantized to 8 bits so a saved PNG reloads to the same values.
class SyntheticFaceGenerator {
 public:
  explicit SyntheticFaceGenerator(std::uint64_t seed, int channels = 1)
      : rng_(seed), channels_(channels) {}

  Image next() {
    const double cx = 64.0 + uniform(-2.0, 2.0);
    const double cy = 68.0 + uniform(-2.0, 2.0);
    const double face_rx = uniform(40.0, 46.0);
    const double face_ry = uniform(50.0, 57.0);
    const double skin = uniform(0.55, 0.8);
    const double bg = uniform(0.12, 0.35);
    const double bg_slope = uniform(-0.1, 0.1);

    const double eye_sep = uniform(17.0, 22.0);
    const double eye_y = 56.0 + uniform(-2.0, 2.0);
    const double eye_rx = uniform(7.5, 10.0);
    const double eye_ry = uniform(3.0, 5.0);
    const double sclera = uniform(0.8, 0.95);
    const double iris_r = uniform(2.5, 4.5);
    const double iris_v = uniform(0.08, 0.35);
    const double gaze = uniform(-2.0, 2.0);

    const double brow_y = 41.0 + uniform(-2.0, 2.0);
    const double brow_len = uniform(18.0, 26.0);
    const double brow_th = uniform(2.0, 4.5);
    const double brow_tilt = uniform(-0.15, 0.15);
    const double brow_v = skin * uniform(0.25, 0.6);

    const double nose_len = uniform(14.0, 22.0);
    const double nostril_sep = uniform(4.5, 7.5);
    const double nostril_r = uniform(1.5, 3.0);
    const double nose_y = 82.0 + uniform(-2.0, 2.0);

    const double mouth_y = 97.0 + uniform(-3.0, 3.0);
    const double mouth_rx = uniform(11.0, 18.0);
    const double mouth_ry = uniform(2.0, 5.0);
    const double mouth_v = skin * uniform(0.35, 0.65);

    double tint[3] = {1.0, 1.0, 1.0};
    if (channels_ == 3) {
      tint[0] = uniform(1.0, 1.15);
      tint[1] = uniform(0.85, 1.0);
      tint[2] = uniform(0.7, 0.9);
    }

    Image img(kSize, kSize, channels_);
    for (int y = 0; y < kSize; ++y) {
      for (int x = 0; x < kSize; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        double v = bg + bg_slope * (py / kSize - 0.5);
        double face_v = skin * (1.0 - 0.12 * sq((px - cx) / face_rx));
        // nose ridge highlight
        face_v += 0.05 * std::exp(-sq((px - cx) / 2.0)) * band(py, nose_y - nose_len, nose_y);
        v = mix(v, face_v, ellipse(px, py, cx, cy, face_rx, face_ry));
        for (int side = -1; side <= 1; side += 2) {
          const double ex = cx + side * eye_sep;
          // brow: tilted bar
          const double by = brow_y + side * brow_tilt * (px - ex);
          const double brow_a = band(std::abs(px - ex), -1.0, brow_len / 2.0) *
                                band(py, by - brow_th / 2.0, by + brow_th / 2.0);
          v = mix(v, brow_v, brow_a);
          v = mix(v, sclera, ellipse(px, py, ex, eye_y, eye_rx, eye_ry));
          const double iris_a = ellipse(px, py, ex + gaze, eye_y, iris_r, iris_r) *
                                ellipse(px, py, ex, eye_y, eye_rx, eye_ry);
          v = mix(v, iris_v, iris_a);
          v = mix(v, skin * 0.35, ellipse(px, py, cx + side * nostril_sep, nose_y, nostril_r,
                                          nostril_r * 0.7));
        }
        v = mix(v, mouth_v, ellipse(px, py, cx, mouth_y, mouth_rx, mouth_ry));
        v = mix(v, mouth_v * 0.5, ellipse(px, py, cx, mouth_y, mouth_rx * 0.9, 0.8));
        for (int c = 0; c < channels_; ++c) {
          const double s = std::clamp(v * tint[c], 0.0, 1.0);
          img.at(x, y, c) = std::floor(s * 255.0 + 0.5) / 255.0;
        }
      }
    }
    return img;
  }

  std::vector<Image> generate(std::size_t n) {
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

  static constexpr int kSize = 128;

 private:
  // distribution-free so sequences match across standard libraries
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  static double sq(double v) { return v * v; }
  static double mix(double a, double b, double t) { return a + (b - a) * t; }

  // soft coverage of an axis-aligned ellipse, about one pixel of falloff
  static double ellipse(double px, double py, double cx, double cy, double rx, double ry) {
    const double e = std::sqrt(sq((px - cx) / rx) + sq((py - cy) / ry));
    return std::clamp((1.0 - e) * std::min(rx, ry) + 0.5, 0.0, 1.0);
  }

  // soft indicator of lo <= t <= hi
  static double band(double t, double lo, double hi) {
    return std::clamp(t - lo + 0.5, 0.0, 1.0) * std::clamp(hi - t + 0.5, 0.0, 1.0);
  }

  std::mt19937_64 rng_;
  int channels_;
};

}  // namespace facehal
