#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "facehal/error.hpp"
#include "facehal/external_denoiser.hpp"
#include "facehal/image.hpp"

namespace facehal {

enum class DenoiserKind { identity, gaussian, nlm, median, external };
enum class Boundary { replicate, periodic };

inline std::string to_string(DenoiserKind k) {
  switch (k) {
    case DenoiserKind::identity: return "identity";
    case DenoiserKind::gaussian: return "gaussian";
    case DenoiserKind::nlm: return "nlm";
    case DenoiserKind::median: return "median";
    case DenoiserKind::external: return "external";
  }
  return "unknown";
}

inline DenoiserKind denoiser_kind_from_string(const std::string& s) {
  if (s == "identity") return DenoiserKind::identity;
  if (s == "gaussian") return DenoiserKind::gaussian;
  if (s == "nlm") return DenoiserKind::nlm;
  if (s == "median") return DenoiserKind::median;
  if (s == "external") return DenoiserKind::external;
  throw Error("unknown denoiser kind '" + s + "'");
}

inline std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "replicate"; }

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "replicate") return Boundary::replicate;
  if (s == "periodic") return Boundary::periodic;
  throw Error("unknown boundary '" + s + "'");
}

// The prior h(x). Sigma is in [0,1] intensity units.
struct Denoiser {
  DenoiserKind kind = DenoiserKind::gaussian;
  double noise_level = 12.0 / 255.0;
  // gaussian: spatial std in pixels = gaussian_scale * sigma
  double gaussian_scale = 10.0;
  // nlm: filtering parameter h = nlm_k * sigma
  double nlm_k = 0.6;
  Boundary boundary = Boundary::replicate;
  // external: shell command speaking RDN1 on stdin/stdout
  std::string command;
  double timeout_seconds = 60.0;
  // copies share the lock, so one logical denoiser runs one subprocess at a time
  std::shared_ptr<std::mutex> call_mutex = std::make_shared<std::mutex>();
};

struct NoiseSchedule {
  enum class Spacing { log, linear };

  double sigma_start = 12.0 / 255.0;
  double sigma_end = 2.0 / 255.0;
  int steps = 30;
  Spacing spacing = Spacing::log;

  std::vector<double> values() const {
    if (steps < 1) throw Error("noise schedule needs at least one step");
    if (!(sigma_end > 0.0) || sigma_start < sigma_end) {
      throw Error("noise schedule requires sigma_start >= sigma_end > 0");
    }
    std::vector<double> v(steps);
    for (int i = 0; i < steps; ++i) {
      const double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
      v[i] = spacing == Spacing::log ? sigma_start * std::pow(sigma_end / sigma_start, t)
                                     : sigma_start + t * (sigma_end - sigma_start);
    }
    return v;
  }

  static NoiseSchedule constant(double sigma, int steps) {
    return {sigma, sigma, steps, Spacing::linear};
  }
};

namespace detail {

inline int wrap_index(int i, int n, Boundary b) {
  if (b == Boundary::replicate) return std::clamp(i, 0, n - 1);
  const int m = i % n;
  return m < 0 ? m + n : m;
}

inline std::vector<double> gaussian_taps(double std_px) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * std_px)));
  std::vector<double> taps(2 * r + 1);
  double sum = 0.0;
  for (int t = -r; t <= r; ++t) {
    taps[t + r] = std::exp(-0.5 * t * t / (std_px * std_px));
    sum += taps[t + r];
  }
  for (double& v : taps) v /= sum;
  return taps;
}

inline Image separable_filter(const Image& x, const std::vector<double>& taps, Boundary b) {
  const int r = static_cast<int>(taps.size()) / 2;
  const int w = x.width(), h = x.height(), c = x.channels();
  Image tmp(w, h, c);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) acc += taps[t + r] * x.at(wrap_index(xx + t, w, b), y, ch);
        tmp.at(xx, y, ch) = acc;
      }
  Image out(w, h, c);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) acc += taps[t + r] * tmp.at(xx, wrap_index(y + t, h, b), ch);
        out.at(xx, y, ch) = acc;
      }
  return out;
}

inline Image gaussian_denoise(const Image& x, double std_px, Boundary b) {
  return separable_filter(x, gaussian_taps(std_px), b);
}

// Non-local means: 5x5 patches, 11x11 search window, weights
// exp(-max(d2 - 2 sigma^2, 0) / h^2) with d2 the per-sample mean squared
// patch difference.
inline Image nlm_denoise(const Image& x, double sigma, double h_param, Boundary b) {
  constexpr int patch_r = 2;
  constexpr int window_r = 5;
  const int w = x.width(), h = x.height(), c = x.channels();
  const double inv_h2 = 1.0 / (h_param * h_param);
  const double offset = 2.0 * sigma * sigma;
  const double norm = 1.0 / (c * (2 * patch_r + 1) * (2 * patch_r + 1));
  Image out(w, h, c);
  std::vector<double> acc(c);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double wsum = 0.0;
      for (int dy = -window_r; dy <= window_r; ++dy) {
        for (int dx = -window_r; dx <= window_r; ++dx) {
          double d2 = 0.0;
          for (int py = -patch_r; py <= patch_r; ++py) {
            const int y1 = wrap_index(y + py, h, b);
            const int y2 = wrap_index(y + dy + py, h, b);
            for (int px = -patch_r; px <= patch_r; ++px) {
              const int x1 = wrap_index(xx + px, w, b);
              const int x2 = wrap_index(xx + dx + px, w, b);
              for (int ch = 0; ch < c; ++ch) {
                const double d = x.at(x1, y1, ch) - x.at(x2, y2, ch);
                d2 += d * d;
              }
            }
          }
          const double weight = std::exp(-std::max(d2 * norm - offset, 0.0) * inv_h2);
          const int sy = wrap_index(y + dy, h, b);
          const int sx = wrap_index(xx + dx, w, b);
          for (int ch = 0; ch < c; ++ch) acc[ch] += weight * x.at(sx, sy, ch);
          wsum += weight;
        }
      }
      for (int ch = 0; ch < c; ++ch) out.at(xx, y, ch) = acc[ch] / wsum;
    }
  }
  return out;
}

inline Image median3_denoise(const Image& x, Boundary b) {
  const int w = x.width(), h = x.height(), c = x.channels();
  Image out(w, h, c);
  std::array<double, 9> win;
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int ch = 0; ch < c; ++ch) {
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            win[n++] = x.at(wrap_index(xx + dx, w, b), wrap_index(y + dy, h, b), ch);
        std::nth_element(win.begin(), win.begin() + 4, win.end());
        out.at(xx, y, ch) = win[4];
      }
  return out;
}

}  // namespace detail

inline Image denoise(const Denoiser& d, const Image& x, double sigma) {
  if (!(sigma > 0.0)) throw NumericError("denoise: sigma must be > 0");
  if (!all_finite(x.samples())) throw NumericError("denoise: non-finite input");
  switch (d.kind) {
    case DenoiserKind::identity:
      return x;
    case DenoiserKind::gaussian:
      return detail::gaussian_denoise(x, d.gaussian_scale * sigma, d.boundary);
    case DenoiserKind::nlm:
      return detail::nlm_denoise(x, sigma, d.nlm_k * sigma, d.boundary);
    case DenoiserKind::median:
      return detail::median3_denoise(x, d.boundary);
    case DenoiserKind::external: {
      std::lock_guard<std::mutex> lock(*d.call_mutex);
      return external_denoise(d.command, x, sigma, d.timeout_seconds);
    }
  }
  throw Error("denoise: unknown kind");
}

inline Image denoise(const Denoiser& d, const Image& x) { return denoise(d, x, d.noise_level); }

}  // namespace facehal
