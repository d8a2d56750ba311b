#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "facehal/error.hpp"
#include "facehal/image.hpp"

namespace facehal {

// PSNR on the 8-bit scale over all samples; +inf for identical images.
inline double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = 255.0 * a.data()[i] - 255.0 * b.data()[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace detail {

inline std::vector<double> ssim_window() {
  constexpr int side = 11;
  constexpr double sigma = 1.5;
  std::vector<double> w(side * side);
  double sum = 0.0;
  for (int v = 0; v < side; ++v)
    for (int u = 0; u < side; ++u) {
      const double dx = u - side / 2, dy = v - side / 2;
      w[v * side + u] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      sum += w[v * side + u];
    }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace detail

// Single-scale SSIM on luma, 11x11 Gaussian window (sigma 1.5), 8-bit
// constants, averaged over window positions that fit inside the image.
inline double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  constexpr int side = 11;
  if (a.width() < side || a.height() < side) {
    throw ShapeError("ssim: image " + a.shape_string() + " is smaller than the 11x11 window");
  }
  const Image la = to_luma(a);
  const Image lb = to_luma(b);
  const auto win = detail::ssim_window();
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  std::size_t count = 0;
  for (int y0 = 0; y0 + side <= la.height(); ++y0) {
    for (int x0 = 0; x0 + side <= la.width(); ++x0) {
      double mu_a = 0, mu_b = 0, saa = 0, sbb = 0, sab = 0;
      for (int v = 0; v < side; ++v)
        for (int u = 0; u < side; ++u) {
          const double w = win[v * side + u];
          const double pa = 255.0 * la.at(x0 + u, y0 + v);
          const double pb = 255.0 * lb.at(x0 + u, y0 + v);
          mu_a += w * pa;
          mu_b += w * pb;
          saa += w * pa * pa;
          sbb += w * pb * pb;
          sab += w * pa * pb;
        }
      const double var_a = saa - mu_a * mu_a;
      const double var_b = sbb - mu_b * mu_b;
      const double cov = sab - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

struct ImageScore {
  std::string name;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct SurvivalPoint {
  double threshold = 0.0;
  double fraction = 0.0;
};

struct ScoreReport {
  std::vector<ImageScore> images;
  double mean_psnr = 0.0;  // over finite PSNRs only
  double mean_ssim = 0.0;
  std::size_t psnr_infinite_count = 0;
  std::vector<SurvivalPoint> psnr_survival;
  std::vector<SurvivalPoint> ssim_survival;
};

inline constexpr int kSurvivalSamples = 64;

// Fraction of scores strictly above each of `samples` evenly spaced
// thresholds spanning [lo, hi].
inline std::vector<SurvivalPoint> survival_curve(const std::vector<double>& scores, double lo,
                                                 double hi, int samples = kSurvivalSamples) {
  std::vector<SurvivalPoint> curve(samples);
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? lo : lo + (hi - lo) * i / (samples - 1);
    const auto above = std::count_if(scores.begin(), scores.end(), [t](double s) { return s > t; });
    curve[i] = {t, scores.empty() ? 0.0 : static_cast<double>(above) / scores.size()};
  }
  return curve;
}

inline ScoreReport score_set(const std::vector<Image>& outputs, const std::vector<Image>& truths,
                             const std::vector<std::string>& names) {
  if (outputs.size() != truths.size() || outputs.size() != names.size()) {
    throw Error("score_set: mismatched list lengths (" + std::to_string(outputs.size()) + ", " +
                std::to_string(truths.size()) + ", " + std::to_string(names.size()) + ")");
  }
  if (outputs.empty()) throw Error("score_set: no image pairs");
  ScoreReport rep;
  std::vector<double> psnrs, ssims;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const ImageScore s{names[i], psnr(outputs[i], truths[i]), ssim(outputs[i], truths[i])};
    rep.images.push_back(s);
    psnrs.push_back(s.psnr_db);
    ssims.push_back(s.ssim);
    ssim_sum += s.ssim;
    if (std::isinf(s.psnr_db)) {
      ++rep.psnr_infinite_count;
    } else {
      psnr_sum += s.psnr_db;
      ++finite;
    }
  }
  rep.mean_psnr = finite > 0 ? psnr_sum / finite : std::numeric_limits<double>::infinity();
  rep.mean_ssim = ssim_sum / outputs.size();

  double plo = std::numeric_limits<double>::infinity(), phi = -plo;
  for (double p : psnrs) {
    if (std::isinf(p)) continue;
    plo = std::min(plo, p);
    phi = std::max(phi, p);
  }
  if (finite == 0) plo = phi = 0.0;
  rep.psnr_survival = survival_curve(psnrs, plo, phi);
  const auto [smin, smax] = std::minmax_element(ssims.begin(), ssims.end());
  rep.ssim_survival = survival_curve(ssims, *smin, *smax);
  return rep;
}

namespace detail {

inline std::string format_score(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline nlohmann::json score_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

}  // namespace detail

// name,psnr_db,ssim,fsim ; fsim is reserved and left empty
inline void write_scores_csv(const ScoreReport& rep, std::ostream& out) {
  out << "name,psnr_db,ssim,fsim\n";
  for (const auto& s : rep.images) {
    out << s.name << ',' << detail::format_score(s.psnr_db) << ','
        << detail::format_score(s.ssim) << ",\n";
  }
}

inline void write_survival_csv(const std::vector<SurvivalPoint>& curve, std::ostream& out) {
  out << "threshold,fraction\n";
  for (const auto& p : curve) {
    out << detail::format_score(p.threshold) << ',' << detail::format_score(p.fraction) << '\n';
  }
}

inline nlohmann::json report_to_json(const ScoreReport& rep) {
  nlohmann::json imgs = nlohmann::json::array();
  for (const auto& s : rep.images) {
    imgs.push_back({{"name", s.name},
                    {"psnr_db", detail::score_json(s.psnr_db)},
                    {"psnr_infinite", std::isinf(s.psnr_db)},
                    {"ssim", s.ssim},
                    {"fsim", nullptr}});
  }
  return {{"images", imgs},
          {"mean_psnr_db", detail::score_json(rep.mean_psnr)},
          {"mean_ssim", rep.mean_ssim},
          {"psnr_infinite_count", rep.psnr_infinite_count},
          {"count", rep.images.size()},
          {"conventions", {{"psnr", "all channels, 8-bit scale"}, {"ssim", "BT.601 luma"}}}};
}

}  // namespace facehal
