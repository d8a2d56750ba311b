// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <sys/wait.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "facehal/facehal.hpp"

namespace fs = std::filesystem;
using namespace facehal;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

Image random_image(int w, int h, int c, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Image img(w, h, c);
  for (double& v : img.samples()) v = dist(rng);
  return img;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("facehal_acceptance_" + tag + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// ---------------------------------------------------------------------------

Outcome criterion_1() {
  const DegradationOperator op(KernelSpec{KernelType::identity, 0.0, 1, 0});
  Denoiser id;
  id.kind = DenoiserKind::identity;
  const Image y(16, 16, 1, 0.5);
  const double lambda = 1.0;
  auto config = [&](int iters) {
    RedConfig cfg;
    cfg.lambda = lambda;
    cfg.outer_iters = iters;
    cfg.schedule = NoiseSchedule::constant(0.01, iters);
    cfg.init = RedInit::zeros;
    cfg.min_rel_change = 0.0;  // run every requested iteration
    return cfg;
  };
  double worst = 0.0, xk = 0.0;
  for (int k = 1; k <= 10; ++k) {
    xk = (0.5 + lambda * xk) / (1.0 + lambda);
    const Image x = red_solve(y, op, id, config(k)).x;
    for (double v : x.data()) worst = std::max(worst, std::abs(v - xk));
  }
  const Image x50 = red_solve(y, op, id, config(50)).x;
  double err50 = 0.0;
  for (double v : x50.data()) err50 = std::max(err50, std::abs(v - 0.5));
  return {worst <= 1e-10 && err50 <= 1e-6,
          "max recurrence error " + fmt(worst) + " over 10 steps, |x50 - y| = " + fmt(err50)};
}

Outcome criterion_2() {
  double worst = 0.0;
  int pairs = 0;
  for (KernelType type : {KernelType::gaussian, KernelType::bicubic}) {
    for (int s : {2, 4, 8}) {
      const DegradationOperator op(KernelSpec{type, 0.0, s, 0});
      for (int t = 0; t < 100; ++t) {
        const std::uint64_t seed = 1000u * s + t + (type == KernelType::bicubic ? 50000u : 0u);
        const Image x = random_image(64, 64, 1, seed);
        const Image y = random_image(64 / s, 64 / s, 1, seed + 7777);
        const double lhs = dot(op.apply(x).samples(), y.samples());
        const double rhs = dot(x.samples(), op.adjoint(y, 64, 64).samples());
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
        ++pairs;
      }
    }
  }
  return {worst <= 1e-10, std::to_string(pairs) + " pairs, max relative mismatch " + fmt(worst)};
}

Outcome criterion_3() {
  const DegradationOperator op(KernelSpec{KernelType::gaussian, 0.0, 4, 0});
  Denoiser g;
  RedConfig cfg;
  const Image y = random_image(8, 8, 1, 42);
  const auto sigmas = cfg.schedule.values();
  Image x = red_initial_guess(y, op, cfg.init);
  const Image hty = op.adjoint(y, 32, 32);
  double worst = 0.0;
  for (int k = 0; k < cfg.outer_iters; ++k) {
    RedConfig one = cfg;
    one.outer_iters = 1;
    one.schedule = NoiseSchedule::constant(sigmas[k], 1);
    one.min_rel_change = 0.0;
    const Image next = red_solve(y, op, g, one, x).x;
    const Image hx = denoise(g, x, sigmas[k]);
    const Image back = op.adjoint(subtract(op.apply(next), y), 32, 32);
    std::vector<double> r(next.size()), b(next.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = back.data()[i] + cfg.lambda * (next.data()[i] - hx.data()[i]);
      b[i] = hty.data()[i] + cfg.lambda * hx.data()[i];
    }
    worst = std::max(worst, norm2(r) / norm2(b));
    x = next;
  }
  return {worst <= 10 * cfg.cg_tol,
          "32x32, " + std::to_string(cfg.outer_iters) + " steps, max ||grad||/||rhs|| = " + fmt(worst) +
              " (bound " + fmt(10 * cfg.cg_tol) + ")"};
}

Outcome criterion_4() {
  const DegradationOperator op(KernelSpec{KernelType::gaussian, 0.0, 2, 0});
  Denoiser g;
  g.boundary = Boundary::periodic;
  const double sigma = 0.1, lambda = 0.23, h = 1e-5;
  const Image x = random_image(32, 32, 1, 4);
  const Image y = random_image(16, 16, 1, 5);
  const ImageVector grad = red_gradient(y, x, op, g, sigma, lambda);
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t i = rng() % x.size();
    Image xp = x, xm = x;
    xp.samples()[i] += h;
    xm.samples()[i] -= h;
    const double fd =
        (red_energy(y, xp, op, g, sigma, lambda) - red_energy(y, xm, op, g, sigma, lambda)) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad.values[i]) / std::abs(grad.values[i]));
  }
  return {worst <= 1e-4, "20 coordinates, max relative error " + fmt(worst)};
}

// Independent minimizer: Householder QR on [G; sqrt(lambda) diag(d); sqrt(jitter) I] w = [q; 0; 0].
Eigen::VectorXd qr_weights(const std::vector<double>& q, const NeighborMatrix& nb,
                           const std::vector<double>& d, double lambda) {
  const auto k = static_cast<Eigen::Index>(nb.rows), dim = static_cast<Eigen::Index>(nb.cols);
  Eigen::MatrixXd G(dim, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index i = 0; i < dim; ++i) G(i, a) = nb.data[a * dim + i];
  const double trace = G.squaredNorm();
  const double jitter = trace > 0 ? kGramJitter * trace / k : kGramJitter;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim + 2 * k, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim + 2 * k);
  A.topRows(dim) = G;
  for (Eigen::Index a = 0; a < k; ++a) {
    A(dim + a, a) = std::sqrt(lambda) * d[a];
    A(dim + k + a, a) = std::sqrt(jitter);
  }
  for (Eigen::Index i = 0; i < dim; ++i) b(i) = q[i];
  return A.householderQr().solve(b);
}

Outcome criterion_5() {
  std::mt19937_64 rng(2025);
  const double grid[] = {0.0, 0.01, 0.1, 1.0};
  double worst_match = 0.0, worst_opt = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 1 + rng() % 6, dim = 1 + rng() % 16;
    const double lambda = grid[t % 4];
    const auto q = random_vec(rng, dim);
    const NeighborMatrix nb{k, dim, random_vec(rng, k * dim)};
    const auto d = locality_adaptor(q, nb);
    const auto w = solve_weights(q, nb, d, lambda).w;
    const Eigen::VectorXd want = qr_weights(q, nb, d, lambda);
    for (std::size_t a = 0; a < k; ++a) {
      worst_match = std::max(worst_match, std::abs(w[a] - want(static_cast<Eigen::Index>(a))));
    }
    // first-order condition of the solved objective (jitter included)
    double trace = 0.0;
    for (double v : nb.data) trace += v * v;
    const double jitter = trace > 0 ? kGramJitter * trace / k : kGramJitter;
    double g2 = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      double g = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        double recon = 0.0;
        for (std::size_t b = 0; b < k; ++b) recon += w[b] * nb.data[b * dim + i];
        g += nb.data[a * dim + i] * (recon - q[i]);
      }
      g = 2 * g + 2 * (lambda * d[a] * d[a] + jitter) * w[a];
      g2 += g * g;
    }
    worst_opt = std::max(worst_opt, std::sqrt(g2) / (1 + norm2(q)));
  }
  return {worst_match <= 1e-8 && worst_opt <= 1e-8,
          "200 instances, max |w - w_oracle| = " + fmt(worst_match) +
              ", max optimality residual / (1+||q||) = " + fmt(worst_opt)};
}

Outcome criterion_6() {
  std::mt19937_64 rng(6);
  std::size_t mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 499, dim = 1 + rng() % 64;
    std::vector<std::vector<double>> f(n), r(n, std::vector<double>(dim, 0.0));
    for (auto& row : f) {
      row = random_vec(rng, dim);
      // coarse values produce exact distance ties
      if (t % 3 == 0)
        for (double& v : row) v = std::round(v * 2) / 2;
    }
    const TrainingIndex idx = TrainingIndex::from_rows(f, r);
    auto q = random_vec(rng, dim);
    if (t % 3 == 0)
      for (double& v : q) v = std::round(v * 2) / 2;
    const std::optional<std::size_t> exclude =
        t % 2 ? std::optional<std::size_t>(rng() % n) : std::nullopt;
    const std::size_t k = 1 + rng() % (n - (exclude ? 1 : 0));
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < n; ++i) {
      if (exclude && *exclude == i) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = q[j] - static_cast<double>(idx.feature(i)[j]);
        s += diff * diff;
      }
      all.emplace_back(s, i);
    }
    std::sort(all.begin(), all.end());
    const auto res = knn(idx, q, k, exclude);
    for (std::size_t i = 0; i < k; ++i) {
      if (res.indices[i] != all[i].second || res.dists[i] != std::sqrt(all[i].first)) ++mismatches;
    }
  }
  return {mismatches == 0, "100 random indices, " + std::to_string(mismatches) + " mismatched neighbors"};
}

Outcome criterion_7() {
  std::mt19937_64 rng(7);
  int failures = 0;
  for (int t = 0; t < 1000; ++t) {
    const int w = 1 + static_cast<int>(rng() % 64), h = 1 + static_cast<int>(rng() % 64);
    std::vector<Region> regions;
    const int count = static_cast<int>(rng() % 7);
    for (int i = 0; i < count; ++i) {
      const int x = static_cast<int>(rng() % w), y = static_cast<int>(rng() % h);
      regions.push_back({"r" + std::to_string(i), x, y, static_cast<int>(rng() % (w - x + 1)),
                         static_cast<int>(rng() % (h - y + 1))});
    }
    const ComponentLayout layout(w, h, regions);
    const Image img = random_image(w, h, t % 2 ? 3 : 1, 70000 + t);
    if (!(merge(split(img, layout)) == img)) ++failures;
  }
  return {failures == 0, "1000 layouts, " + std::to_string(failures) + " round-trip failures"};
}

Outcome criterion_8() {
  const auto start = std::chrono::steady_clock::now();
  SyntheticFaceGenerator gen(42);
  const std::vector<Image> train_set = gen.generate(120);
  const std::vector<Image> test_set = gen.generate(24);
  const PipelineConfig cfg;
  const PipelineModel model = train(train_set, cfg, TrainOptions{1, {}});
  const DegradationOperator op = cfg.degradation();
  std::vector<double> mean(cfg.layers.size() + 2, 0.0);  // bicubic, step1, layers
  for (const auto& hr : test_set) {
    const Image lr = op.apply(hr);
    const Hallucination h = hallucinate(model, lr);
    mean[0] += psnr(bicubic_resize(lr, 128, 128), hr);
    for (std::size_t s = 0; s < h.intermediates.steps.size(); ++s) mean[s + 1] += psnr(h.intermediates.steps[s], hr);
  }
  for (double& m : mean) m /= static_cast<double>(test_set.size());
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool ok = mean[0] < mean[1];
  for (std::size_t l = 2; l < mean.size(); ++l) ok = ok && mean[l] >= mean[l - 1] - 0.05;
  ok = ok && mean.back() >= mean[0] + 0.5 && seconds <= 600.0;
  std::string detail = "test N=" + std::to_string(test_set.size()) + ": bicubic " + fmt(mean[0], 5) +
                       " dB, step1 " + fmt(mean[1], 5);
  for (std::size_t l = 2; l < mean.size(); ++l) detail += ", layer" + std::to_string(l - 1) + " " + fmt(mean[l], 5);
  detail += " (" + fmt(seconds, 3) + " s)";
  return {ok, detail};
}

Outcome criterion_9() {
  const PipelineConfig cfg;
  const std::vector<Image> hr(cfg.max_k() + 1, Image(128, 128, 1, 0.5));
  const PipelineModel model = train(hr, cfg);
  double max_resid = 0.0;
  for (const auto& layer : model.layers)
    for (const auto& idx : layer)
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (float r : idx.residual(i)) max_resid = std::max(max_resid, static_cast<double>(std::abs(r)));
  const Hallucination h = hallucinate(model, cfg.degradation().apply(hr[0]));
  double max_change = 0.0;
  for (std::size_t i = 0; i < h.output.size(); ++i) {
    max_change = std::max(max_change, std::abs(h.output.data()[i] - h.intermediates.steps[0].data()[i]));
  }
  return {max_resid <= 1e-6 && max_change <= 1e-6,
          "N=" + std::to_string(hr.size()) + " identical images: max |residual| " + fmt(max_resid) +
              ", max |Step2 - Step1| " + fmt(max_change)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FACEHAL_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Compares every regular file under two directories by content.
std::string compare_dirs(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::vector<fs::path> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename());
  std::size_t nb = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++nb;
  if (nb != names.size()) return "file count differs in " + a.filename().string();
  for (const auto& n : names) {
    if (!fs::exists(b / n)) return n.string() + " missing";
    if (slurp(a / n) != slurp(b / n)) return n.string() + " differs";
    ++files;
  }
  return "";
}

Outcome criterion_10() {
  ScratchDir dir("determinism");
  const fs::path root = dir.path();
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  if (run_cli("synth --out " + q(root / "hr") + " --count 50 --seed 10") != 0) return {false, "synth failed"};
  if (run_cli("degrade --in " + q(root / "hr") + " --out " + q(root / "lr") + " --test-every 5") != 0) {
    return {false, "degrade failed"};
  }
  const fs::path manifest = root / "lr" / "manifest.jsonl";
  for (const char* run : {"a", "b"}) {
    const std::string jobs = std::string(run) == "a" ? "1" : "3";
    if (run_cli("train --manifest " + q(manifest) + " --out " + q(root / run / "model") +
                " --iters 10 --jobs " + jobs) != 0) {
      return {false, std::string("train run ") + run + " failed"};
    }
    if (run_cli("eval --model " + q(root / run / "model") + " --manifest " + q(manifest) + " --out " +
                q(root / run / "eval") + " --jobs " + jobs) != 0) {
      return {false, std::string("eval run ") + run + " failed"};
    }
  }
  std::size_t files = 0;
  std::string diff = compare_dirs(root / "a" / "model", root / "b" / "model", files);
  if (diff.empty()) diff = compare_dirs(root / "a" / "eval", root / "b" / "eval", files);
  return {diff.empty(), diff.empty() ? std::to_string(files) + " model/report files byte-identical (jobs 1 vs 3)"
                                     : diff};
}

Outcome criterion_11() {
  const std::string filter = RDN_TEST_FILTER;
  std::vector<std::string> notes;
  bool ok = true;
  for (int c : {1, 3}) {
    Image x = random_image(45, 38, c, 11 + c);
    for (double& v : x.samples()) v = static_cast<double>(static_cast<float>(v));
    const Image out = external_denoise(filter + " identity", x, 0.05);
    if (!(out == x)) {
      ok = false;
      notes.push_back("identity not bit-exact for " + std::to_string(c) + " channel(s)");
    }
  }
  const auto expect = [&](const std::string& mode, const std::string& needle) {
    try {
      external_denoise(filter + " " + mode, Image(8, 8, 1, 0.5), 0.05);
      ok = false;
      notes.push_back(mode + ": no error");
    } catch (const ExternalDenoiserError& e) {
      if (std::string(e.what()).find(needle) == std::string::npos) {
        ok = false;
        notes.push_back(mode + ": unexpected message '" + e.what() + "'");
      }
    }
  };
  expect("badmagic", "bad magic");
  expect("truncate", "truncated");
  expect("fail", "external denoiser failed (exit code 1)");
  std::string detail = "identity bit-exact (1 and 3 channels); bad magic, truncation, nonzero exit reported";
  if (!notes.empty()) {
    detail.clear();
    for (const auto& n : notes) detail += n + "; ";
  }
  return {ok, detail};
}

double reference_ssim(const Image& a, const Image& b) {
  const Image la = to_luma(a), lb = to_luma(b);
  double w[11][11], wsum = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) wsum += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + 11 <= la.height(); ++y0)
    for (int x0 = 0; x0 + 11 <= la.width(); ++x0) {
      double ma = 0, mb = 0, va = 0, vb = 0, cov = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          ma += w[i][j] / wsum * 255 * la.at(x0 + j, y0 + i);
          mb += w[i][j] / wsum * 255 * lb.at(x0 + j, y0 + i);
        }
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double da = 255 * la.at(x0 + j, y0 + i) - ma, db = 255 * lb.at(x0 + j, y0 + i) - mb;
          va += w[i][j] / wsum * da * da;
          vb += w[i][j] / wsum * db * db;
          cov += w[i][j] / wsum * da * db;
        }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return total / count;
}

Outcome criterion_12() {
  std::vector<std::string> bad;
  const auto check = [&bad](bool cond, const std::string& what) {
    if (!cond) bad.push_back(what);
  };
  const Image a = random_image(32, 32, 3, 12);
  check(std::isinf(psnr(a, a)), "psnr identical");
  check(std::abs(psnr(Image(8, 8, 1, 0.2), Image(8, 8, 1, 0.2 + 1.0 / 255)) - 48.1308) < 1e-4, "psnr 1/255");
  check(std::abs(psnr(Image(8, 8, 1, 0.0), Image(8, 8, 1, 1.0))) < 1e-12, "psnr 0 vs 1");
  check(std::abs(ssim(a, a) - 1.0) < 1e-12, "ssim identical");
  Image m(48, 48, 1);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) m.at(x, y) = 0.5 + 0.25 * std::sin(x / 3.0) * std::cos(y / 5.0);
  Image inv = m;
  for (double& v : inv.samples()) v = 1.0 - v;
  const double s_inv = ssim(m, inv);
  check(s_inv < 0.5 && std::abs(s_inv - reference_ssim(m, inv)) < 1e-10, "ssim inverted");
  const double m1 = 255 * 0.3, m2 = 255 * 0.45, c1 = std::pow(0.01 * 255, 2);
  check(std::abs(ssim(Image(16, 16, 1, 0.3), Image(16, 16, 1, 0.45)) -
                 (2 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1)) < 1e-12,
        "ssim constant closed form");

  std::vector<Image> outs, truths;
  std::vector<std::string> names;
  SyntheticFaceGenerator gen(99);
  for (int i = 0; i < 20; ++i) {
    const Image hr = gen.next();
    truths.push_back(hr);
    outs.push_back(bicubic_resize(DegradationOperator(KernelSpec{KernelType::gaussian, 0.0, 8, 0}).apply(hr), 128, 128));
    names.push_back("f" + std::to_string(i));
  }
  const ScoreReport rep = score_set(outs, truths, names);
  double mean = 0.0;
  for (const auto& s : rep.images) mean += s.psnr_db;
  check(std::abs(rep.mean_psnr - mean / 20) < 1e-12, "score_set mean");
  for (const auto* curve : {&rep.psnr_survival, &rep.ssim_survival}) {
    for (std::size_t i = 1; i < curve->size(); ++i) {
      check((*curve)[i].fraction <= (*curve)[i - 1].fraction, "survival monotone");
    }
  }
  std::string detail = "psnr/ssim examples match; survival curves non-increasing";
  if (!bad.empty()) {
    detail = "failed:";
    for (const auto& b : bad) detail += " " + b;
  }
  return {bad.empty(), detail};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
  double time_limit_s;  // 0 = none beyond the harness timeout
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "analytic RED fixed point", criterion_1, 1.0},
      {2, "adjoint dot-product test", criterion_2, 5.0},
      {3, "update rule is the frozen-gradient root", criterion_3, 0.0},
      {4, "energy gradient vs finite differences", criterion_4, 0.0},
      {5, "weight solver vs independent minimizer", criterion_5, 0.0},
      {6, "exact KNN vs brute-force sort", criterion_6, 0.0},
      {7, "split/merge bijection", criterion_7, 0.0},
      {8, "pipeline PSNR trend on synthetic faces", criterion_8, 600.0},
      {9, "degenerate manifold exactness", criterion_9, 0.0},
      {10, "determinism of train + eval", criterion_10, 0.0},
      {11, "external denoiser protocol", criterion_11, 0.0},
      {12, "metrics", criterion_12, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      o.pass = false;
      o.detail += "; exceeded " + fmt(c.time_limit_s) + " s";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << c.id << "  " << c.title
              << ": " << o.detail << "  [" << fmt(secs, 3) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
