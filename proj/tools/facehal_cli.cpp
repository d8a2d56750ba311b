// Command-line front end: synth, degrade, train, run, eval.
//
// Exit codes: 0 when everything requested succeeded, 1 on a fatal error,
// 2 when some per-image work failed but the rest was written.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "facehal/facehal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

void log_error(const std::string& msg) { std::cerr << "facehal: error: " << msg << '\n'; }

// ---------------------------------------------------------------------------
// Configuration: defaults < --config file < command-line flags.

struct ConfigFlags {
  std::string config_path;
  std::optional<int> scale;
  std::optional<std::string> kernel;
  std::optional<double> kernel_sigma;
  std::optional<int> kernel_size;
  std::optional<double> lambda;
  std::optional<int> iters;
  std::optional<std::size_t> layers;
  std::optional<std::size_t> k;
  std::optional<double> lambda_emb;
  std::optional<std::string> denoiser;
  std::optional<std::string> denoiser_cmd;
  std::optional<std::string> layout_path;

  void add_to(CLI::App* app, bool pipeline_flags) {
    app->add_option("--config", config_path, "JSON config file mirroring PipelineConfig")
        ->check(CLI::ExistingFile);
    app->add_option("--scale", scale, "Integer decimation factor");
    app->add_option("--kernel", kernel, "Blur kernel: gaussian, bicubic, box, identity");
    app->add_option("--kernel-sigma", kernel_sigma, "Gaussian kernel std in HR pixels");
    app->add_option("--kernel-size", kernel_size, "Kernel side length (0 = automatic)");
    if (!pipeline_flags) return;
    app->add_option("--lambda", lambda, "RED trade-off parameter");
    app->add_option("--iters", iters, "RED outer iterations");
    app->add_option("--layers", layers, "Number of embedding layers");
    app->add_option("--k", k, "Neighbors per embedding layer (applies to every layer)");
    app->add_option("--lambda-emb", lambda_emb, "Locality penalty (applies to every layer)");
    app->add_option("--denoiser", denoiser, "identity, gaussian, nlm, median or external");
    app->add_option("--denoiser-cmd", denoiser_cmd, "External denoiser command (implies external)");
    app->add_option("--layout", layout_path, "Component layout JSON file")->check(CLI::ExistingFile);
  }

  facehal::PipelineConfig resolve() const {
    facehal::PipelineConfig cfg;
    if (!config_path.empty()) {
      cfg = facehal::pipeline_config_from_json(facehal::read_json_file(config_path), cfg);
    }
    json patch = json::object();
    if (scale) patch["scale"] = *scale;
    json kj = json::object();
    if (kernel) kj["type"] = *kernel;
    if (kernel_sigma) kj["sigma"] = *kernel_sigma;
    if (kernel_size) kj["size"] = *kernel_size;
    if (!kj.empty()) patch["kernel"] = kj;
    json rj = json::object();
    if (lambda) rj["lambda"] = *lambda;
    if (iters) rj["outer_iters"] = *iters;
    if (!rj.empty()) {
      // keep an explicitly configured schedule unless the length changes
      json base = facehal::to_json(cfg.red);
      base.update(rj);
      if (iters) base["schedule"]["steps"] = *iters;
      patch["red"] = base;
    }
    if (layers) patch["layers"] = *layers;
    json dj = json::object();
    if (denoiser) dj["kind"] = *denoiser;
    if (denoiser_cmd) {
      dj["command"] = *denoiser_cmd;
      if (!denoiser) dj["kind"] = "external";
    }
    if (!dj.empty()) patch["denoiser"] = dj;
    cfg = facehal::pipeline_config_from_json(patch, cfg);
    if (layout_path) cfg.layout = facehal::load_layout(*layout_path);
    for (auto& l : cfg.layers) {
      if (k) l.k = *k;
      if (lambda_emb) l.lambda_emb = *lambda_emb;
    }
    return cfg;
  }
};

void echo_config(const fs::path& dir, json doc) {
  fs::create_directories(dir);
  facehal::write_json_file((dir / "resolved_config.json").string(), doc);
}

// ---------------------------------------------------------------------------
// Manifest: one JSON object per line, {"lr": path?, "hr": path, "split": "train"|"test"}.
// Relative paths resolve against the manifest's directory.

struct ManifestEntry {
  std::optional<fs::path> lr;
  fs::path hr;
  std::string split;
  std::size_t line = 0;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw facehal::IoError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&base](const std::string& p) {
    const fs::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<ManifestEntry> entries;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line);
    try {
      const json j = json::parse(text);
      ManifestEntry e;
      e.line = line;
      e.hr = resolve(j.at("hr").get<std::string>());
      if (j.contains("lr") && !j.at("lr").is_null()) e.lr = resolve(j.at("lr").get<std::string>());
      e.split = j.value("split", std::string("train"));
      if (e.split != "train" && e.split != "test") {
        throw facehal::Error("split must be 'train' or 'test', got '" + e.split + "'");
      }
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw facehal::Error(where + ": " + ex.what());
    } catch (const facehal::Error& ex) {
      throw facehal::Error(where + ": " + ex.what());
    }
  }
  return entries;
}

std::vector<ManifestEntry> select_split(const std::vector<ManifestEntry>& all,
                                        const std::string& split) {
  std::vector<ManifestEntry> out;
  std::copy_if(all.begin(), all.end(), std::back_inserter(out),
               [&split](const ManifestEntry& e) { return e.split == split; });
  return out;
}

std::string entry_where(const fs::path& manifest, const ManifestEntry& e) {
  return manifest.string() + ":" + std::to_string(e.line);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw facehal::IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && facehal::is_image_path(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Loads LR/HR pairs for a manifest split; entries without an LR path are
// degraded with the configured operator.
struct LoadedPairs {
  std::vector<facehal::Image> lr;
  std::vector<facehal::Image> hr;
  std::vector<std::string> names;
};

LoadedPairs load_pairs(const fs::path& manifest, const std::vector<ManifestEntry>& entries,
                       const facehal::PipelineConfig& cfg, int jobs) {
  const facehal::DegradationOperator op = cfg.degradation();
  const int lr_w = cfg.layout.canvas_width() / cfg.scale;
  const int lr_h = cfg.layout.canvas_height() / cfg.scale;
  LoadedPairs p;
  p.lr.resize(entries.size());
  p.hr.resize(entries.size());
  for (const auto& e : entries) p.names.push_back(e.hr.stem().string());
  facehal::parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    const std::string where = entry_where(manifest, e);
    try {
      p.hr[i] = facehal::load_image(e.hr);
      if (p.hr[i].width() != cfg.layout.canvas_width() ||
          p.hr[i].height() != cfg.layout.canvas_height()) {
        throw facehal::ShapeError("HR image " + e.hr.string() + " is " + p.hr[i].shape_string() +
                                  ", expected " + std::to_string(cfg.layout.canvas_width()) + "x" +
                                  std::to_string(cfg.layout.canvas_height()));
      }
      if (e.lr) {
        p.lr[i] = facehal::load_image(*e.lr);
        if (p.lr[i].width() != lr_w || p.lr[i].height() != lr_h ||
            p.lr[i].channels() != p.hr[i].channels()) {
          throw facehal::ShapeError("LR image " + e.lr->string() + " is " + p.lr[i].shape_string() +
                                    ", expected " + std::to_string(lr_w) + "x" +
                                    std::to_string(lr_h) + " with the HR channel count");
        }
      } else {
        p.lr[i] = op.apply(p.hr[i]);
      }
    } catch (const std::exception& ex) {
      throw facehal::Error(where + ": " + ex.what());
    }
  });
  return p;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  fs::path out;
  std::size_t count = 60;
  std::uint64_t seed = 1;
  int channels = 1;
  std::string prefix = "face";
};

int cmd_synth(const SynthArgs& a) {
  if (a.channels != 1 && a.channels != 3) throw facehal::Error("--channels must be 1 or 3");
  fs::create_directories(a.out);
  facehal::SyntheticFaceGenerator gen(a.seed, a.channels);
  for (std::size_t i = 0; i < a.count; ++i) {
    std::ostringstream name;
    name << a.prefix << '_' << std::setw(4) << std::setfill('0') << i << ".png";
    facehal::save_image(gen.next(), a.out / name.str());
  }
  echo_config(a.out, {{"command", "synth"},
                      {"count", a.count},
                      {"seed", a.seed},
                      {"channels", a.channels},
                      {"prefix", a.prefix}});
  std::cout << "wrote " << a.count << " images to " << a.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// degrade

struct DegradeArgs {
  fs::path in;
  fs::path out;
  int test_every = 0;
  ConfigFlags flags;
};

int cmd_degrade(const DegradeArgs& a) {
  const facehal::PipelineConfig cfg = a.flags.resolve();
  if (cfg.scale < 1) throw facehal::Error("--scale must be >= 1");
  facehal::KernelSpec spec = cfg.kernel;
  spec.scale = cfg.scale;
  // scale 1 is a plain copy, so the kernel is forced to the identity
  if (cfg.scale == 1) spec.type = facehal::KernelType::identity;
  const facehal::DegradationOperator op(spec);
  const auto files = list_images(a.in);
  if (files.empty()) throw facehal::Error("no images found in " + a.in.string());
  fs::create_directories(a.out);

  std::ofstream manifest(a.out / "manifest.jsonl");
  if (!manifest) throw facehal::IoError("cannot write " + (a.out / "manifest.jsonl").string());
  std::size_t failed = 0, written = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const fs::path& src = files[i];
    try {
      const facehal::Image hr = facehal::load_image(src);
      fs::path dst;
      if (cfg.scale == 1) {
        dst = a.out / src.filename();
        fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
      } else {
        dst = a.out / (src.stem().string() + ".png");
        facehal::save_image(op.apply(hr), dst);
      }
      const bool test = a.test_every > 0 && (i + 1) % static_cast<std::size_t>(a.test_every) == 0;
      const json line = {{"lr", dst.filename().string()},
                         {"hr", fs::absolute(src).lexically_normal().string()},
                         {"split", test ? "test" : "train"}};
      manifest << line.dump() << '\n';
      ++written;
    } catch (const std::exception& ex) {
      log_error(src.string() + ": " + ex.what());
      ++failed;
    }
  }
  json kernel = facehal::to_json(spec);
  echo_config(a.out, {{"command", "degrade"},
                      {"scale", cfg.scale},
                      {"kernel", kernel},
                      {"test_every", a.test_every}});
  std::cout << "degraded " << written << " of " << files.size() << " images";
  if (failed) std::cout << " (" << failed << " failed)";
  std::cout << '\n';
  return failed ? kExitPartial : 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  fs::path manifest;
  fs::path model_out;
  fs::path cache_dir;
  int jobs = 1;
  ConfigFlags flags;
};

void print_psnr_table(std::ostream& out, const std::vector<double>& psnrs) {
  out << std::left << std::setw(10) << "stage" << "mean_psnr_db\n";
  for (std::size_t i = 0; i < psnrs.size(); ++i) {
    const std::string stage = i == 0 ? "step1" : "layer" + std::to_string(i);
    out << std::left << std::setw(10) << stage << std::fixed << std::setprecision(4) << psnrs[i]
        << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

int cmd_train(const TrainArgs& a) {
  const facehal::PipelineConfig cfg = a.flags.resolve();
  cfg.validate();
  const auto entries = select_split(read_manifest(a.manifest), "train");
  if (entries.empty()) throw facehal::Error(a.manifest.string() + ": empty train split");
  const LoadedPairs pairs = load_pairs(a.manifest, entries, cfg, a.jobs);
  facehal::TrainOptions opts;
  opts.jobs = a.jobs;
  opts.step1_cache = a.cache_dir;
  const facehal::PipelineModel model = facehal::train(pairs.hr, cfg, opts, &pairs.lr);
  facehal::save_model(model, a.model_out);
  echo_config(a.model_out, {{"command", "train"}, {"pipeline", facehal::to_json(cfg)}});
  std::cout << "trained on " << pairs.hr.size() << " images, " << cfg.layers.size()
            << " layers\n";
  print_psnr_table(std::cout, model.metadata.training_psnr);
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  fs::path model;
  fs::path input;
  fs::path out;
  std::optional<fs::path> gt;
  bool emit_steps = false;
  int jobs = 1;
};

std::optional<fs::path> find_gt(const fs::path& gt, const fs::path& input) {
  if (!fs::is_directory(gt)) return gt;
  if (fs::exists(gt / input.filename())) return gt / input.filename();
  for (const char* ext : {".png", ".pgm", ".ppm"}) {
    const fs::path p = gt / (input.stem().string() + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

int cmd_run(const RunArgs& a) {
  const facehal::PipelineModel model = facehal::load_model(a.model);
  const auto& cfg = model.config;
  std::vector<fs::path> inputs;
  if (fs::is_directory(a.input)) {
    inputs = list_images(a.input);
    if (inputs.empty()) throw facehal::Error("no images found in " + a.input.string());
  } else {
    inputs.push_back(a.input);
  }
  fs::create_directories(a.out);
  std::vector<std::string> errors(inputs.size());
  facehal::parallel_for(inputs.size(), a.jobs, [&](std::size_t i) {
    const fs::path& src = inputs[i];
    try {
      const facehal::Image lr = facehal::load_image(src);
      const facehal::Hallucination h = facehal::hallucinate(model, lr);
      facehal::save_image(h.output, a.out / (src.stem().string() + ".png"));
      if (!a.emit_steps) return;
      std::vector<facehal::Image> strip;
      strip.push_back(facehal::bicubic_resize(lr, cfg.layout.canvas_width(), cfg.layout.canvas_height()));
      for (const auto& s : h.intermediates.steps) strip.push_back(s);
      if (a.gt) {
        const auto gt_path = find_gt(*a.gt, src);
        if (!gt_path) throw facehal::IoError("no ground truth for " + src.filename().string());
        facehal::Image gt = facehal::load_image(*gt_path);
        if (gt.width() != cfg.layout.canvas_width() || gt.height() != cfg.layout.canvas_height() ||
            gt.channels() != h.output.channels()) {
          throw facehal::ShapeError("ground truth " + gt_path->string() + " is " +
                                    gt.shape_string() + ", expected " + h.output.shape_string());
        }
        strip.push_back(std::move(gt));
      }
      facehal::save_image(facehal::hconcat(strip), a.out / (src.stem().string() + "_steps.png"));
      h.intermediates.red_trace.write_csv((a.out / (src.stem().string() + "_red_trace.csv")).string());
    } catch (const std::exception& ex) {
      errors[i] = src.string() + ": " + ex.what();
    }
  });
  std::size_t failed = 0;
  for (const auto& e : errors) {
    if (e.empty()) continue;
    log_error(e);
    ++failed;
  }
  echo_config(a.out, {{"command", "run"},
                      {"model", fs::absolute(a.model).lexically_normal().string()},
                      {"emit_steps", a.emit_steps},
                      {"pipeline", facehal::to_json(cfg)}});
  if (failed == inputs.size()) return kExitFatal;
  return failed ? kExitPartial : 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  fs::path model;
  fs::path manifest;
  fs::path out;
  fs::path cache_dir;
  int jobs = 1;
  bool save_images = false;
};

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path);
  if (!out) throw facehal::IoError("cannot write " + path.string());
  fn(out);
}

int cmd_eval(const EvalArgs& a) {
  const facehal::PipelineModel model = facehal::load_model(a.model);
  const auto& cfg = model.config;
  const auto entries = select_split(read_manifest(a.manifest), "test");
  if (entries.empty()) throw facehal::Error(a.manifest.string() + ": empty test split");
  const LoadedPairs pairs = load_pairs(a.manifest, entries, cfg, a.jobs);
  const std::size_t n = entries.size();
  const std::size_t layers = model.layers.size();

  // stage 0 = bicubic, 1 = step1, 1 + l = layer l
  std::vector<std::vector<facehal::Image>> stages(layers + 2, std::vector<facehal::Image>(n));
  const auto layout = std::make_shared<const facehal::ComponentLayout>(cfg.layout);
  facehal::parallel_for(n, a.jobs, [&](std::size_t i) {
    const facehal::Image& lr = pairs.lr[i];
    stages[0][i] = facehal::bicubic_resize(lr, cfg.layout.canvas_width(), cfg.layout.canvas_height());
    std::vector<facehal::Image> steps;
    steps.push_back(facehal::run_step1(lr, cfg, a.cache_dir).x);
    for (std::size_t l = 0; l < layers; ++l) {
      steps.push_back(facehal::embed_layer(steps.back(), model.layers[l], cfg.layers[l], layout));
    }
    for (std::size_t s = 0; s < steps.size(); ++s) stages[s + 1][i] = std::move(steps[s]);
  });

  fs::create_directories(a.out);
  std::vector<std::string> stage_names{"bicubic", "step1"};
  for (std::size_t l = 1; l <= layers; ++l) stage_names.push_back("layer" + std::to_string(l));

  json stage_json = json::object();
  json summary = json::array();
  std::vector<facehal::ScoreReport> reports;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    reports.push_back(facehal::score_set(stages[s], pairs.hr, pairs.names));
    const auto& rep = reports.back();
    stage_json[stage_names[s]] = facehal::report_to_json(rep);
    summary.push_back({{"stage", stage_names[s]},
                       {"mean_psnr_db", facehal::detail::score_json(rep.mean_psnr)},
                       {"mean_ssim", rep.mean_ssim}});
  }
  const auto& final_rep = reports.back();
  const auto& bicubic_rep = reports.front();
  const auto emit = [&](const std::string& prefix, const facehal::ScoreReport& rep) {
    write_text(a.out / (prefix + "scores.csv"), [&](std::ostream& o) { write_scores_csv(rep, o); });
    write_text(a.out / (prefix + "survival_psnr.csv"),
               [&](std::ostream& o) { write_survival_csv(rep.psnr_survival, o); });
    write_text(a.out / (prefix + "survival_ssim.csv"),
               [&](std::ostream& o) { write_survival_csv(rep.ssim_survival, o); });
  };
  emit("", final_rep);
  emit("bicubic_", bicubic_rep);
  const json report = {{"pipeline", facehal::report_to_json(final_rep)},
                       {"bicubic", facehal::report_to_json(bicubic_rep)},
                       {"stages", stage_json},
                       {"summary", summary},
                       {"model_dataset_hash", model.metadata.dataset_hash},
                       {"test_images", n}};
  facehal::write_json_file((a.out / "report.json").string(), report);
  if (a.save_images) {
    for (std::size_t i = 0; i < n; ++i) {
      facehal::save_image(stages.back()[i], a.out / (pairs.names[i] + ".png"));
    }
  }
  echo_config(a.out, {{"command", "eval"},
                      {"manifest", fs::absolute(a.manifest).lexically_normal().string()},
                      {"pipeline", facehal::to_json(cfg)}});

  std::cout << std::left << std::setw(10) << "stage" << std::setw(14) << "mean_psnr_db"
            << "mean_ssim\n";
  for (std::size_t s = 0; s < reports.size(); ++s) {
    std::cout << std::left << std::setw(10) << stage_names[s] << std::fixed << std::setprecision(4)
              << std::setw(14) << reports[s].mean_psnr << reports[s].mean_ssim << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step tiny face hallucination: RED reconstruction + neighbor component embedding"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic aligned face images");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--count", synth.count, "Number of images");
  s->add_option("--seed", synth.seed, "Generator seed");
  s->add_option("--channels", synth.channels, "1 (gray) or 3 (RGB)");
  s->add_option("--prefix", synth.prefix, "File name prefix");

  DegradeArgs degrade;
  auto* d = app.add_subcommand("degrade", "Blur and decimate HR images; write LR images and a manifest");
  d->add_option("--in", degrade.in, "Directory of HR images")->required()->check(CLI::ExistingDirectory);
  d->add_option("--out", degrade.out, "Output directory")->required();
  d->add_option("--test-every", degrade.test_every, "Put every n-th image in the test split (0 = none)");
  degrade.flags.add_to(d, false);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model from the manifest's train split");
  t->add_option("--manifest", train.manifest, "JSON-lines manifest")->required()->check(CLI::ExistingFile);
  t->add_option("--model-out,--out", train.model_out, "Model directory")->required();
  t->add_option("--cache-dir", train.cache_dir, "Step-1 cache directory");
  t->add_option("--jobs,-j", train.jobs, "Worker threads");
  train.flags.add_to(t, true);

  RunArgs run;
  auto* r = app.add_subcommand("run", "Hallucinate HR faces from LR images");
  r->add_option("--model", run.model, "Model directory")->required()->check(CLI::ExistingDirectory);
  r->add_option("--input,--in", run.input, "LR image or directory")->required()->check(CLI::ExistingPath);
  r->add_option("--out", run.out, "Output directory")->required();
  r->add_option("--gt", run.gt, "Ground-truth image or directory for --emit-steps");
  r->add_flag("--emit-steps", run.emit_steps, "Also write a comparison strip of all steps");
  r->add_option("--jobs,-j", run.jobs, "Worker threads");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score the manifest's test split against ground truth");
  e->add_option("--model", eval.model, "Model directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--manifest", eval.manifest, "JSON-lines manifest")->required()->check(CLI::ExistingFile);
  e->add_option("--out", eval.out, "Report directory")->required();
  e->add_option("--cache-dir", eval.cache_dir, "Step-1 cache directory");
  e->add_option("--jobs,-j", eval.jobs, "Worker threads");
  e->add_flag("--save-images", eval.save_images, "Also write the hallucinated test images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex);
  }

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (d->parsed()) return cmd_degrade(degrade);
    if (t->parsed()) return cmd_train(train);
    if (r->parsed()) return cmd_run(run);
    if (e->parsed()) return cmd_eval(eval);
  } catch (const std::exception& ex) {
    log_error(ex.what());
    return kExitFatal;
  }
  return kExitFatal;
}
