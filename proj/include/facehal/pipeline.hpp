#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "facehal/components.hpp"
#include "facehal/config.hpp"
#include "facehal/embedding.hpp"
#include "facehal/error.hpp"
#include "facehal/hash.hpp"
#include "facehal/image.hpp"
#include "facehal/metrics.hpp"
#include "facehal/parallel.hpp"
#include "facehal/red.hpp"

namespace facehal {

struct ModelMetadata {
  std::string dataset_hash;
  std::string build_timestamp;
  std::size_t training_images = 0;
  int channels = 1;
  // mean training-set PSNR of Step 1 followed by each layer's leave-one-out output
  std::vector<double> training_psnr;
};

struct PipelineModel {
  PipelineConfig config;
  // layers[l][j]: index for embedding layer l+1, component j
  std::vector<std::vector<TrainingIndex>> layers;
  ModelMetadata metadata;
};

struct TrainOptions {
  int jobs = 1;
  // empty disables the Step-1 cache
  std::filesystem::path step1_cache;
};

namespace detail {

inline std::string red_cache_key(const Image& lr, const PipelineConfig& cfg) {
  Fnv1a h;
  h.update(lr);
  h.update(to_json(cfg.red).dump());
  h.update(to_json(cfg.denoiser).dump());
  KernelSpec k = cfg.kernel;
  k.scale = cfg.scale;
  h.update(to_json(k).dump());
  return h.hex();
}

inline std::optional<Image> read_cached_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::int32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[0] <= 0 || dims[1] <= 0 || (dims[2] != 1 && dims[2] != 3)) return std::nullopt;
  std::vector<double> data(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) return std::nullopt;
  return Image(dims[0], dims[1], dims[2], std::move(data));
}

inline void write_cached_image(const std::filesystem::path& path, const Image& img) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write cache entry " + tmp);
    const std::int32_t dims[3] = {img.width(), img.height(), img.channels()};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(img.data().data()),
              static_cast<std::streamsize>(img.size() * sizeof(double)));
  }
  std::filesystem::rename(tmp, path);
}

inline std::string build_timestamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) return epoch;
  return "unset";
}

inline double mean_psnr(const std::vector<Image>& a, const std::vector<Image>& b) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = psnr(a[i], b[i]);
    if (std::isinf(p)) continue;
    sum += p;
    ++n;
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Step 1 for one LR image, optionally memoized on disk. RED uses no training
// data, so a cached result is exactly what a fresh run would produce.
inline RedResult run_step1(const Image& lr, const PipelineConfig& cfg,
                           const std::filesystem::path& cache_dir = {}) {
  const DegradationOperator op = cfg.degradation();
  if (!cache_dir.empty()) {
    const auto path = cache_dir / (detail::red_cache_key(lr, cfg) + ".f64");
    if (auto hit = detail::read_cached_image(path)) return {std::move(*hit), {}};
    RedResult res = red_solve(lr, op, cfg.denoiser, cfg.red);
    std::filesystem::create_directories(cache_dir);
    detail::write_cached_image(path, res.x);
    return res;
  }
  return red_solve(lr, op, cfg.denoiser, cfg.red);
}

// One embedding layer applied to a whole image. `exclude` is the training
// row to leave out (leave-one-out mode).
inline Image embed_layer(const Image& x, const std::vector<TrainingIndex>& indices,
                         const LayerConfig& layer, std::shared_ptr<const ComponentLayout> layout,
                         std::optional<std::size_t> exclude = std::nullopt) {
  ComponentSet set = split(x, layout);
  for (std::size_t j = 0; j < set.parts.size(); ++j) {
    set.parts[j] = embed_component(indices[j], set.parts[j], layer.k, layer.lambda_emb, exclude);
  }
  return merge(set);
}

inline std::vector<TrainingIndex> build_layer_indices(const std::vector<Image>& inputs,
                                                      const std::vector<Image>& hr,
                                                      std::shared_ptr<const ComponentLayout> layout) {
  const std::size_t components = layout->component_count();
  std::vector<std::vector<std::vector<double>>> feats(components), resid(components);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const ComponentSet f = split(inputs[i], layout);
    const ComponentSet g = split(hr[i], layout);
    for (std::size_t j = 0; j < components; ++j) {
      std::vector<double> r(f.parts[j].size());
      for (std::size_t t = 0; t < r.size(); ++t) r[t] = g.parts[j][t] - f.parts[j][t];
      feats[j].push_back(f.parts[j]);
      resid[j].push_back(std::move(r));
    }
  }
  std::vector<TrainingIndex> out;
  out.reserve(components);
  for (std::size_t j = 0; j < components; ++j) {
    out.push_back(TrainingIndex::from_rows(feats[j], resid[j]));
  }
  return out;
}

// Degrades (unless LR images are supplied), runs Step 1 once per image, then
// builds each embedding layer from the previous layer's leave-one-out output.
inline PipelineModel train(const std::vector<Image>& hr, const PipelineConfig& cfg,
                           const TrainOptions& opts = {},
                           const std::vector<Image>* lr_override = nullptr) {
  cfg.validate();
  const std::size_t n = hr.size();
  const std::size_t need = cfg.max_k() + 1;
  if (n < need) {
    throw Error("insufficient training images: N = " + std::to_string(n) +
                " but K + 1 = " + std::to_string(need) + " are required");
  }
  if (lr_override && lr_override->size() != n) throw Error("train: LR/HR list length mismatch");
  const int channels = hr.front().channels();
  for (const auto& img : hr) {
    if (img.width() != cfg.layout.canvas_width() || img.height() != cfg.layout.canvas_height()) {
      throw ShapeError("train: image " + img.shape_string() + " does not match the " +
                       std::to_string(cfg.layout.canvas_width()) + "x" +
                       std::to_string(cfg.layout.canvas_height()) + " layout canvas");
    }
    if (img.channels() != channels) throw ShapeError("train: mixed channel counts");
  }
  const DegradationOperator op = cfg.degradation();
  auto layout = std::make_shared<const ComponentLayout>(cfg.layout);

  std::vector<Image> current(n);
  parallel_for(n, opts.jobs, [&](std::size_t i) {
    const Image lr = lr_override ? (*lr_override)[i] : op.apply(hr[i]);
    current[i] = run_step1(lr, cfg, opts.step1_cache).x;
  });

  PipelineModel model;
  model.config = cfg;
  model.metadata.training_images = n;
  model.metadata.channels = channels;
  model.metadata.training_psnr.push_back(detail::mean_psnr(current, hr));

  for (const auto& layer : cfg.layers) {
    model.layers.push_back(build_layer_indices(current, hr, layout));
    const auto& indices = model.layers.back();
    std::vector<Image> next(n);
    parallel_for(n, opts.jobs, [&](std::size_t i) {
      next[i] = embed_layer(current[i], indices, layer, layout, i);
    });
    current = std::move(next);
    model.metadata.training_psnr.push_back(detail::mean_psnr(current, hr));
  }

  Fnv1a h;
  for (const auto& img : hr) h.update(img);
  model.metadata.dataset_hash = h.hex();
  model.metadata.build_timestamp = detail::build_timestamp();
  return model;
}

struct StepOutputs {
  // steps[0] is the Step-1 reconstruction, steps[l] the output of layer l
  std::vector<Image> steps;
  RedTrace red_trace;
};

struct Hallucination {
  Image output;
  StepOutputs intermediates;
};

inline Hallucination hallucinate(const PipelineModel& model, const Image& lr) {
  const auto& cfg = model.config;
  const int ew = cfg.layout.canvas_width() / cfg.scale;
  const int eh = cfg.layout.canvas_height() / cfg.scale;
  if (lr.width() != ew || lr.height() != eh) {
    throw ShapeError("input is " + std::to_string(lr.width()) + "x" + std::to_string(lr.height()) +
                     ", expected " + std::to_string(ew) + "x" + std::to_string(eh));
  }
  if (lr.channels() != model.metadata.channels) {
    throw ShapeError("input has " + std::to_string(lr.channels()) + " channels, model expects " +
                     std::to_string(model.metadata.channels));
  }
  auto layout = std::make_shared<const ComponentLayout>(cfg.layout);
  RedResult step1 = run_step1(lr, cfg);
  Hallucination out;
  out.intermediates.red_trace = std::move(step1.trace);
  out.intermediates.steps.push_back(std::move(step1.x));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    out.intermediates.steps.push_back(
        embed_layer(out.intermediates.steps.back(), model.layers[l], cfg.layers[l], layout));
  }
  out.output = out.intermediates.steps.back();
  return out;
}

inline constexpr int kModelFormatVersion = 1;

inline std::string index_file_name(std::size_t layer, const std::string& component) {
  return "layer" + std::to_string(layer + 1) + "_" + component + ".mnce";
}

// Model directory: model.json plus one index binary per layer and component.
inline void save_model(const PipelineModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    nlohmann::json layer_files = nlohmann::json::array();
    for (std::size_t j = 0; j < model.layers[l].size(); ++j) {
      const std::string name = index_file_name(l, model.config.layout.component_name(j));
      model.layers[l][j].save(dir / name);
      layer_files.push_back(name);
    }
    files.push_back(layer_files);
  }
  nlohmann::json psnr = nlohmann::json::array();
  for (double p : model.metadata.training_psnr) psnr.push_back(detail::score_json(p));
  const nlohmann::json doc = {
      {"format", "facehal-model"},
      {"version", kModelFormatVersion},
      {"config", to_json(model.config)},
      {"metadata",
       {{"dataset_hash", model.metadata.dataset_hash},
        {"build_timestamp", model.metadata.build_timestamp},
        {"training_images", model.metadata.training_images},
        {"channels", model.metadata.channels},
        {"training_psnr", psnr}}},
      {"indices", files}};
  write_json_file((dir / "model.json").string(), doc);
}

inline PipelineModel load_model(const std::filesystem::path& dir) {
  const auto json_path = dir / "model.json";
  if (!std::filesystem::exists(json_path)) {
    throw ModelFormatError("corrupt model: " + json_path.string() + " not found");
  }
  nlohmann::json doc;
  {
    std::ifstream in(json_path);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ModelFormatError("corrupt model: " + json_path.string() + ": " + e.what());
    }
  }
  PipelineModel model;
  try {
    if (doc.at("format").get<std::string>() != "facehal-model") {
      throw ModelFormatError("corrupt model: unrecognized format tag");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelFormatError("unsupported version " + std::to_string(version) +
                             " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    model.config = pipeline_config_from_json(doc.at("config"));
    const auto& meta = doc.at("metadata");
    model.metadata.dataset_hash = meta.at("dataset_hash").get<std::string>();
    model.metadata.build_timestamp = meta.at("build_timestamp").get<std::string>();
    model.metadata.training_images = meta.at("training_images").get<std::size_t>();
    model.metadata.channels = meta.at("channels").get<int>();
    for (const auto& p : meta.at("training_psnr")) {
      model.metadata.training_psnr.push_back(p.is_null() ? std::numeric_limits<double>::infinity()
                                                         : p.get<double>());
    }
    const auto& files = doc.at("indices");
    if (files.size() != model.config.layers.size()) {
      throw ModelFormatError("corrupt model: index list does not match layer count");
    }
    const std::size_t components = model.config.layout.component_count();
    for (const auto& layer_files : files) {
      if (layer_files.size() != components) {
        throw ModelFormatError("corrupt model: layer has " + std::to_string(layer_files.size()) +
                               " indices, layout has " + std::to_string(components) +
                               " components");
      }
      std::vector<TrainingIndex> layer;
      for (std::size_t j = 0; j < components; ++j) {
        TrainingIndex idx = TrainingIndex::load(dir / layer_files[j].get<std::string>());
        const std::size_t expect_dim =
            model.config.layout.pixel_count(j) * static_cast<std::size_t>(model.metadata.channels);
        if (idx.dim() != expect_dim || idx.size() != model.metadata.training_images) {
          throw ModelFormatError("corrupt model: index " + layer_files[j].get<std::string>() +
                                 " has shape " + std::to_string(idx.size()) + "x" +
                                 std::to_string(idx.dim()) + ", expected " +
                                 std::to_string(model.metadata.training_images) + "x" +
                                 std::to_string(expect_dim));
        }
        layer.push_back(std::move(idx));
      }
      model.layers.push_back(std::move(layer));
    }
    model.config.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("corrupt model: ") + e.what());
  }
  return model;
}

}  // namespace facehal
