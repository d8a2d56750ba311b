#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "facehal/components.hpp"
#include "facehal/degradation.hpp"
#include "facehal/denoise.hpp"
#include "facehal/error.hpp"
#include "facehal/red.hpp"

namespace facehal {

struct LayerConfig {
  std::size_t k = 9;
  double lambda_emb = 0.04;

  bool operator==(const LayerConfig&) const = default;
};

// Deeper layers embed ever smaller residuals; more neighbors and a stronger
// locality penalty keep them from fitting noise.
inline std::vector<LayerConfig> default_layers() {
  return {{12, 1.0}, {24, 300.0}, {36, 3000.0}};
}

// First `count` default layers; extra layers repeat the last default.
inline std::vector<LayerConfig> layers_for_count(std::size_t count) {
  auto defaults = default_layers();
  std::vector<LayerConfig> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(defaults[std::min(i, defaults.size() - 1)]);
  return out;
}

struct PipelineConfig {
  int scale = 8;
  KernelSpec kernel{};  // kernel.scale is kept equal to scale
  RedConfig red{};
  ComponentLayout layout = default_layout();
  std::vector<LayerConfig> layers = default_layers();
  Denoiser denoiser{};

  DegradationOperator degradation() const {
    KernelSpec spec = kernel;
    spec.scale = scale;
    return DegradationOperator(spec);
  }

  void validate() const {
    if (scale < 2) throw Error("pipeline scale must be >= 2, got " + std::to_string(scale));
    if (layers.empty()) throw Error("pipeline needs at least one embedding layer");
    for (const auto& l : layers) {
      if (l.k < 1) throw Error("layer K must be >= 1");
      if (l.lambda_emb < 0.0) throw Error("layer lambda_emb must be >= 0");
    }
    if (layout.canvas_width() % scale != 0 || layout.canvas_height() % scale != 0) {
      throw Error("layout canvas must be divisible by the scale factor");
    }
    red.validate();
  }

  std::size_t max_k() const {
    std::size_t k = 0;
    for (const auto& l : layers) k = std::max(k, l.k);
    return k;
  }
};

// JSON mapping. Readers start from the defaults, so partial documents are
// fine; unknown keys are ignored.
namespace detail {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const KernelSpec& k) {
  return {{"type", to_string(k.type)}, {"sigma", k.sigma}, {"scale", k.scale}, {"size", k.size}};
}

inline void from_json_into(const nlohmann::json& j, KernelSpec& k) {
  if (j.contains("type")) k.type = kernel_type_from_string(j.at("type").get<std::string>());
  detail::read_if(j, "sigma", k.sigma);
  detail::read_if(j, "scale", k.scale);
  detail::read_if(j, "size", k.size);
}

inline nlohmann::json to_json(const NoiseSchedule& s) {
  return {{"sigma_start", s.sigma_start},
          {"sigma_end", s.sigma_end},
          {"steps", s.steps},
          {"spacing", s.spacing == NoiseSchedule::Spacing::log ? "log" : "linear"}};
}

inline void from_json_into(const nlohmann::json& j, NoiseSchedule& s) {
  detail::read_if(j, "sigma_start", s.sigma_start);
  detail::read_if(j, "sigma_end", s.sigma_end);
  detail::read_if(j, "steps", s.steps);
  if (j.contains("spacing")) {
    const auto sp = j.at("spacing").get<std::string>();
    if (sp == "log")
      s.spacing = NoiseSchedule::Spacing::log;
    else if (sp == "linear")
      s.spacing = NoiseSchedule::Spacing::linear;
    else
      throw Error("unknown schedule spacing '" + sp + "'");
  }
}

inline nlohmann::json to_json(const Denoiser& d) {
  return {{"kind", to_string(d.kind)},
          {"noise_level", d.noise_level},
          {"gaussian_scale", d.gaussian_scale},
          {"nlm_k", d.nlm_k},
          {"boundary", to_string(d.boundary)},
          {"command", d.command},
          {"timeout_seconds", d.timeout_seconds}};
}

inline void from_json_into(const nlohmann::json& j, Denoiser& d) {
  if (j.contains("kind")) d.kind = denoiser_kind_from_string(j.at("kind").get<std::string>());
  detail::read_if(j, "noise_level", d.noise_level);
  detail::read_if(j, "gaussian_scale", d.gaussian_scale);
  detail::read_if(j, "nlm_k", d.nlm_k);
  if (j.contains("boundary")) d.boundary = boundary_from_string(j.at("boundary").get<std::string>());
  detail::read_if(j, "command", d.command);
  detail::read_if(j, "timeout_seconds", d.timeout_seconds);
}

inline nlohmann::json to_json(const RedConfig& r) {
  return {{"lambda", r.lambda},
          {"outer_iters", r.outer_iters},
          {"schedule", to_json(r.schedule)},
          {"cg_tol", r.cg_tol},
          {"cg_max_iter", r.cg_max_iter},
          {"init", to_string(r.init)},
          {"min_rel_change", r.min_rel_change},
          {"record_trace", r.record_trace}};
}

inline void from_json_into(const nlohmann::json& j, RedConfig& r) {
  detail::read_if(j, "lambda", r.lambda);
  detail::read_if(j, "outer_iters", r.outer_iters);
  // the schedule follows the iteration budget unless given explicitly
  r.schedule.steps = r.outer_iters;
  if (j.contains("schedule")) from_json_into(j.at("schedule"), r.schedule);
  detail::read_if(j, "cg_tol", r.cg_tol);
  detail::read_if(j, "cg_max_iter", r.cg_max_iter);
  if (j.contains("init")) r.init = red_init_from_string(j.at("init").get<std::string>());
  detail::read_if(j, "min_rel_change", r.min_rel_change);
  detail::read_if(j, "record_trace", r.record_trace);
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : c.layers) layers.push_back({{"K", l.k}, {"lambda_emb", l.lambda_emb}});
  KernelSpec kernel = c.kernel;
  kernel.scale = c.scale;
  return {{"scale", c.scale},
          {"kernel", to_json(kernel)},
          {"red", to_json(c.red)},
          {"layout", layout_to_json(c.layout)},
          {"layers", layers},
          {"denoiser", to_json(c.denoiser)}};
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                                PipelineConfig base = PipelineConfig{}) {
  try {
    detail::read_if(j, "scale", base.scale);
    if (j.contains("kernel")) from_json_into(j.at("kernel"), base.kernel);
    base.kernel.scale = base.scale;
    if (j.contains("red")) from_json_into(j.at("red"), base.red);
    if (j.contains("layout")) base.layout = layout_from_json(j.at("layout"));
    if (j.contains("layers")) {
      const auto& lj = j.at("layers");
      if (lj.is_number_integer()) {
        base.layers = layers_for_count(lj.get<std::size_t>());
      } else {
        base.layers.clear();
        for (const auto& l : lj) {
          LayerConfig lc;
          detail::read_if(l, "K", lc.k);
          detail::read_if(l, "lambda_emb", lc.lambda_emb);
          base.layers.push_back(lc);
        }
      }
    }
    if (j.contains("denoiser")) from_json_into(j.at("denoiser"), base.denoiser);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid pipeline config: ") + e.what());
  }
  return base;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace facehal
