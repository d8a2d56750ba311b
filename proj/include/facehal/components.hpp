#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "facehal/error.hpp"
#include "facehal/image.hpp"

namespace facehal {

struct Region {
  std::string name;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool operator==(const Region&) const = default;
};

inline constexpr const char* kRemainingRegion = "remaining";

// Partition of the canvas into named components. Feature rectangles claim
// pixels in list order (earlier wins); whatever is left is "remaining",
// which is always the last component.
class ComponentLayout {
 public:
  ComponentLayout() = default;

  ComponentLayout(int canvas_width, int canvas_height, std::vector<Region> features)
      : width_(canvas_width), height_(canvas_height), features_(std::move(features)) {
    if (width_ <= 0 || height_ <= 0) throw ShapeError("layout canvas must be positive");
    for (const auto& r : features_) {
      if (r.name == kRemainingRegion) throw Error("'remaining' cannot be given a rectangle");
      if (r.w < 0 || r.h < 0 || r.x < 0 || r.y < 0 || r.x + r.w > width_ ||
          r.y + r.h > height_) {
        throw ShapeError("region '" + r.name + "' lies outside the " + std::to_string(width_) +
                         "x" + std::to_string(height_) + " canvas");
      }
    }
    labels_.assign(static_cast<std::size_t>(width_) * height_,
                   static_cast<std::uint16_t>(features_.size()));
    counts_.assign(features_.size() + 1, 0);
    for (int py = 0; py < height_; ++py) {
      for (int px = 0; px < width_; ++px) {
        std::uint16_t label = static_cast<std::uint16_t>(features_.size());
        for (std::size_t j = 0; j < features_.size(); ++j) {
          if (features_[j].contains(px, py)) {
            label = static_cast<std::uint16_t>(j);
            break;
          }
        }
        labels_[static_cast<std::size_t>(py) * width_ + px] = label;
        ++counts_[label];
      }
    }
  }

  int canvas_width() const { return width_; }
  int canvas_height() const { return height_; }
  const std::vector<Region>& features() const { return features_; }
  std::size_t component_count() const { return features_.size() + 1; }

  std::string component_name(std::size_t j) const {
    return j < features_.size() ? features_[j].name : std::string(kRemainingRegion);
  }

  std::size_t component_of(int px, int py) const {
    return labels_[static_cast<std::size_t>(py) * width_ + px];
  }

  std::size_t pixel_count(std::size_t j) const { return counts_[j]; }

  bool operator==(const ComponentLayout& o) const {
    return width_ == o.width_ && height_ == o.height_ && features_ == o.features_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Region> features_;
  std::vector<std::uint16_t> labels_;
  std::vector<std::size_t> counts_;
};

// Rectangles for a 128x128 aligned face.
inline ComponentLayout default_layout() {
  return ComponentLayout(128, 128,
                         {{"eyebrows", 24, 34, 80, 14},
                          {"eyes", 24, 48, 80, 16},
                          {"noses", 48, 64, 32, 24},
                          {"mouths", 40, 88, 48, 18}});
}

inline nlohmann::json layout_to_json(const ComponentLayout& layout) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : layout.features()) {
    regions.push_back({{"name", r.name}, {"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}});
  }
  regions.push_back({{"name", kRemainingRegion}});
  return {{"canvas", {layout.canvas_width(), layout.canvas_height()}}, {"regions", regions}};
}

inline ComponentLayout layout_from_json(const nlohmann::json& j) {
  try {
    const auto& canvas = j.at("canvas");
    std::vector<Region> features;
    for (const auto& r : j.at("regions")) {
      const std::string name = r.at("name").get<std::string>();
      if (name == kRemainingRegion) continue;
      features.push_back({name, r.at("x").get<int>(), r.at("y").get<int>(), r.at("w").get<int>(),
                          r.at("h").get<int>()});
    }
    return ComponentLayout(canvas.at(0).get<int>(), canvas.at(1).get<int>(), std::move(features));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid layout JSON: ") + e.what());
  }
}

inline ComponentLayout load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout file " + path);
  try {
    return layout_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("layout file " + path + ": " + e.what());
  }
}

// Per-component flattened pixels, row-major scan order, channels
// interleaved per pixel.
struct ComponentSet {
  std::shared_ptr<const ComponentLayout> layout;
  int channels = 1;
  std::vector<std::vector<double>> parts;
};

inline ComponentSet split(const Image& img, std::shared_ptr<const ComponentLayout> layout) {
  if (img.width() != layout->canvas_width() || img.height() != layout->canvas_height()) {
    throw ShapeError("split: image " + img.shape_string() + " does not match layout canvas " +
                     std::to_string(layout->canvas_width()) + "x" +
                     std::to_string(layout->canvas_height()));
  }
  const int c = img.channels();
  ComponentSet set{layout, c, std::vector<std::vector<double>>(layout->component_count())};
  for (std::size_t j = 0; j < set.parts.size(); ++j) set.parts[j].reserve(layout->pixel_count(j) * c);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      auto& part = set.parts[layout->component_of(x, y)];
      for (int ch = 0; ch < c; ++ch) part.push_back(img.at(x, y, ch));
    }
  return set;
}

inline ComponentSet split(const Image& img, const ComponentLayout& layout) {
  return split(img, std::make_shared<const ComponentLayout>(layout));
}

inline Image merge(const ComponentSet& set) {
  if (!set.layout) throw Error("merge: component set has no layout");
  const auto& layout = *set.layout;
  if (set.parts.size() != layout.component_count()) {
    throw Error("merge: incomplete component set (" + std::to_string(set.parts.size()) + " of " +
                std::to_string(layout.component_count()) + " components)");
  }
  for (std::size_t j = 0; j < set.parts.size(); ++j) {
    if (set.parts[j].size() != layout.pixel_count(j) * set.channels) {
      throw Error("merge: incomplete component '" + layout.component_name(j) + "'");
    }
  }
  Image out(layout.canvas_width(), layout.canvas_height(), set.channels);
  std::vector<std::size_t> cursor(set.parts.size(), 0);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const std::size_t j = layout.component_of(x, y);
      for (int ch = 0; ch < set.channels; ++ch) out.at(x, y, ch) = set.parts[j][cursor[j]++];
    }
  return out;
}

}  // namespace facehal
