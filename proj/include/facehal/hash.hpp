#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

#include "facehal/image.hpp"

namespace facehal {

// 64-bit FNV-1a; stable across platforms, used for cache keys and dataset
// fingerprints, not for security.
class Fnv1a {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update(const Image& img) {
    const std::int32_t dims[3] = {img.width(), img.height(), img.channels()};
    update(dims, sizeof(dims));
    update(img.data().data(), img.size() * sizeof(double));
  }

  std::uint64_t digest() const { return state_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return buf;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace facehal
