// Copyright 2026 The kpn-burst Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KPN_IMAGE_HPP_
#define KPN_IMAGE_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpn {

/// Single-channel float image, row-major.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, float fill = 0.0f)
      : height(h), width(w), pixels(h * w, fill) {}
  Image(std::size_t h, std::size_t w, std::vector<float> values);

  std::size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
  float& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }

  bool same_extent(const Image& other) const {
    return height == other.height && width == other.width;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

class ImageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ImageError naming both extents when a and b differ in size.
void require_same_extent(const Image& a, const Image& b, const std::string& op);

/// Window of extent (h, w) whose top-left corner is (top, left).
Image crop(const Image& src, std::ptrdiff_t top, std::ptrdiff_t left,
           std::size_t h, std::size_t w);

}  // namespace kpn

#endif  // KPN_IMAGE_HPP_
