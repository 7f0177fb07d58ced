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

#include "kpn/image.hpp"

#include <algorithm>

namespace kpn {

Image::Image(std::size_t h, std::size_t w, std::vector<float> values)
    : height(h), width(w), pixels(std::move(values)) {
  if (pixels.size() != h * w) {
    throw ImageError("image: " + std::to_string(h) + "x" + std::to_string(w) +
                     " needs " + std::to_string(h * w) + " pixels, got " +
                     std::to_string(pixels.size()));
  }
}

void require_same_extent(const Image& a, const Image& b, const std::string& op) {
  if (!a.same_extent(b)) {
    throw ImageError(op + ": extents differ (" + std::to_string(a.height) +
                     "x" + std::to_string(a.width) + " vs " +
                     std::to_string(b.height) + "x" + std::to_string(b.width) +
                     ")");
  }
}

Image crop(const Image& src, std::ptrdiff_t top, std::ptrdiff_t left,
           std::size_t h, std::size_t w) {
  if (top < 0 || left < 0 ||
      static_cast<std::size_t>(top) + h > src.height ||
      static_cast<std::size_t>(left) + w > src.width) {
    throw ImageError("crop: window " + std::to_string(h) + "x" +
                     std::to_string(w) + " at (" + std::to_string(top) + "," +
                     std::to_string(left) + ") exceeds " +
                     std::to_string(src.height) + "x" +
                     std::to_string(src.width) + " source");
  }
  Image out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const float* row = src.pixels.data() + (static_cast<std::size_t>(top) + y) * src.width +
                       static_cast<std::size_t>(left);
    std::copy(row, row + w, out.pixels.data() + y * w);
  }
  return out;
}

}  // namespace kpn
