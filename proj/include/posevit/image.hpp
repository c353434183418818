#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace posevit {

// 8-bit RGB raster, row-major, three samples per pixel.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  static constexpr int kChannels = 3;

  static Image black(int height, int width);

  std::uint8_t* at(int y, int x) {
    return pixels.data() + static_cast<std::size_t>(kChannels) *
                               (static_cast<std::size_t>(y) * width + x);
  }
  const std::uint8_t* at(int y, int x) const {
    return pixels.data() + static_cast<std::size_t>(kChannels) *
                               (static_cast<std::size_t>(y) * width + x);
  }

  bool same_size(const Image& other) const {
    return height == other.height && width == other.width;
  }

  bool operator==(const Image&) const = default;
};

// Throws ContractError unless dimensions are positive and the pixel buffer
// holds exactly height*width*3 samples.
void validate(const Image& image);

// Binary PPM (P6) codec. Readers accept standard whitespace and '#' comments
// in the header; the writer emits the canonical "P6\n{w} {h}\n255\n" form.
// Only maxval 255 is supported. Malformed input raises FormatError naming
// the byte offset.
Image read_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_ppm(const Image& image);

Image read_ppm_file(const std::string& path);
void write_ppm_file(const Image& image, const std::string& path);

// Conditional overlay: wherever the overlay pixel is not pure black it
// replaces the base pixel; pure black is the transparency sentinel. Both
// images must share dimensions.
Image composite(const Image& base, const Image& overlay);

// Corner-aligned bilinear resample; channel values round half-up.
Image resize_bilinear(const Image& image, int out_height, int out_width);

}  // namespace posevit
