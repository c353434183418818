#include "posevit/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "posevit/error.hpp"

namespace posevit {

namespace {

constexpr long kMaxDimension = 1 << 20;

bool is_ppm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

struct Cursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  bool eof() const { return pos >= bytes.size(); }
  std::uint8_t peek() const { return bytes[pos]; }
};

void skip_space_and_comments(Cursor& c) {
  while (!c.eof()) {
    if (is_ppm_space(c.peek())) {
      ++c.pos;
    } else if (c.peek() == '#') {
      while (!c.eof() && c.peek() != '\n') ++c.pos;
    } else {
      break;
    }
  }
}

long parse_header_int(Cursor& c, const char* what) {
  skip_space_and_comments(c);
  const std::size_t start = c.pos;
  long value = 0;
  std::size_t digits = 0;
  while (!c.eof() && c.peek() >= '0' && c.peek() <= '9') {
    value = value * 10 + (c.peek() - '0');
    if (value > kMaxDimension * 4) {
      throw FormatError("ppm: " + std::string(what) + " out of range at byte " +
                        std::to_string(start));
    }
    ++c.pos;
    ++digits;
  }
  if (digits == 0) {
    throw FormatError("ppm: malformed header, expected " + std::string(what) +
                      " at byte " + std::to_string(c.pos));
  }
  return value;
}

}  // namespace

Image Image::black(int height, int width) {
  if (height <= 0 || width <= 0) {
    throw ContractError("image: dimensions must be positive");
  }
  Image img;
  img.height = height;
  img.width = width;
  img.pixels.assign(static_cast<std::size_t>(height) * width * kChannels, 0);
  return img;
}

void validate(const Image& image) {
  if (image.height <= 0 || image.width <= 0) {
    throw ContractError("image: dimensions must be positive");
  }
  const std::size_t expected = static_cast<std::size_t>(image.height) *
                               image.width * Image::kChannels;
  if (image.pixels.size() != expected) {
    throw ContractError("image: pixel buffer holds " +
                        std::to_string(image.pixels.size()) +
                        " samples, expected " + std::to_string(expected));
  }
}

Image read_ppm(std::span<const std::uint8_t> bytes) {
  Cursor c{bytes};
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError("ppm: expected magic \"P6\" at byte 0");
  }
  c.pos = 2;

  const long width = parse_header_int(c, "width");
  const long height = parse_header_int(c, "height");
  skip_space_and_comments(c);
  const std::size_t maxval_at = c.pos;
  const long maxval = parse_header_int(c, "maxval");

  if (width <= 0 || height <= 0 || width > kMaxDimension || height > kMaxDimension) {
    throw FormatError("ppm: invalid dimensions " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
  if (maxval != 255) {
    throw FormatError("ppm: unsupported maxval " + std::to_string(maxval) +
                      " at byte " + std::to_string(maxval_at) + " (expected 255)");
  }
  if (c.eof() || !is_ppm_space(c.peek())) {
    throw FormatError("ppm: expected single whitespace before payload at byte " +
                      std::to_string(c.pos));
  }
  ++c.pos;

  const std::size_t need =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * Image::kChannels;
  const std::size_t have = bytes.size() - c.pos;
  if (have < need) {
    throw FormatError("ppm: truncated payload at byte " + std::to_string(c.pos) +
                      ", need " + std::to_string(need) + " bytes, found " +
                      std::to_string(have));
  }

  Image img;
  img.height = static_cast<int>(height);
  img.width = static_cast<int>(width);
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(c.pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(c.pos + need));
  return img;
}

std::vector<std::uint8_t> write_ppm(const Image& image) {
  validate(image);
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out;
  out.reserve(header.size() + image.pixels.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

Image read_ppm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("ppm: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return read_ppm(bytes);
}

void write_ppm_file(const Image& image, const std::string& path) {
  const std::vector<std::uint8_t> bytes = write_ppm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("ppm: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("ppm: write failed for " + path);
}

Image composite(const Image& base, const Image& overlay) {
  validate(base);
  validate(overlay);
  if (!base.same_size(overlay)) {
    throw ContractError("composite: base and overlay dimensions differ");
  }
  Image out = base;
  const std::size_t n = out.pixels.size();
  for (std::size_t i = 0; i < n; i += Image::kChannels) {
    if (overlay.pixels[i] != 0 || overlay.pixels[i + 1] != 0 || overlay.pixels[i + 2] != 0) {
      out.pixels[i] = overlay.pixels[i];
      out.pixels[i + 1] = overlay.pixels[i + 1];
      out.pixels[i + 2] = overlay.pixels[i + 2];
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int out_height, int out_width) {
  validate(image);
  if (out_height <= 0 || out_width <= 0) {
    throw ContractError("resize: output dimensions must be positive");
  }
  if (out_height == image.height && out_width == image.width) return image;

  Image out = Image::black(out_height, out_width);
  const double sy_step =
      out_height > 1 ? static_cast<double>(image.height - 1) / (out_height - 1) : 0.0;
  const double sx_step =
      out_width > 1 ? static_cast<double>(image.width - 1) / (out_width - 1) : 0.0;

  for (int oy = 0; oy < out_height; ++oy) {
    const double sy = sy_step * oy;
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double fy = sy - y0;
    for (int ox = 0; ox < out_width; ++ox) {
      const double sx = sx_step * ox;
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double fx = sx - x0;

      const std::uint8_t* p00 = image.at(y0, x0);
      const std::uint8_t* p01 = image.at(y0, x1);
      const std::uint8_t* p10 = image.at(y1, x0);
      const std::uint8_t* p11 = image.at(y1, x1);
      std::uint8_t* dst = out.at(oy, ox);
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        const double top = (1.0 - fx) * p00[ch] + fx * p01[ch];
        const double bottom = (1.0 - fx) * p10[ch] + fx * p11[ch];
        const double v = (1.0 - fy) * top + fy * bottom;
        const double rounded = std::floor(v + 0.5);  // half rounds up
        dst[ch] = static_cast<std::uint8_t>(std::clamp(rounded, 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace posevit
