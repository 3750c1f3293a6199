// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace thumbseed {
namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

class HeaderParser {
 public:
  explicit HeaderParser(const std::vector<std::uint8_t>& bytes) : b_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > (1u << 24)) fail(std::string(what) + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) fail(std::string("expected ") + what, start);
    return v;
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw FormatError("ppm: " + msg + " at byte offset " + std::to_string(at));
  }

  std::size_t pos_ = 0;

 private:
  const std::vector<std::uint8_t>& b_;
};

}  // namespace

std::vector<std::uint8_t> encode_ppm(const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw InvalidArgument("ppm: expected an H x W x 3 image, got " + shape_str(image.shape()));
  }
  const std::string header = "P6\n" + std::to_string(image.dim(1)) + " " +
                             std::to_string(image.dim(0)) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.size());
  for (float v : image.data()) out.push_back(to_byte(v));
  return out;
}

Tensor decode_ppm(const std::vector<std::uint8_t>& bytes) {
  HeaderParser p(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P') p.fail("missing 'P' magic", 0);
  if (bytes[1] != '6') p.fail(std::string("unsupported format P") + static_cast<char>(bytes[1]) + ", only P6", 1);
  p.pos_ = 2;
  const std::size_t width = p.number("width");
  const std::size_t height = p.number("height");
  const std::size_t maxval_at = p.pos_;
  const std::size_t maxval = p.number("maxval");
  if (maxval != 255) p.fail("maxval " + std::to_string(maxval) + " (only 255 supported)", maxval_at);
  if (width == 0 || height == 0) p.fail("zero image dimension", maxval_at);
  if (p.pos_ >= bytes.size() || !std::isspace(bytes[p.pos_])) p.fail("expected whitespace", p.pos_);
  ++p.pos_;
  const std::size_t need = width * height * 3;
  if (bytes.size() - p.pos_ < need) {
    p.fail("truncated payload (" + std::to_string(bytes.size() - p.pos_) + " of " +
               std::to_string(need) + " bytes)",
           bytes.size());
  }
  Tensor image(Shape{height, width, 3});
  for (std::size_t i = 0; i < need; ++i) image[i] = static_cast<float>(bytes[p.pos_ + i]) / 255.0f;
  return image;
}

void save_image(const std::string& path, const Tensor& image) {
  const auto bytes = encode_ppm(image);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path + "'");
}

Tensor load_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Tensor quantize_8bit(const Tensor& image) {
  Tensor out = image;
  for (auto& v : out.data()) v = static_cast<float>(to_byte(v)) / 255.0f;
  return out;
}

}  // namespace thumbseed
