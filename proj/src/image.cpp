// Copyright 2026 The camodet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "camodet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "camodet/atomic_file.hpp"
#include "camodet/error.hpp"

namespace camodet {

Image::Image(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid image dimensions");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, 0);
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

Image to_grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(x, y) = luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
    }
  }
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto v = img.at(x, y);
      out.at(x, y, 0) = v;
      out.at(x, y, 1) = v;
      out.at(x, y, 2) = v;
    }
  }
  return out;
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image decode_png(const std::string& bytes, const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kUnsupportedFormat,
                path.string() + ": " + std::string(png.message));
  }
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height), gray ? 1 : 3);
  // Alpha is composited onto black.
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&png, &black, img.bytes().data(), 0, nullptr)) {
    throw Error(ErrorCode::kUnsupportedFormat,
                path.string() + ": " + std::string(png.message));
  }
  return img;
}

// Binary netpbm: P5 (gray) or P6 (RGB), maxval <= 255.
Image decode_pnm(const std::string& bytes, const std::filesystem::path& path) {
  std::size_t pos = 2;
  auto next_int = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      any = true;
      ++pos;
      if (v > 1'000'000) break;
    }
    if (!any) throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": bad netpbm header");
    return v;
  };
  const int channels = bytes[1] == '5' ? 1 : 3;
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": unsupported netpbm header");
  }
  ++pos;  // single whitespace before raster
  Image img(static_cast<int>(w), static_cast<int>(h), channels);
  const std::size_t need = img.bytes().size();
  if (bytes.size() < pos + need) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": truncated raster");
  }
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, img.bytes().begin());
  if (maxval != 255) {
    for (auto& v : img.bytes()) v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return img;
}

std::string encode_png(const Image& img) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.bytes().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png encode: ") + png.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.bytes().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png encode: ") + png.message);
  }
  out.resize(size);
  return out;
}

std::string encode_pnm(const Image& img) {
  std::ostringstream os;
  os << (img.channels() == 1 ? "P5" : "P6") << "\n"
     << img.width() << " " << img.height() << "\n255\n";
  std::string out = os.str();
  out.append(reinterpret_cast<const char*>(img.bytes().data()), img.bytes().size());
  return out;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, path);
  }
  throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": not a PNG or binary PGM/PPM");
}

void write_image(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot write an empty image");
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".pgm" || ext == ".ppm") {
    write_file_atomic(path, encode_pnm(ext == ".pgm" ? to_grayscale(img) : to_rgb(img)));
    return;
  }
  if (ext != ".png") {
    throw Error(ErrorCode::kUnsupportedFormat, "cannot write '" + ext + "' images: " + path.string());
  }
  write_file_atomic(path, encode_png(img));
}

}  // namespace camodet
