#include "xpose/png_io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <png.h>

namespace xpose {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
}

std::string encode_raw(const std::vector<std::uint8_t>& pixels, int width, int height,
                       png_uint_32 format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    fail(ErrorCode::IoFailure, std::string("png encode: ") + image.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    fail(ErrorCode::IoFailure, std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> decode_raw(std::string_view bytes, png_uint_32 format, int& width,
                                     int& height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    fail(ErrorCode::IoFailure, std::string("png decode: ") + image.message);
  image.format = format;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::IoFailure, std::string("png decode: ") + image.message);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return pixels;
}

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::string encode_png(const Image& image) {
  const int w = image.width(), h = image.height();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h * 3);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int c = 0; c < 3; ++c)
        pixels[(static_cast<std::size_t>(i) * w + j) * 3 + c] = to_byte(image.channels[c](i, j));
  return encode_raw(pixels, w, h, PNG_FORMAT_RGB);
}

Image decode_png_rgb(std::string_view bytes) {
  int w = 0, h = 0;
  const auto pixels = decode_raw(bytes, PNG_FORMAT_RGB, w, h);
  Image image = Image::filled(w, h, 0.0f);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int c = 0; c < 3; ++c)
        image.channels[c](i, j) = pixels[(static_cast<std::size_t>(i) * w + j) * 3 + c];
  return image;
}

std::string encode_png(const Mask& mask) {
  std::vector<std::uint8_t> pixels(mask.data(), mask.data() + mask.size());
  return encode_raw(pixels, static_cast<int>(mask.cols()), static_cast<int>(mask.rows()),
                    PNG_FORMAT_GRAY);
}

Mask decode_png_mask(std::string_view bytes) {
  int w = 0, h = 0;
  const auto pixels = decode_raw(bytes, PNG_FORMAT_GRAY, w, h);
  Mask mask(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      mask(i, j) = pixels[static_cast<std::size_t>(i) * w + j] >= 128 ? kMaskOn : 0;
  return mask;
}

Image quantize8(const Image& image) {
  Image out = image;
  for (auto& c : out.channels) c = c.unaryExpr([](float v) { return float(to_byte(v)); });
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "short write to " + path.string());
}

void write_png(const std::filesystem::path& path, const Image& image) {
  write_file(path, encode_png(image));
}

void write_png(const std::filesystem::path& path, const Mask& mask) {
  write_file(path, encode_png(mask));
}

Image read_png_rgb(const std::filesystem::path& path) { return decode_png_rgb(read_file(path)); }

Mask read_png_mask(const std::filesystem::path& path) { return decode_png_mask(read_file(path)); }

std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (std::uint32_t(std::uint8_t(bytes[i])) << 16) |
                   (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) | std::uint8_t(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t n = std::uint32_t(std::uint8_t(bytes[i])) << 16;
    if (rest == 2) n |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (std::size_t k = 0; k < kAlphabet.size(); ++k) lookup[std::uint8_t(kAlphabet[k])] = int(k);
  std::string out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t buffer = 0;
  int bits = 0;
  std::size_t padding = 0;
  for (const char ch : text) {
    if (ch == '=') {
      ++padding;
      continue;
    }
    if (ch == '\n' || ch == '\r') continue;
    const int v = lookup[std::uint8_t(ch)];
    if (v < 0 || padding > 0) fail(ErrorCode::InvalidArgument, "invalid base64 input");
    buffer = (buffer << 6) | std::uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((buffer >> bits) & 0xFF);
    }
  }
  if (padding > 2) fail(ErrorCode::InvalidArgument, "invalid base64 padding");
  return out;
}

}  // namespace xpose
