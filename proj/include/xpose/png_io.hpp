#ifndef XPOSE_PNG_IO_HPP
#define XPOSE_PNG_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "xpose/image.hpp"

namespace xpose {

// 8-bit RGB PNG. Channel values are rounded and clamped to [0, 255].
std::string encode_png(const Image& image);
Image decode_png_rgb(std::string_view bytes);

// 8-bit grayscale PNG, 255 = object.
std::string encode_png(const Mask& mask);
Mask decode_png_mask(std::string_view bytes);

void write_png(const std::filesystem::path& path, const Image& image);
void write_png(const std::filesystem::path& path, const Mask& mask);
Image read_png_rgb(const std::filesystem::path& path);
Mask read_png_mask(const std::filesystem::path& path);

/// Rounds every channel to the nearest 8-bit value.
Image quantize8(const Image& image);

std::string base64_encode(std::string_view bytes);
/// Throws InvalidArgument on characters outside the standard alphabet.
std::string base64_decode(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace xpose

#endif  // XPOSE_PNG_IO_HPP
