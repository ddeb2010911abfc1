#include "xpose/generator.hpp"

#include <cmath>

namespace xpose {

void validate_request(const ViewRequest& request) {
  require(!request.deltas.empty(), "view request needs at least one delta");
  require(request.steps >= 1, "view request steps must be >= 1");
  require(!request.image.empty(), "view request image is empty");
  require(request.image.width() == request.image.height(), "view request image must be square");
}

Image make_test_card(int size) {
  require(size >= 4, "test card size must be >= 4");
  Image card = Image::filled(size, size, 0.0f);
  const int cell = std::max(1, size / 8);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const bool dark = ((i / cell) + (j / cell)) % 2 == 0;
      card.channels[0](i, j) = dark ? 40.0f : float(255 * j / std::max(1, size - 1));
      card.channels[1](i, j) = dark ? 40.0f : float(255 * i / std::max(1, size - 1));
      card.channels[2](i, j) = dark ? 200.0f : 90.0f;
    }
  }
  return card;
}

namespace {

void put_bytes(Image& image, int first_byte, std::int32_t value) {
  const auto u = static_cast<std::uint32_t>(value);
  for (int k = 0; k < 4; ++k) {
    const int b = first_byte + k;
    image.channels[b % 3](0, b / 3) = float((u >> (8 * (3 - k))) & 0xFF);
  }
}

std::int32_t get_bytes(const Image& image, int first_byte) {
  std::uint32_t u = 0;
  for (int k = 0; k < 4; ++k) {
    const int b = first_byte + k;
    u = (u << 8) | (static_cast<std::uint32_t>(std::lround(image.channels[b % 3](0, b / 3))) & 0xFF);
  }
  return static_cast<std::int32_t>(u);
}

}  // namespace

void stamp_delta(Image& image, const ViewDelta& delta) {
  require(image.width() >= 3, "image too narrow for a stamp");
  put_bytes(image, 0, static_cast<std::int32_t>(std::lround(delta.d_azimuth_deg * 1000.0)));
  put_bytes(image, 4, static_cast<std::int32_t>(std::lround(delta.d_elevation_deg * 1000.0)));
}

ViewDelta read_stamp(const Image& image) {
  return {get_bytes(image, 0) / 1000.0, get_bytes(image, 4) / 1000.0};
}

std::vector<Image> MockGenerator::generate(const ViewRequest& request) const {
  validate_request(request);
  const Image card = make_test_card(request.image.width());
  std::vector<Image> out;
  out.reserve(request.deltas.size());
  for (const auto& d : request.deltas) {
    Image stamped = card;
    stamp_delta(stamped, d);
    out.push_back(std::move(stamped));
  }
  return out;
}

}  // namespace xpose
