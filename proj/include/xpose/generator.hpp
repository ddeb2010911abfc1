#ifndef XPOSE_GENERATOR_HPP
#define XPOSE_GENERATOR_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "xpose/image.hpp"
#include "xpose/viewsphere.hpp"

namespace xpose {

struct ViewRequest {
  Image image;
  std::vector<ViewDelta> deltas;
  int steps = 50;
  std::uint64_t seed = 0;
};

/// Novel-view generator contract. Given a correctly oriented object-centric
/// image, returns one image per (d_azimuth, d_elevation) delta at the input's
/// resolution. Implementations must be safe for concurrent calls and report
/// failures as Error(GeneratorFailureKind, ...).
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<Image> generate(const ViewRequest& request) const = 0;
  virtual std::string name() const = 0;
};

using GeneratorPtr = std::shared_ptr<const Generator>;

/// Throws InvalidArgument for requests that violate the contract
/// (empty deltas, steps < 1, non-square or empty image).
void validate_request(const ViewRequest& request);

// Test card used by the mock backend and the mock protocol server.
Image make_test_card(int size);

/// Writes the delta into the first three pixels of the top row as two
/// 32-bit fixed-point values (millidegrees). Survives 8-bit PNG round trips.
void stamp_delta(Image& image, const ViewDelta& delta);
ViewDelta read_stamp(const Image& image);

/// Returns one stamped copy of the test card per delta.
class MockGenerator final : public Generator {
 public:
  std::vector<Image> generate(const ViewRequest& request) const override;
  std::string name() const override { return "mock"; }
};

}  // namespace xpose

#endif  // XPOSE_GENERATOR_HPP
