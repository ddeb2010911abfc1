#ifndef XPOSE_IMAGE_HPP
#define XPOSE_IMAGE_HPP

#include <array>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "xpose/geom.hpp"

namespace xpose {

using Plane = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr float kBackground = 255.0f;
constexpr std::uint8_t kMaskOn = 255;

/// RGB image with float channels in [0, 255].
struct Image {
  std::array<Plane, 3> channels;

  static Image filled(int width, int height, float value = kBackground);

  int width() const { return static_cast<int>(channels[0].cols()); }
  int height() const { return static_cast<int>(channels[0].rows()); }
  bool empty() const { return channels[0].size() == 0; }

  bool operator==(const Image& other) const;
};

struct BoundingBox {
  int col_min = 0;
  int row_min = 0;
  int col_max = 0;  // inclusive
  int row_max = 0;  // inclusive

  int width() const { return col_max - col_min + 1; }
  int height() const { return row_max - row_min + 1; }
};

struct WarpResult {
  Image image;
  Mask mask;
};

/// Bilinear sample at continuous pixel coordinates (pixel centers at +0.5);
/// returns `outside` when the point falls outside the sampled area.
float sample_bilinear(const Plane& plane, double u, double v, float outside);

Plane to_gray(const Image& image);

/// Inverse-mapping warp into an s_v x s_v frame: each destination pixel
/// center is mapped through H^-1 and sampled bilinearly (nearest for the
/// mask). Unmapped pixels take the background value and an empty mask.
/// Throws NonInvertibleHomography.
WarpResult warp_image(const Image& image, const Mask& mask, const Homographyd& H, int s_v,
                      float background = kBackground);

/// Rotation of a square image about its center by angle_deg, the image-space
/// counterpart of rolling the camera by the same angle about its optical axis.
Image rotate_inplane(const Image& image, double angle_deg, float background = kBackground);
Mask rotate_inplane(const Mask& mask, double angle_deg);
Plane rotate_inplane(const Plane& plane, double angle_deg, float background);

/// Area-averaging resize to size x size (exact box filter for integer factors).
Plane resample_square(const Plane& plane, int size);
Mask resample_square(const Mask& mask, int size);

std::optional<BoundingBox> mask_bbox(const Mask& mask);

/// Tight square ROI: side = longest bbox side, center = bbox center.
std::optional<SquareRoid> square_roi_from_mask(const Mask& mask);

/// Pixels that differ from the background by more than `threshold` in any channel.
Mask foreground_mask(const Image& image, float threshold = 8.0f);

std::int64_t mask_area(const Mask& mask);

/// Zero-mean normalized cross-correlation in [-1, 1]; 0 when either side is
/// constant over the evaluated pixels. With a mask, only pixels where the
/// mask is nonzero take part.
double zero_mean_ncc(const Plane& a, const Plane& b);
double zero_mean_ncc(const Plane& a, const Plane& b, const Mask& region);

/// FNV-1a digest of the pixel data, used as a cache key.
std::uint64_t image_digest(const Image& image);

}  // namespace xpose

#endif  // XPOSE_IMAGE_HPP
