#include "xpose/image.hpp"

#include <cmath>

namespace xpose {

Image Image::filled(int width, int height, float value) {
  Image image;
  for (auto& c : image.channels) c = Plane::Constant(height, width, value);
  return image;
}

bool Image::operator==(const Image& other) const {
  for (int c = 0; c < 3; ++c) {
    if (channels[c].rows() != other.channels[c].rows() ||
        channels[c].cols() != other.channels[c].cols())
      return false;
    if ((channels[c] != other.channels[c]).any()) return false;
  }
  return true;
}

float sample_bilinear(const Plane& plane, double u, double v, float outside) {
  const auto w = plane.cols();
  const auto h = plane.rows();
  if (!(u >= 0.0 && v >= 0.0 && u < double(w) && v < double(h))) return outside;
  const double x = std::clamp(u - 0.5, 0.0, double(w - 1));
  const double y = std::clamp(v - 0.5, 0.0, double(h - 1));
  const auto x0 = static_cast<Eigen::Index>(x);
  const auto y0 = static_cast<Eigen::Index>(y);
  const auto x1 = std::min<Eigen::Index>(x0 + 1, w - 1);
  const auto y1 = std::min<Eigen::Index>(y0 + 1, h - 1);
  const float fx = static_cast<float>(x - double(x0));
  const float fy = static_cast<float>(y - double(y0));
  const float top = plane(y0, x0) * (1.0f - fx) + plane(y0, x1) * fx;
  const float bottom = plane(y1, x0) * (1.0f - fx) + plane(y1, x1) * fx;
  return top * (1.0f - fy) + bottom * fy;
}

namespace {

std::uint8_t sample_nearest(const Mask& mask, double u, double v) {
  if (!(u >= 0.0 && v >= 0.0 && u < double(mask.cols()) && v < double(mask.rows()))) return 0;
  return mask(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));
}

// Maps an output pixel center to input coordinates for a rotation about the
// image center: out(q) = in(c + Rot(-a) (q - c)).
struct InverseRotation {
  double cos_a, sin_a, cx, cy;

  InverseRotation(double angle_deg, Eigen::Index width, Eigen::Index height)
      : cos_a(std::cos(deg2rad(angle_deg))),
        sin_a(std::sin(deg2rad(angle_deg))),
        cx(double(width) / 2),
        cy(double(height) / 2) {}

  Eigen::Vector2d operator()(Eigen::Index row, Eigen::Index col) const {
    const double dx = double(col) + 0.5 - cx;
    const double dy = double(row) + 0.5 - cy;
    return {cx + cos_a * dx + sin_a * dy, cy - sin_a * dx + cos_a * dy};
  }
};

}  // namespace

Plane to_gray(const Image& image) {
  return 0.299f * image.channels[0] + 0.587f * image.channels[1] + 0.114f * image.channels[2];
}

WarpResult warp_image(const Image& image, const Mask& mask, const Homographyd& H, int s_v,
                      float background) {
  if (!H.invertible()) fail(ErrorCode::NonInvertibleHomography, "|det(H)| below threshold");
  require(s_v >= 1, "output size must be positive");
  require(mask.size() == 0 || (mask.rows() == image.height() && mask.cols() == image.width()),
          "mask size must match image size");
  const Eigen::Matrix3d Hinv = H.normalized().inverse();
  WarpResult out{Image::filled(s_v, s_v, background), Mask::Zero(s_v, s_v)};
  for (int i = 0; i < s_v; ++i) {
    for (int j = 0; j < s_v; ++j) {
      const Eigen::Vector3d q = Hinv * Eigen::Vector3d(j + 0.5, i + 0.5, 1.0);
      if (!(q.z() > 0.0)) continue;
      const double u = q.x() / q.z();
      const double v = q.y() / q.z();
      for (int c = 0; c < 3; ++c)
        out.image.channels[c](i, j) = sample_bilinear(image.channels[c], u, v, background);
      if (mask.size() != 0) out.mask(i, j) = sample_nearest(mask, u, v);
    }
  }
  return out;
}

Plane rotate_inplane(const Plane& plane, double angle_deg, float background) {
  const InverseRotation rot(angle_deg, plane.cols(), plane.rows());
  Plane out(plane.rows(), plane.cols());
  for (Eigen::Index i = 0; i < plane.rows(); ++i) {
    for (Eigen::Index j = 0; j < plane.cols(); ++j) {
      const Eigen::Vector2d p = rot(i, j);
      out(i, j) = sample_bilinear(plane, p.x(), p.y(), background);
    }
  }
  return out;
}

Image rotate_inplane(const Image& image, double angle_deg, float background) {
  require(image.width() == image.height(), "rotate_inplane expects a square image");
  if (angle_deg == 0.0) return image;
  Image out;
  for (int c = 0; c < 3; ++c) out.channels[c] = rotate_inplane(image.channels[c], angle_deg, background);
  return out;
}

Mask rotate_inplane(const Mask& mask, double angle_deg) {
  if (angle_deg == 0.0) return mask;
  const InverseRotation rot(angle_deg, mask.cols(), mask.rows());
  Mask out(mask.rows(), mask.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      const Eigen::Vector2d p = rot(i, j);
      out(i, j) = sample_nearest(mask, p.x(), p.y());
    }
  }
  return out;
}

Plane resample_square(const Plane& plane, int size) {
  require(size >= 1, "resample size must be positive");
  if (plane.rows() == size && plane.cols() == size) return plane;
  Plane out(size, size);
  if (plane.rows() == plane.cols() && plane.rows() % size == 0) {
    const Eigen::Index f = plane.rows() / size;
    const float norm = 1.0f / float(f * f);
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) out(i, j) = plane.block(i * f, j * f, f, f).sum() * norm;
    return out;
  }
  const double sx = double(plane.cols()) / size;
  const double sy = double(plane.rows()) / size;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j)
      out(i, j) = sample_bilinear(plane, (j + 0.5) * sx, (i + 0.5) * sy, 0.0f);
  return out;
}

Mask resample_square(const Mask& mask, int size) {
  require(size >= 1, "resample size must be positive");
  if (mask.rows() == size && mask.cols() == size) return mask;
  Mask out(size, size);
  if (mask.rows() == mask.cols() && mask.rows() % size == 0) {
    const Eigen::Index f = mask.rows() / size;
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        const auto on = (mask.block(i * f, j * f, f, f) != 0).count();
        out(i, j) = 2 * on >= f * f ? kMaskOn : 0;
      }
    }
    return out;
  }
  const double sx = double(mask.cols()) / size;
  const double sy = double(mask.rows()) / size;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) out(i, j) = sample_nearest(mask, (j + 0.5) * sx, (i + 0.5) * sy);
  return out;
}

std::optional<BoundingBox> mask_bbox(const Mask& mask) {
  std::optional<BoundingBox> box;
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      if (mask(i, j) == 0) continue;
      if (!box) {
        box = BoundingBox{int(j), int(i), int(j), int(i)};
        continue;
      }
      box->col_min = std::min(box->col_min, int(j));
      box->col_max = std::max(box->col_max, int(j));
      box->row_min = std::min(box->row_min, int(i));
      box->row_max = std::max(box->row_max, int(i));
    }
  }
  return box;
}

std::optional<SquareRoid> square_roi_from_mask(const Mask& mask) {
  const auto box = mask_bbox(mask);
  if (!box) return std::nullopt;
  SquareRoid roi;
  roi.center = Eigen::Vector2d(0.5 * (box->col_min + box->col_max + 1),
                               0.5 * (box->row_min + box->row_max + 1));
  roi.size = std::max(box->width(), box->height());
  return roi;
}

Mask foreground_mask(const Image& image, float threshold) {
  const float limit = kBackground - threshold;
  Mask out = Mask::Zero(image.height(), image.width());
  for (int c = 0; c < 3; ++c) out = (image.channels[c] < limit).select(Mask::Constant(out.rows(), out.cols(), kMaskOn), out);
  return out;
}

std::int64_t mask_area(const Mask& mask) { return (mask != 0).count(); }

namespace {

double ncc_from_sums(double n, double sa, double sb, double saa, double sbb, double sab) {
  if (n < 2) return 0.0;
  const double va = saa - sa * sa / n;
  const double vb = sbb - sb * sb / n;
  const double eps = 1e-9 * n;
  if (va <= eps || vb <= eps) return 0.0;
  return std::clamp((sab - sa * sb / n) / std::sqrt(va * vb), -1.0, 1.0);
}

}  // namespace

double zero_mean_ncc(const Plane& a, const Plane& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "ncc operands must have equal size");
  const auto ad = a.cast<double>();
  const auto bd = b.cast<double>();
  return ncc_from_sums(double(a.size()), ad.sum(), bd.sum(), ad.square().sum(), bd.square().sum(),
                       (ad * bd).sum());
}

double zero_mean_ncc(const Plane& a, const Plane& b, const Mask& region) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "ncc operands must have equal size");
  require(region.rows() == a.rows() && region.cols() == a.cols(), "ncc region size mismatch");
  double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (region.data()[k] == 0) continue;
    const double x = a.data()[k], y = b.data()[k];
    n += 1;
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  return ncc_from_sums(n, sa, sb, saa, sbb, sab);
}

std::uint64_t image_digest(const Image& image) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < bytes; ++k) {
      h ^= p[k];
      h *= 1099511628211ull;
    }
  };
  const int dims[2] = {image.width(), image.height()};
  mix(dims, sizeof(dims));
  for (const auto& c : image.channels) mix(c.data(), sizeof(float) * std::size_t(c.size()));
  return h;
}

}  // namespace xpose
