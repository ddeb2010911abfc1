#ifndef XPOSE_GEOM_HPP
#define XPOSE_GEOM_HPP

// Object-centric camera geometry: virtual look-at cameras, the rotation
// homography between an input camera and its virtual camera, spherical
// viewpoints in the canonical object frame, and relative-pose composition.
//
// Conventions
//   * Cameras follow the x-right / y-down / z-forward pinhole model.
//   * Pixel (row i, col j) covers [j, j+1) x [i, i+1); its center is at
//     (j + 0.5, i + 0.5). A principal point of (s/2, s/2) is the exact
//     center of an s x s image.
//   * Poses are object(world) -> camera: x_cam = R * x_obj + t.
//   * The canonical object frame is z-up; azimuth is measured in the
//     xy-plane from +x toward +y, elevation from the equator.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <type_traits>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "xpose/errors.hpp"

namespace xpose {

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// Wraps an angle into [0, 360).
template <typename Scalar>
Scalar wrap_deg_360(Scalar deg) {
  Scalar w = std::fmod(deg, Scalar(360));
  if (w < 0) w += Scalar(360);
  if (w >= Scalar(360)) w = 0;
  return w;
}

/// Wraps an angle into (-180, 180].
template <typename Scalar>
Scalar wrap_deg_180(Scalar deg) {
  Scalar w = wrap_deg_360(deg);
  return w > Scalar(180) ? w - Scalar(360) : w;
}

/// Wraps an angle into [-180, 180).
template <typename Scalar>
Scalar wrap_deg_180_half_open(Scalar deg) {
  Scalar w = wrap_deg_360(deg + Scalar(180)) - Scalar(180);
  return w;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rot_x(Scalar rad) {
  return Eigen::AngleAxis<Scalar>(rad, Eigen::Matrix<Scalar, 3, 1>::UnitX()).toRotationMatrix();
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rot_y(Scalar rad) {
  return Eigen::AngleAxis<Scalar>(rad, Eigen::Matrix<Scalar, 3, 1>::UnitY()).toRotationMatrix();
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rot_z(Scalar rad) {
  return Eigen::AngleAxis<Scalar>(rad, Eigen::Matrix<Scalar, 3, 1>::UnitZ()).toRotationMatrix();
}

/// Angle of a rotation matrix in radians, in [0, pi].
template <typename Derived>
typename Derived::Scalar rotation_angle(const Eigen::MatrixBase<Derived>& R) {
  using Scalar = typename Derived::Scalar;
  Scalar c = (R.trace() - Scalar(1)) / Scalar(2);
  c = std::clamp(c, Scalar(-1), Scalar(1));
  return std::acos(c);
}

template <typename Scalar>
struct CameraIntrinsics {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

  Scalar fx = 1;
  Scalar fy = 1;
  Scalar cx = 0;
  Scalar cy = 0;
  int width = 1;
  int height = 1;

  static CameraIntrinsics square(Scalar focal, int size) {
    return {focal, focal, Scalar(size) / 2, Scalar(size) / 2, size, size};
  }

  bool valid() const {
    return fx > 0 && fy > 0 && width >= 1 && height >= 1 && std::isfinite(cx) &&
           std::isfinite(cy) && std::isfinite(fx) && std::isfinite(fy);
  }

  Scalar mean_focal() const { return (fx + fy) / Scalar(2); }

  Matrix3 matrix() const {
    Matrix3 K;
    K << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return K;
  }

  Matrix3 inverse_matrix() const {
    Matrix3 Kinv;
    Kinv << 1 / fx, 0, -cx / fx, 0, 1 / fy, -cy / fy, 0, 0, 1;
    return Kinv;
  }

  template <typename Other>
  CameraIntrinsics<Other> cast() const {
    return {Other(fx), Other(fy), Other(cx), Other(cy), width, height};
  }
};

template <typename Scalar>
struct RigidTransform {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static RigidTransform Identity() { return {}; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  Vector3 operator*(const Vector3& x) const { return rotation * x + translation; }

  /// (a * b)(x) = a(b(x)).
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  /// Camera center in the source frame for an object->camera transform.
  Vector3 center() const { return -(rotation.transpose() * translation); }

  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    const Matrix3 RtR = rotation.transpose() * rotation;
    return (RtR - Matrix3::Identity()).cwiseAbs().maxCoeff() < tol &&
           std::abs(rotation.determinant() - Scalar(1)) < tol && translation.allFinite();
  }
};

template <typename Scalar>
struct SquareRoi {
  Eigen::Matrix<Scalar, 2, 1> center = Eigen::Matrix<Scalar, 2, 1>::Zero();
  Scalar size = 1;
};

template <typename Scalar>
struct SphericalViewpoint {
  Scalar azimuth_deg = 0;
  Scalar elevation_deg = 0;
  Scalar inplane_deg = 0;
  Scalar distance = 2;

  bool operator==(const SphericalViewpoint&) const = default;
};

template <typename Scalar>
struct Homography {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

  Matrix3 matrix = Matrix3::Identity();

  /// Scaled copy whose max-abs entry is 1.
  Matrix3 normalized() const {
    const Scalar m = matrix.cwiseAbs().maxCoeff();
    return m > 0 ? Matrix3(matrix / m) : matrix;
  }

  bool invertible() const { return std::abs(normalized().determinant()) > Scalar(1e-12); }

  Eigen::Matrix<Scalar, 2, 1> apply(const Eigen::Matrix<Scalar, 2, 1>& p) const {
    const Eigen::Matrix<Scalar, 3, 1> q = matrix * p.homogeneous();
    return q.hnormalized();
  }
};

using CameraIntrinsicsd = CameraIntrinsics<double>;
using RigidTransformd = RigidTransform<double>;
using SquareRoid = SquareRoi<double>;
using SphericalViewpointd = SphericalViewpoint<double>;
using Homographyd = Homography<double>;

/// Rotation-only transform R_v = R_y * R_x whose optical axis passes through
/// pixel c: R_v * normalize(K^-1 [c; 1]) = (0, 0, 1).
template <typename Scalar>
RigidTransform<Scalar> look_at_rotation(const Eigen::Matrix<Scalar, 2, 1>& c,
                                        const CameraIntrinsics<Scalar>& K) {
  const Eigen::Matrix<Scalar, 3, 1> ray = K.inverse_matrix() * c.homogeneous();
  // R_x removes the y component, then R_y removes the x component.
  const Scalar alpha = std::atan2(ray.y(), ray.z());
  const Scalar z_after_x = std::hypot(ray.y(), ray.z());
  const Scalar beta = std::atan2(-ray.x(), z_after_x);
  RigidTransform<Scalar> T;
  T.rotation = rot_y(beta) * rot_x(alpha);
  return T;
}

/// Virtual square camera of side s_v that frames the ROI: f_v = s_v * sqrt(f^2 + |c|^2) / s,
/// with c measured from the principal point and f the mean focal length.
template <typename Scalar>
CameraIntrinsics<Scalar> virtual_intrinsics(const CameraIntrinsics<Scalar>& K,
                                            const SquareRoi<Scalar>& roi, int s_v) {
  require(roi.size > 0, "roi.size must be positive");
  require(s_v >= 16, "virtual image size must be >= 16");
  const Scalar f = K.mean_focal();
  const Eigen::Matrix<Scalar, 2, 1> offset = roi.center - Eigen::Matrix<Scalar, 2, 1>(K.cx, K.cy);
  const Scalar f_v = Scalar(s_v) * std::sqrt(f * f + offset.squaredNorm()) / roi.size;
  return CameraIntrinsics<Scalar>::square(f_v, s_v);
}

/// H = K_v * R_v * K^-1, mapping input pixels to virtual pixels.
template <typename Scalar>
Homography<Scalar> object_centric_homography(const CameraIntrinsics<Scalar>& K,
                                             const CameraIntrinsics<Scalar>& K_v,
                                             const std::type_identity_t<Eigen::Matrix<Scalar, 3, 3>>& R_v) {
  return {K_v.matrix() * R_v * K.inverse_matrix()};
}

/// Camera distance at which the unit sphere's silhouette just inscribes the
/// square virtual image: with t = s_v / (2 f_v), d = sqrt(1 + t^2) / t.
template <typename Scalar>
Scalar distance_for_inscribed_sphere(const CameraIntrinsics<Scalar>& K_v) {
  require(K_v.width == K_v.height, "virtual intrinsics must be square");
  const Scalar t = Scalar(K_v.width) / (Scalar(2) * K_v.mean_focal());
  return std::sqrt(Scalar(1) + t * t) / t;
}

/// Object->camera pose of a camera orbiting the origin. Unlike
/// viewpoint_to_pose this accepts any elevation: the frame is continuous
/// through the poles (the image turns upside down past 90 degrees).
template <typename Scalar>
RigidTransform<Scalar> orbit_pose(Scalar azimuth_deg, Scalar elevation_deg, Scalar inplane_deg,
                                  Scalar distance) {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  const Scalar a = deg2rad(azimuth_deg);
  const Scalar e = deg2rad(elevation_deg);
  const Scalar ca = std::cos(a), sa = std::sin(a), ce = std::cos(e), se = std::sin(e);
  const Vector3 forward(-ce * ca, -ce * sa, -se);
  const Vector3 right(-sa, ca, 0);
  const Vector3 down(se * ca, se * sa, -ce);
  Eigen::Matrix<Scalar, 3, 3> look;
  look.row(0) = right.transpose();
  look.row(1) = down.transpose();
  look.row(2) = forward.transpose();
  RigidTransform<Scalar> T;
  T.rotation = rot_z(deg2rad(inplane_deg)) * look;
  T.translation = Vector3(0, 0, distance);
  return T;
}

/// Pose of a camera at the viewpoint, looking at the origin with up = +z,
/// rolled by the in-plane angle about its optical axis.
template <typename Scalar>
RigidTransform<Scalar> viewpoint_to_pose(const SphericalViewpoint<Scalar>& vp) {
  if (!(vp.elevation_deg < Scalar(90)) || !(vp.elevation_deg > Scalar(-90)))
    fail(ErrorCode::DegenerateElevation, "elevation must lie in (-90, 90) degrees");
  require(vp.distance > 0, "viewpoint distance must be positive");
  return orbit_pose(vp.azimuth_deg, vp.elevation_deg, vp.inplane_deg, vp.distance);
}

/// Inverse of viewpoint_to_pose. For poses that do not look exactly at the
/// origin the in-plane angle is the roll of R relative to the look-at frame.
template <typename Scalar>
SphericalViewpoint<Scalar> pose_to_viewpoint(const RigidTransform<Scalar>& pose) {
  const Eigen::Matrix<Scalar, 3, 1> C = pose.center();
  const Scalar rho = std::hypot(C.x(), C.y());
  if (rho < Scalar(1e-9)) fail(ErrorCode::DegeneratePole, "camera center lies on the z axis");
  SphericalViewpoint<Scalar> vp;
  vp.distance = C.norm();
  vp.azimuth_deg = wrap_deg_360(rad2deg(std::atan2(C.y(), C.x())));
  vp.elevation_deg = rad2deg(std::atan2(C.z(), rho));
  const auto look = orbit_pose(vp.azimuth_deg, vp.elevation_deg, Scalar(0), vp.distance);
  const Eigen::Matrix<Scalar, 3, 3> roll = pose.rotation * look.rotation.transpose();
  vp.inplane_deg = wrap_deg_180_half_open(rad2deg(std::atan2(roll(1, 0), roll(0, 0))));
  return vp;
}

/// Relative transform between two object-centric cameras posed in the same
/// object frame: x_1 = R * x_2 + t.
template <typename Scalar>
RigidTransform<Scalar> compose_object_to_relative(const RigidTransform<Scalar>& pose1,
                                                  const RigidTransform<Scalar>& pose2) {
  RigidTransform<Scalar> rel;
  rel.rotation = pose1.rotation * pose2.rotation.transpose();
  rel.translation = pose1.translation - rel.rotation * pose2.translation;
  return rel;
}

/// Converts the object-centric relative transform (x_v1 = R x_v2 + t) into
/// the input-camera relative pose (x_c2 = R12 x_c1 + t12), given the look-at
/// rotations of both views (x_v = R_v x_c).
template <typename Scalar>
RigidTransform<Scalar> lift_relative_to_input_cameras(const RigidTransform<Scalar>& rel_v,
                                                      const std::type_identity_t<Eigen::Matrix<Scalar, 3, 3>>& Rv1,
                                                      const std::type_identity_t<Eigen::Matrix<Scalar, 3, 3>>& Rv2) {
  const Eigen::Matrix<Scalar, 3, 3> back = Rv2.transpose() * rel_v.rotation.transpose();
  RigidTransform<Scalar> rel;
  rel.rotation = back * Rv1;
  rel.translation = -(back * rel_v.translation);
  return rel;
}

/// Relative pose x_c2 = R x_c1 + t between two world->camera poses.
template <typename Scalar>
RigidTransform<Scalar> relative_pose(const RigidTransform<Scalar>& world_to_cam1,
                                     const RigidTransform<Scalar>& world_to_cam2) {
  return world_to_cam2 * world_to_cam1.inverse();
}

}  // namespace xpose

#endif  // XPOSE_GEOM_HPP
