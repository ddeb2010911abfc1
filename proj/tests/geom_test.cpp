#include "xpose/geom.hpp"

#include <random>

#include <gtest/gtest.h>

namespace xpose {
namespace {

CameraIntrinsicsd MakeK(double f = 500, double cx = 320, double cy = 240) {
  return {f, f, cx, cy, 640, 480};
}

Eigen::Matrix3d RandomRotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

RigidTransformd RandomTransform(std::mt19937_64& rng, double scale = 3.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {RandomRotation(rng), Eigen::Vector3d(u(rng), u(rng), u(rng))};
}

double RayAlignmentError(const Eigen::Vector2d& c, const CameraIntrinsicsd& K) {
  const Eigen::Vector3d ray = (K.inverse_matrix() * c.homogeneous()).normalized();
  const auto T = look_at_rotation(c, K);
  return (T.rotation * ray - Eigen::Vector3d::UnitZ()).norm();
}

TEST(LookAtRotation, PrincipalPointGivesIdentity) {
  const auto K = MakeK();
  const auto T = look_at_rotation(Eigen::Vector2d(K.cx, K.cy), K);
  EXPECT_LT((T.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-15);
  EXPECT_EQ(T.translation, Eigen::Vector3d::Zero());
}

TEST(LookAtRotation, HorizontalOffsetIsRotationAboutY) {
  const auto K = MakeK(500);
  const Eigen::Vector2d c(K.cx + 500, K.cy);
  const auto T = look_at_rotation(c, K);
  const Eigen::AngleAxisd aa(T.rotation);
  EXPECT_NEAR(rad2deg(aa.angle()), 45.0, 1e-12);
  EXPECT_NEAR(std::abs(aa.axis().y()), 1.0, 1e-12);
  EXPECT_LT(RayAlignmentError(c, K), 1e-12);
}

TEST(LookAtRotation, VerticalOffsetIsRotationAboutX) {
  const auto K = MakeK(500);
  const Eigen::Vector2d c(K.cx, K.cy + 500);
  const auto T = look_at_rotation(c, K);
  const Eigen::AngleAxisd aa(T.rotation);
  EXPECT_NEAR(rad2deg(aa.angle()), 45.0, 1e-12);
  EXPECT_NEAR(std::abs(aa.axis().x()), 1.0, 1e-12);
  EXPECT_LT(RayAlignmentError(c, K), 1e-12);
}

TEST(LookAtRotation, GeneralOffsetComposesYAfterX) {
  const auto K = MakeK(500);
  const Eigen::Vector2d c(K.cx + 230, K.cy - 170);
  // Independent construction: x-rotation zeroing the ray's y, then the
  // y-rotation zeroing its x.
  const double x = 230.0 / 500, y = -170.0 / 500;
  const double alpha = std::atan2(y, 1.0);
  const double beta = std::atan2(-x, std::sqrt(y * y + 1.0));
  const Eigen::Matrix3d expected = (Eigen::AngleAxisd(beta, Eigen::Vector3d::UnitY()) *
                                    Eigen::AngleAxisd(alpha, Eigen::Vector3d::UnitX()))
                                       .toRotationMatrix();
  EXPECT_LT((look_at_rotation(c, K).rotation - expected).norm(), 1e-12);
  EXPECT_LT(RayAlignmentError(c, K), 1e-12);
}

TEST(VirtualIntrinsics, CenteredObjectScalesFocal) {
  const auto K = MakeK(500);
  const SquareRoid roi{Eigen::Vector2d(K.cx, K.cy), 100};
  const auto Kv = virtual_intrinsics(K, roi, 256);
  EXPECT_DOUBLE_EQ(Kv.fx, 1280.0);
  EXPECT_DOUBLE_EQ(Kv.fy, 1280.0);
  EXPECT_DOUBLE_EQ(Kv.cx, 128.0);
  EXPECT_DOUBLE_EQ(Kv.cy, 128.0);
  EXPECT_EQ(Kv.width, 256);
  EXPECT_EQ(Kv.height, 256);
}

TEST(VirtualIntrinsics, OffCenterObject) {
  const auto K = MakeK(500);
  const SquareRoid roi{Eigen::Vector2d(K.cx + 300, K.cy + 400), 100};
  const auto Kv = virtual_intrinsics(K, roi, 256);
  EXPECT_NEAR(Kv.fx / 1810.1933598375617 - 1.0, 0.0, 1e-12);
}

TEST(VirtualIntrinsics, IdentityCropKeepsFocal) {
  const auto K = MakeK(500);
  const auto Kv = virtual_intrinsics(K, SquareRoid{Eigen::Vector2d(K.cx, K.cy), 256}, 256);
  EXPECT_DOUBLE_EQ(Kv.fx, 500.0);
}

TEST(VirtualIntrinsics, AnisotropicFocalUsesMean) {
  CameraIntrinsicsd K{400, 600, 320, 240, 640, 480};
  const auto Kv = virtual_intrinsics(K, SquareRoid{Eigen::Vector2d(320, 240), 100}, 200);
  EXPECT_DOUBLE_EQ(Kv.fx, 1000.0);
}

TEST(VirtualIntrinsics, RejectsBadInputs) {
  const auto K = MakeK();
  EXPECT_THROW(virtual_intrinsics(K, SquareRoid{Eigen::Vector2d(0, 0), 0.0}, 256), Error);
  EXPECT_THROW(virtual_intrinsics(K, SquareRoid{Eigen::Vector2d(0, 0), 10.0}, 8), Error);
}

TEST(Homography, IdentityWhenNothingChanges) {
  const auto K = MakeK();
  const auto H = object_centric_homography(K, K, Eigen::Matrix3d::Identity());
  EXPECT_LT((H.normalized() - Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(Homography, InversePairComposesToIdentity) {
  std::mt19937_64 rng(3);
  const auto K = MakeK(520, 300, 250);
  const auto Kv = CameraIntrinsicsd::square(900, 256);
  const Eigen::Matrix3d R = RandomRotation(rng);
  const auto H = object_centric_homography(K, Kv, R);
  const auto Hback = object_centric_homography(Kv, K, Eigen::Matrix3d(R.transpose()));
  const Homographyd product{Hback.matrix * H.matrix};
  EXPECT_LT((product.normalized() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
}

TEST(Homography, MapsObjectCenterToVirtualCenterForRandomCases) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> focal(200, 1500), pp(100, 600), coord(-400, 1200),
      size(10, 500);
  std::uniform_int_distribution<int> sv(16, 512);
  double worst_center = 0, worst_ray = 0;
  for (int k = 0; k < 1000; ++k) {
    const CameraIntrinsicsd K{focal(rng), focal(rng), pp(rng), pp(rng), 800, 600};
    const Eigen::Vector2d c(coord(rng), coord(rng));
    const int s_v = sv(rng);
    const auto Rv = look_at_rotation(c, K);
    const auto Kv = virtual_intrinsics(K, SquareRoid{c, size(rng)}, s_v);
    const auto H = object_centric_homography(K, Kv, Rv.rotation);
    const Eigen::Vector2d mapped = H.apply(c);
    worst_center = std::max(worst_center, (mapped - Eigen::Vector2d(s_v / 2.0, s_v / 2.0)).norm());
    worst_ray = std::max(worst_ray, RayAlignmentError(c, K));
  }
  EXPECT_LT(worst_center, 0.5);
  EXPECT_LT(worst_ray, 1e-9);
}

TEST(InscribedSphere, ClosedFormCases) {
  EXPECT_NEAR(distance_for_inscribed_sphere(CameraIntrinsicsd::square(128, 256)), 1.4142135623730951, 1e-12);
  EXPECT_NEAR(distance_for_inscribed_sphere(CameraIntrinsicsd::square(256, 256)), 2.23606797749979, 1e-12);
}

TEST(InscribedSphere, NarrowFieldOfViewLimit) {
  for (double f : {1e3, 1e5, 1e7}) {
    const auto Kv = CameraIntrinsicsd::square(f, 256);
    const double d = distance_for_inscribed_sphere(Kv);
    const double t = 256 / (2 * f);
    EXPECT_NEAR(d * t, 1.0, 2 * t * t);
    EXPECT_NEAR(d / (2 * f / 256), 1.0, 2 * t * t);
  }
}

TEST(InscribedSphere, SilhouetteTouchesBorder) {
  // Tangent ray to the unit sphere from distance d projects to radius s_v / 2.
  const auto Kv = CameraIntrinsicsd::square(300, 256);
  const double d = distance_for_inscribed_sphere(Kv);
  const double half_angle = std::asin(1.0 / d);
  EXPECT_NEAR(Kv.fx * std::tan(half_angle), 128.0, 1e-9);
}

TEST(ViewpointToPose, CameraOnXAxisLooksAtOrigin) {
  const auto T = viewpoint_to_pose(SphericalViewpointd{0, 0, 0, 2});
  const Eigen::Vector3d C(2, 0, 0);
  EXPECT_LT((T.rotation * C + T.translation).norm(), 1e-12);
  EXPECT_NEAR(T.translation.norm(), 2.0, 1e-12);
  // The optical axis (third row) points from the camera toward the origin.
  EXPECT_LT((T.rotation.row(2).transpose() - Eigen::Vector3d(-1, 0, 0)).norm(), 1e-12);
  // Image "up" (-y) is world +z.
  EXPECT_LT((T.rotation.row(1).transpose() - Eigen::Vector3d(0, 0, -1)).norm(), 1e-12);
  EXPECT_TRUE(T.is_valid());
}

TEST(ViewpointToPose, InplaneHalfTurnIsOpticalAxisRotation) {
  const SphericalViewpointd a{40, 25, 0, 3};
  SphericalViewpointd b = a;
  b.inplane_deg = 180;
  const auto Ta = viewpoint_to_pose(a);
  const auto Tb = viewpoint_to_pose(b);
  const Eigen::Matrix3d diff = Tb.rotation * Ta.rotation.transpose();
  const Eigen::AngleAxisd aa(diff);
  EXPECT_NEAR(aa.angle(), M_PI, 1e-12);
  EXPECT_NEAR(std::abs(aa.axis().z()), 1.0, 1e-9);
  EXPECT_LT((Ta.translation - Tb.translation).norm(), 1e-12);
}

TEST(ViewpointToPose, RejectsElevationAtPole) {
  EXPECT_THROW(
      {
        try {
          viewpoint_to_pose(SphericalViewpointd{0, 90, 0, 2});
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::DegenerateElevation);
          throw;
        }
      },
      Error);
}

TEST(PoseToViewpoint, KnownCamera) {
  const auto vp = pose_to_viewpoint(viewpoint_to_pose(SphericalViewpointd{0, 0, 0, 2.5}));
  EXPECT_NEAR(vp.azimuth_deg, 0, 1e-9);
  EXPECT_NEAR(vp.elevation_deg, 0, 1e-9);
  EXPECT_NEAR(vp.inplane_deg, 0, 1e-9);
  EXPECT_NEAR(vp.distance, 2.5, 1e-12);
}

TEST(PoseToViewpoint, RoundTripOverRandomViewpoints) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> az(0, 360), el(0, 89.9), inpl(-180, 180), dist(1.01, 10);
  for (int k = 0; k < 100; ++k) {
    const SphericalViewpointd vp{az(rng), el(rng), inpl(rng), dist(rng)};
    const auto back = pose_to_viewpoint(viewpoint_to_pose(vp));
    EXPECT_NEAR(wrap_deg_180(back.azimuth_deg - vp.azimuth_deg), 0, 1e-6);
    EXPECT_NEAR(back.elevation_deg, vp.elevation_deg, 1e-6);
    EXPECT_NEAR(wrap_deg_180(back.inplane_deg - vp.inplane_deg), 0, 1e-6);
    EXPECT_NEAR(back.distance, vp.distance, 1e-9);
  }
}

TEST(PoseToViewpoint, PoleIsDegenerate) {
  RigidTransformd T;
  T.rotation = Eigen::Matrix3d::Identity();
  T.translation = Eigen::Vector3d(0, 0, 3);  // center at (0, 0, -3)
  try {
    pose_to_viewpoint(T);
    FAIL() << "expected DegeneratePole";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePole);
  }
}

TEST(ComposeObjectToRelative, IdentityCases) {
  std::mt19937_64 rng(8);
  const auto P = RandomTransform(rng);
  const auto same = compose_object_to_relative(P, P);
  EXPECT_LT((same.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(same.translation.norm(), 1e-12);
  const auto with_identity = compose_object_to_relative(P, RigidTransformd::Identity());
  EXPECT_LT((with_identity.rotation - P.rotation).norm(), 1e-15);
  EXPECT_LT((with_identity.translation - P.translation).norm(), 1e-15);
}

TEST(ComposeObjectToRelative, PointMappingBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto P1 = RandomTransform(rng), P2 = RandomTransform(rng);
    const auto rel = compose_object_to_relative(P1, P2);
    for (int k = 0; k < 20; ++k) {
      const Eigen::Vector3d x(u(rng), u(rng), u(rng));
      EXPECT_LT((rel * (P2 * x) - P1 * x).norm(), 1e-9);
    }
  }
}

TEST(LiftRelative, IdentityLookAtsInvertRelative) {
  std::mt19937_64 rng(2);
  const auto rel_v = RandomTransform(rng);
  const auto lifted =
      lift_relative_to_input_cameras(rel_v, Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity());
  const auto inv = rel_v.inverse();
  EXPECT_LT((lifted.rotation - inv.rotation).norm(), 1e-12);
  EXPECT_LT((lifted.translation - inv.translation).norm(), 1e-12);
}

TEST(LiftRelative, RecoversGroundTruthOnSyntheticScenes) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto world_to_cam1 = RandomTransform(rng), world_to_cam2 = RandomTransform(rng);
    const Eigen::Matrix3d Rv1 = RandomRotation(rng), Rv2 = RandomRotation(rng);
    // The object frame coincides with the world frame up to an arbitrary transform.
    const auto object_to_world = RandomTransform(rng);
    const RigidTransformd look1{Rv1, Eigen::Vector3d::Zero()}, look2{Rv2, Eigen::Vector3d::Zero()};
    const auto pose1 = look1 * world_to_cam1 * object_to_world;
    const auto pose2 = look2 * world_to_cam2 * object_to_world;
    const auto rel = lift_relative_to_input_cameras(compose_object_to_relative(pose1, pose2), Rv1, Rv2);
    const auto gt = relative_pose(world_to_cam1, world_to_cam2);
    EXPECT_LT(rotation_angle(Eigen::Matrix3d(rel.rotation.transpose() * gt.rotation)), 1e-6);
    const double cos_t = rel.translation.normalized().dot(gt.translation.normalized());
    EXPECT_LT(std::acos(std::clamp(cos_t, -1.0, 1.0)), 1e-6);
  }
}

TEST(LiftRelative, SwappedArgumentsGiveInverse) {
  std::mt19937_64 rng(31);
  const auto P1 = RandomTransform(rng), P2 = RandomTransform(rng);
  const Eigen::Matrix3d Rv1 = RandomRotation(rng), Rv2 = RandomRotation(rng);
  const auto forward = lift_relative_to_input_cameras(compose_object_to_relative(P1, P2), Rv1, Rv2);
  const auto backward = lift_relative_to_input_cameras(compose_object_to_relative(P2, P1), Rv2, Rv1);
  const auto product = forward * backward;
  EXPECT_LT((product.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(product.translation.norm(), 1e-12);
}

TEST(Angles, Wrapping) {
  EXPECT_DOUBLE_EQ(wrap_deg_180(190.0), -170.0);
  EXPECT_DOUBLE_EQ(wrap_deg_180(180.0), 180.0);
  EXPECT_DOUBLE_EQ(wrap_deg_180(-180.0), 180.0);
  EXPECT_DOUBLE_EQ(wrap_deg_360(-10.0), 350.0);
  EXPECT_DOUBLE_EQ(wrap_deg_180_half_open(180.0), -180.0);
}

}  // namespace
}  // namespace xpose
