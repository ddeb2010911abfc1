#include "xpose/synth.hpp"

#include <filesystem>

#include <gtest/gtest.h>

#include "xpose/errors.hpp"

namespace xpose {
namespace {

TEST(Asset, DeterministicAndInsideUnitSphere) {
  const Asset a = make_asset(17), b = make_asset(17), c = make_asset(18);
  ASSERT_EQ(a.triangles.size(), b.triangles.size());
  for (std::size_t k = 0; k < a.triangles.size(); ++k)
    for (int v = 0; v < 3; ++v) {
      EXPECT_EQ(a.triangles[k].vertices[v], b.triangles[k].vertices[v]);
      EXPECT_LT(a.triangles[k].vertices[v].norm(), 1.0);
    }
  EXPECT_NE(a.triangles[0].colors[0], c.triangles[0].colors[0]);
}

TEST(Render, DeterministicCenteredAndAsymmetric) {
  const Asset asset = make_asset(3);
  const auto K = CameraIntrinsicsd::square(300.0, 128);
  const double d = distance_for_inscribed_sphere(K);
  const auto r1 = render(asset, orbit_pose(30.0, 20.0, 0.0, d), K);
  const auto r2 = render(asset, orbit_pose(30.0, 20.0, 0.0, d), K);
  EXPECT_TRUE(r1.image == r2.image);
  const auto box = mask_bbox(r1.mask);
  ASSERT_TRUE(box);
  EXPECT_GE(box->col_min, 0);
  EXPECT_LE(box->col_max, 127);
  // The object fits the inscribed sphere, so the mask never touches the border.
  EXPECT_GT(box->col_min, 0);
  EXPECT_LT(box->row_max, 127);
  // Opposite views differ (no rotational symmetry).
  const auto r3 = render(asset, orbit_pose(210.0, 20.0, 0.0, d), K);
  EXPECT_LT(zero_mean_ncc(to_gray(r1.image), to_gray(r3.image)), 0.9);
}

TEST(Render, RejectsCameraInsideObject) {
  const auto K = CameraIntrinsicsd::square(300.0, 64);
  EXPECT_THROW(render(make_asset(1), orbit_pose(0.0, 0.0, 0.0, 0.5), K), Error);
}

TEST(Oracle, ZeroDeltaReproducesInput) {
  const Asset asset = make_asset(5);
  const auto K = CameraIntrinsicsd::square(280.0, 128);
  const auto pose = orbit_pose(40.0, 25.0, 0.0, distance_for_inscribed_sphere(K));
  const OracleGenerator oracle(asset, pose, K);
  const auto out = oracle.generate({oracle.source_image(), {{0, 0}, {20, 10}}, 50, 0});
  EXPECT_GT(zero_mean_ncc(to_gray(out[0]), to_gray(oracle.source_image())), 0.99);
  SphericalViewpointd vp = oracle.source_viewpoint();
  vp.azimuth_deg += 20;
  vp.elevation_deg += 10;
  EXPECT_GT(zero_mean_ncc(to_gray(out[1]), to_gray(oracle.render_view(vp).image)), 0.999);
}

TEST(Oracle, PerceivesRollOfRotatedInput) {
  const Asset asset = make_asset(6);
  const auto K = CameraIntrinsicsd::square(280.0, 128);
  const auto pose = orbit_pose(100.0, 30.0, 0.0, distance_for_inscribed_sphere(K));
  const OracleGenerator oracle(asset, pose, K);
  const auto vp = oracle.perceive(rotate_inplane(oracle.source_image(), 17.0));
  EXPECT_NEAR(vp.inplane_deg, oracle.source_viewpoint().inplane_deg + 17.0, 0.5);
}

TEST(Dataset, SeparationDeterminismAndManifestRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "xpose_synth_test";
  std::filesystem::remove_all(dir);
  const auto m1 = gen_dataset(3, 11, 120.0, dir / "a");
  const auto m2 = gen_dataset(3, 11, 120.0, dir / "b");
  ASSERT_EQ(m1.entries.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& e = m1.entries[k];
    EXPECT_GE(rad2deg(angular_separation(e.viewpoints[0], e.viewpoints[1])), 120.0 - 1e-9);
    EXPECT_EQ(e.asset_seed, m2.entries[k].asset_seed);
    EXPECT_TRUE(e.poses[1].rotation.isApprox(m2.entries[k].poses[1].rotation, 0));
    const auto rel = relative_pose(e.poses[0], e.poses[1]);
    EXPECT_LT((rel.rotation - e.relative.rotation).norm(), 1e-12);
    const auto pair = load_pair(m1, e);
    EXPECT_EQ(pair.images[0].width(), 480);
    EXPECT_GT(mask_area(pair.masks[1]), 0);
  }
  const auto loaded = load_manifest(dir / "a" / "manifest.json");
  ASSERT_EQ(loaded.entries.size(), 3u);
  EXPECT_EQ(loaded.entries[2].id, m1.entries[2].id);
  EXPECT_NEAR(loaded.entries[2].intrinsics[0].fx, m1.entries[2].intrinsics[0].fx, 1e-12);
  EXPECT_THROW(load_manifest(dir / "missing.json"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace xpose
