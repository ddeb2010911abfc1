#include <gtest/gtest.h>

#include <filesystem>

#include "xpose/errors.hpp"
#include "xpose/eval.hpp"

using namespace xpose;

namespace {

Eigen::Matrix3d euler(char a, double da, char b, double db) {
  auto axis = [](char c, double deg) -> Eigen::Matrix3d {
    const double r = deg2rad(deg);
    return c == 'x' ? rot_x(r) : c == 'y' ? rot_y(r) : rot_z(r);
  };
  return axis(a, da) * axis(b, db);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

std::filesystem::path tiny_dataset() {
  static const auto dir = [] {
    auto d = std::filesystem::temp_directory_path() / "xpose_eval_test";
    std::filesystem::remove_all(d);
    gen_dataset(3, 11, 60.0, d);
    return d;
  }();
  return dir / "manifest.json";
}

}  // namespace

TEST(Metrics, RotationError) {
  // Reference values from scipy Rotation.
  EXPECT_NEAR(rotation_error_deg(euler('z', 30, 'x', 20), euler('z', 10, 'y', -15)), 33.48332245281998, 1e-9);
  EXPECT_NEAR(rotation_error_deg(Eigen::Matrix3d::Identity(), rot_z(deg2rad(37.0))), 37.0, 1e-9);
  EXPECT_NEAR(rotation_error_deg(Eigen::Matrix3d::Identity(), rot_x(M_PI)), 180.0, 1e-6);
  EXPECT_NEAR(rotation_error_deg(rot_y(0.3), rot_y(0.3)), 0.0, 1e-6);
}

TEST(Metrics, TranslationAngle) {
  EXPECT_NEAR(translation_angle_deg({0.3, -1.2, 2.0}, {0.5, -0.9, 2.4}), 10.920990266842457, 1e-9);
  EXPECT_NEAR(translation_angle_deg({1, 0, 0}, {3, 0, 0}), 0.0, 1e-6);
  EXPECT_NEAR(translation_angle_deg({1, 0, 0}, {-1, 0, 0}), 180.0, 1e-6);
  EXPECT_EQ(code_of([] { translation_angle_deg({0, 0, 0}, {1, 0, 0}); }), ErrorCode::ZeroTranslation);
}

TEST(Metrics, AccuracyIsStrict) {
  EXPECT_DOUBLE_EQ(accuracy_at({14.9, 15.0, 15.1, 3.0}, 15.0), 0.5);
  EXPECT_DOUBLE_EQ(accuracy_at({0.0}, 15.0), 1.0);
  EXPECT_EQ(code_of([] { accuracy_at({}, 15.0); }), ErrorCode::EmptyList);
}

TEST(Dilation, MatchesDiskStructuringElement) {
  Mask m = Mask::Zero(60, 80);
  m.block(20, 30, 10, 20).setConstant(kMaskOn);
  // bbox side 20, 25% -> radius 5; 560 from scipy binary_dilation with a disk.
  const Mask d = dilate_mask(m, 25.0);
  EXPECT_EQ((d != 0).count(), 560);

  // Brute-force disk oracle on an irregular mask.
  Mask blob = Mask::Zero(40, 40);
  blob(10, 10) = blob(12, 25) = blob(30, 18) = kMaskOn;
  const Mask out = dilate_mask(blob, 20.0);  // side 21 -> r = 4
  const int r = 4;
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) {
      bool on = false;
      for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
          if (blob(y, x) && (y - i) * (y - i) + (x - j) * (x - j) <= r * r) on = true;
      EXPECT_EQ(out(i, j) != 0, on) << i << "," << j;
    }
}

TEST(Dilation, ZeroAndEmpty) {
  Mask m = Mask::Zero(10, 10);
  EXPECT_TRUE((dilate_mask(m, 5.0) == m).all());
  m(4, 4) = kMaskOn;
  EXPECT_TRUE((dilate_mask(m, 0.0) == m).all());
  EXPECT_EQ(code_of([&] { dilate_mask(m, -1.0); }), ErrorCode::InvalidArgument);
}

TEST(Benchmark, StubEstimatorAndFailures) {
  const auto manifest = load_manifest(tiny_dataset());
  BenchmarkOptions opts;
  opts.threads = 2;
  opts.backend = make_backend_factory("mock");
  opts.estimator = [](const DatasetEntry& e, const LoadedPair&, const Generator&, const PipelineConfig&) {
    if (e.id == "pair_0001") throw Error(ErrorCode::EmptyMask, "boom");
    return e.relative;
  };
  const auto report = run_benchmark(manifest, opts);
  ASSERT_EQ(report.pairs.size(), 3u);
  for (std::size_t k = 0; k + 1 < report.pairs.size(); ++k) EXPECT_LT(report.pairs[k].id, report.pairs[k + 1].id);
  int failed = 0;
  for (const auto& p : report.pairs) {
    if (p.failed) {
      ++failed;
      EXPECT_EQ(p.rot_err_deg, 180.0);
      EXPECT_EQ(p.trans_err_deg, 180.0);
    } else {
      EXPECT_NEAR(p.rot_err_deg, 0.0, 1e-6);
      EXPECT_NEAR(p.trans_err_deg, 0.0, 1e-6);
    }
  }
  EXPECT_EQ(failed, 1);
  EXPECT_NEAR(report.rot15, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(report.trans30, 2.0 / 3.0, 1e-12);

  const auto j = report.to_json();
  EXPECT_TRUE(j.contains("config"));
  EXPECT_EQ(j["pairs"].size(), 3u);
  for (const char* key : {"rot15", "rot30", "trans15", "trans30"}) EXPECT_TRUE(j["acc"].contains(key)) << key;
}

TEST(Benchmark, EmptyManifest) {
  BenchmarkOptions opts;
  opts.backend = make_backend_factory("mock");
  EXPECT_EQ(code_of([&] { run_benchmark(DatasetManifest{}, opts); }), ErrorCode::EmptyList);
}

TEST(Benchmark, UnknownBackend) {
  EXPECT_EQ(code_of([] { make_backend_factory("nope"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_backend_factory("remote"); }), ErrorCode::InvalidArgument);
}
