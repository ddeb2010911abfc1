#include "xpose/viewsphere.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "xpose/errors.hpp"
#include "xpose/generator.hpp"

namespace xpose {
namespace {

TEST(Hemisphere, MinimumSeparationAndBandCoverage) {
  for (int n : {8, 64, 128}) {
    const auto set = sample_upper_hemisphere(n, 2.0);
    ASSERT_EQ(set.count(), n);
    double min_sep = 10;
    for (int a = 0; a < n; ++a) {
      EXPECT_GE(set.viewpoints[a].elevation_deg, 0.0);
      EXPECT_LT(set.viewpoints[a].elevation_deg, 90.0);
      for (int b = a + 1; b < n; ++b)
        min_sep = std::min(min_sep, angular_separation(set.viewpoints[a], set.viewpoints[b]));
    }
    EXPECT_GE(min_sep, 0.6 * std::sqrt(2 * std::numbers::pi / n)) << n;
    // Equal-area bands of sin(el) hold equal counts.
    int low = 0;
    for (const auto& v : set.viewpoints) low += std::sin(deg2rad(v.elevation_deg)) < 0.5;
    EXPECT_EQ(low, n / 2);
  }
}

TEST(Hemisphere, SeedRotatesAboutVertical) {
  const auto a = sample_upper_hemisphere(16, 2.0, 0.0, 0);
  const auto b = sample_upper_hemisphere(16, 2.0, 0.0, 42);
  const auto c = sample_upper_hemisphere(16, 2.0, 0.0, 42);
  const double shift = wrap_deg_360(b.viewpoints[0].azimuth_deg - a.viewpoints[0].azimuth_deg);
  for (int k = 0; k < 16; ++k) {
    EXPECT_DOUBLE_EQ(a.viewpoints[k].elevation_deg, b.viewpoints[k].elevation_deg);
    EXPECT_NEAR(wrap_deg_180(b.viewpoints[k].azimuth_deg - a.viewpoints[k].azimuth_deg - shift), 0.0, 1e-9);
    EXPECT_EQ(b.viewpoints[k], c.viewpoints[k]);
  }
}

TEST(Hemisphere, RejectsNonPositiveCount) { EXPECT_THROW(sample_upper_hemisphere(0, 2.0), Error); }

TEST(DeltaView, WrapsAzimuth) {
  const SphericalViewpointd ref{350, 20, 0, 2};
  const SphericalViewpointd tgt{10, 35, 0, 2};
  const auto d = delta_view(ref, tgt);
  EXPECT_NEAR(d.d_azimuth_deg, 20.0, 1e-12);
  EXPECT_NEAR(d.d_elevation_deg, 15.0, 1e-12);
  const auto back = delta_view(tgt, ref);
  EXPECT_NEAR(back.d_azimuth_deg, -20.0, 1e-12);
}

TEST(MockGenerator, StampsEachDelta) {
  const MockGenerator gen;
  ViewRequest req{make_test_card(32), {{12.5, -3.25}, {-170, 40}}, 50, 1};
  const auto out = gen.generate(req);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(read_stamp(out[0]), (ViewDelta{12.5, -3.25}));
  EXPECT_EQ(read_stamp(out[1]), (ViewDelta{-170, 40}));
  EXPECT_EQ(out[0].width(), 32);
}

TEST(MockGenerator, ValidatesRequest) {
  const MockGenerator gen;
  EXPECT_THROW(gen.generate({make_test_card(32), {}, 50, 0}), Error);
  EXPECT_THROW(gen.generate({make_test_card(32), {{0, 0}}, 0, 0}), Error);
  EXPECT_THROW(gen.generate({Image::filled(16, 8), {{0, 0}}, 50, 0}), Error);
}

}  // namespace
}  // namespace xpose
