#include "xpose/viewsphere.hpp"

#include <cmath>
#include <numbers>

namespace xpose {

ViewpointSet sample_upper_hemisphere(int n, double distance, double inplane_deg,
                                     std::uint64_t seed) {
  require(n >= 1, "viewpoint count must be >= 1");
  require(distance > 0, "distance must be positive");
  const double golden_angle_deg = 180.0 * (3.0 - std::sqrt(5.0));
  const double offset_deg =
      seed == 0 ? 0.0 : 360.0 * std::fmod(double(seed) * std::numbers::phi, 1.0);
  ViewpointSet set;
  set.seed = seed;
  set.viewpoints.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double z = (k + 0.5) / n;
    SphericalViewpointd vp;
    vp.elevation_deg = rad2deg(std::asin(z));
    vp.azimuth_deg = wrap_deg_360(offset_deg + golden_angle_deg * k);
    vp.inplane_deg = inplane_deg;
    vp.distance = distance;
    set.viewpoints.push_back(vp);
  }
  return set;
}

ViewDelta delta_view(const SphericalViewpointd& reference, const SphericalViewpointd& target) {
  return {wrap_deg_180(target.azimuth_deg - reference.azimuth_deg),
          target.elevation_deg - reference.elevation_deg};
}

std::vector<ViewDelta> delta_views(const SphericalViewpointd& reference, const ViewpointSet& targets) {
  std::vector<ViewDelta> deltas;
  deltas.reserve(targets.count());
  for (const auto& t : targets.viewpoints) deltas.push_back(delta_view(reference, t));
  return deltas;
}

Eigen::Vector3d viewpoint_direction(double azimuth_deg, double elevation_deg) {
  const double a = deg2rad(azimuth_deg), e = deg2rad(elevation_deg);
  return {std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e)};
}

double angular_separation(const SphericalViewpointd& a, const SphericalViewpointd& b) {
  const double c = viewpoint_direction(a.azimuth_deg, a.elevation_deg)
                       .dot(viewpoint_direction(b.azimuth_deg, b.elevation_deg));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace xpose
