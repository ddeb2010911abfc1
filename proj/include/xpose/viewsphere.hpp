#ifndef XPOSE_VIEWSPHERE_HPP
#define XPOSE_VIEWSPHERE_HPP

#include <cstdint>
#include <vector>

#include "xpose/geom.hpp"

namespace xpose {

struct ViewpointSet {
  std::vector<SphericalViewpointd> viewpoints;
  std::uint64_t seed = 0;

  std::size_t count() const { return viewpoints.size(); }
};

struct ViewDelta {
  double d_azimuth_deg = 0;
  double d_elevation_deg = 0;

  bool operator==(const ViewDelta&) const = default;
};

/// Fibonacci lattice on the upper hemisphere: z stratified as (k + 0.5) / n,
/// azimuth advancing by the golden angle. A nonzero seed rotates the whole
/// lattice about +z by a fixed, seed-derived azimuth.
ViewpointSet sample_upper_hemisphere(int n, double distance, double inplane_deg = 0.0,
                                     std::uint64_t seed = 0);

/// (target - reference) with the azimuth difference wrapped into (-180, 180].
ViewDelta delta_view(const SphericalViewpointd& reference, const SphericalViewpointd& target);
std::vector<ViewDelta> delta_views(const SphericalViewpointd& reference, const ViewpointSet& targets);

/// Viewing direction from the origin toward the camera center.
Eigen::Vector3d viewpoint_direction(double azimuth_deg, double elevation_deg);

/// Angle in radians between two viewpoint directions.
double angular_separation(const SphericalViewpointd& a, const SphericalViewpointd& b);

}  // namespace xpose

#endif  // XPOSE_VIEWSPHERE_HPP
