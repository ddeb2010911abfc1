#ifndef XPOSE_VIEWGEN_HPP
#define XPOSE_VIEWGEN_HPP

#include <vector>

#include "xpose/generator.hpp"
#include "xpose/geom.hpp"
#include "xpose/image.hpp"
#include "xpose/orient.hpp"

namespace xpose {

/// Posed reference images sharing one set of virtual intrinsics.
/// poses[i] == viewpoint_to_pose(viewpoints[i]).
struct GeneratedViewSet {
  std::vector<Image> images;
  std::vector<Mask> masks;  // foreground of each image
  std::vector<SphericalViewpointd> viewpoints;
  std::vector<RigidTransformd> poses;
  CameraIntrinsicsd intrinsics;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;
};

struct ReferenceSetOptions {
  int n_views = 128;
  int steps = 50;
  std::uint64_t seed = 0;
  bool include_input = true;  // rectified input joins as the last member
};

/// Generates n_views hemisphere views of the rectified first image, with
/// deltas taken from its canonical viewpoint (azimuth 0, estimated elevation,
/// inscribed-sphere distance for K_v1).
GeneratedViewSet build_reference_set(const Image& rectified, const OrientationHypothesis& orientation,
                                     const CameraIntrinsicsd& K_v1, const Generator& generator,
                                     const ReferenceSetOptions& options = {});

}  // namespace xpose

#endif  // XPOSE_VIEWGEN_HPP
