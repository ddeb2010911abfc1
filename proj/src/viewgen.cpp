#include "xpose/viewgen.hpp"

#include "xpose/errors.hpp"

namespace xpose {

void GeneratedViewSet::validate() const {
  const auto n = images.size();
  require(masks.size() == n && viewpoints.size() == n && poses.size() == n,
          "view set lists differ in length");
  require(intrinsics.valid(), "view set intrinsics are invalid");
  for (std::size_t k = 0; k < n; ++k) {
    require(images[k].width() == intrinsics.width && images[k].height() == intrinsics.height,
            "view set image size does not match the intrinsics");
    const auto expected = viewpoint_to_pose(viewpoints[k]);
    require((expected.rotation - poses[k].rotation).norm() < 1e-9 &&
                (expected.translation - poses[k].translation).norm() < 1e-9,
            "view set pose does not match its viewpoint");
  }
}

GeneratedViewSet build_reference_set(const Image& rectified, const OrientationHypothesis& orientation,
                                     const CameraIntrinsicsd& K_v1, const Generator& generator,
                                     const ReferenceSetOptions& options) {
  require(options.n_views >= 1, "n_views must be at least 1");
  require(rectified.width() == K_v1.width && rectified.height() == K_v1.height,
          "rectified image does not match K_v1");
  const double d = distance_for_inscribed_sphere(K_v1);
  const SphericalViewpointd canonical{0.0, orientation.elevation_deg, 0.0, d};
  const auto targets = sample_upper_hemisphere(options.n_views, d, 0.0, options.seed);

  ViewRequest request{rectified, delta_views(canonical, targets), options.steps, options.seed};
  auto images = generator.generate(request);
  if (images.size() != targets.viewpoints.size())
    throw Error(GeneratorFailureKind::CountMismatch, "generator returned " + std::to_string(images.size()) +
                                                         " images for " + std::to_string(targets.count()) +
                                                         " views");

  GeneratedViewSet set;
  set.intrinsics = K_v1;
  set.images = std::move(images);
  set.viewpoints = targets.viewpoints;
  if (options.include_input) {
    set.images.push_back(rectified);
    set.viewpoints.push_back(canonical);
  }
  for (std::size_t k = 0; k < set.images.size(); ++k) {
    if (set.images[k].width() != K_v1.width || set.images[k].height() != K_v1.height)
      throw Error(GeneratorFailureKind::Decode, "generated image has the wrong resolution");
    set.masks.push_back(foreground_mask(set.images[k]));
    set.poses.push_back(viewpoint_to_pose(set.viewpoints[k]));
  }
  return set;
}

}  // namespace xpose
