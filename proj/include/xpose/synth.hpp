#ifndef XPOSE_SYNTH_HPP
#define XPOSE_SYNTH_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "xpose/generator.hpp"
#include "xpose/geom.hpp"
#include "xpose/image.hpp"

namespace xpose {

struct Triangle {
  std::array<Eigen::Vector3d, 3> vertices;
  std::array<Eigen::Vector3f, 3> colors;  // RGB in [0, 255]
};

struct Asset {
  std::vector<Triangle> triangles;
  std::uint64_t seed = 0;
};

/// Perturbed icosphere with per-face random colors, one bulging side and a
/// single black/yellow marker face, so no rotation maps it onto itself.
/// All vertices lie strictly inside the unit sphere.
Asset make_asset(std::uint64_t seed);

/// Loader hook for externally built meshes: validates that the triangles fit
/// the unit sphere and that there are at least 12 of them.
Asset asset_from_triangles(std::vector<Triangle> triangles, std::uint64_t seed = 0);

struct RenderResult {
  Image image;
  Mask mask;
};

struct RenderOptions {
  int supersample = 2;
};

/// Z-buffered rasterization with flat Lambertian shading under a fixed
/// object-frame light and per-vertex colors, on a white background.
/// The camera center must lie outside the unit sphere.
RenderResult render(const Asset& asset, const RigidTransformd& pose, const CameraIntrinsicsd& K,
                    const RenderOptions& options = {});

// ---------------------------------------------------------------------------
// Oracle generator

struct OracleOptions {
  RenderOptions render;
  double roll_search_step_deg = 2.0;
  double roll_tolerance_deg = 0.01;
};

/// Stands in for the diffusion model. It is registered with the object and
/// the pose of one object-centric source image. For an input that is an
/// in-plane rotation of the source, it recovers the rotation by image
/// comparison, then renders each requested view at
/// (azimuth + d_az, elevation + d_el) around the source's camera orbit,
/// keeping the input's in-plane roll. Upright inputs therefore yield exact
/// re-renderings; rolled inputs yield views whose geometry is inconsistent
/// with an upright camera model.
class OracleGenerator final : public Generator {
 public:
  OracleGenerator(Asset asset, const RigidTransformd& source_pose, const CameraIntrinsicsd& K_v,
                  OracleOptions options = {});

  std::vector<Image> generate(const ViewRequest& request) const override;
  std::string name() const override { return "oracle"; }

  /// Viewpoint the oracle attributes to an input image (roll included).
  SphericalViewpointd perceive(const Image& image) const;

  const SphericalViewpointd& source_viewpoint() const { return source_vp_; }
  const Image& source_image() const { return source_.image; }
  const CameraIntrinsicsd& intrinsics() const { return K_v_; }
  const Asset& asset() const { return asset_; }

  RenderResult render_view(const SphericalViewpointd& vp) const;

 private:
  double find_roll(const Image& image) const;

  Asset asset_;
  CameraIntrinsicsd K_v_;
  OracleOptions options_;
  SphericalViewpointd source_vp_;
  RenderResult source_;
  Plane source_gray_;
  Plane source_gray_small_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::uint64_t, double> roll_cache_;
};

/// Object-centric source pose of an input view: the look-at rotation toward
/// the mask's square ROI composed with the world->camera pose.
struct ObjectCentricFrame {
  SquareRoid roi;
  RigidTransformd look_at;  // rotation only
  CameraIntrinsicsd K_v;
  RigidTransformd object_pose;  // object -> virtual camera
};

ObjectCentricFrame object_centric_frame(const RigidTransformd& world_to_camera,
                                        const CameraIntrinsicsd& K, const Mask& mask, int s_v);

// ---------------------------------------------------------------------------
// Dataset

inline constexpr const char* kManifestVersion = "xpose-manifest/1";

struct DatasetEntry {
  std::string id;
  std::uint64_t asset_seed = 0;
  std::array<std::filesystem::path, 2> images;  // relative to the manifest
  std::array<std::filesystem::path, 2> masks;
  std::array<CameraIntrinsicsd, 2> intrinsics;
  std::array<RigidTransformd, 2> poses;  // world -> camera
  std::array<SphericalViewpointd, 2> viewpoints;
  RigidTransformd relative;  // x_c2 = R x_c1 + t
};

struct DatasetManifest {
  std::string version = kManifestVersion;
  std::filesystem::path root;  // directory holding the manifest
  std::vector<DatasetEntry> entries;

  const DatasetEntry* find(const std::string& id) const;
};

struct DatasetOptions {
  int image_width = 480;
  int image_height = 360;
  double min_focal = 380.0;
  double max_focal = 460.0;
  double min_distance = 3.2;
  double max_distance = 4.2;
  double max_elevation_deg = 60.0;
  double max_target_offset = 0.35;  // look-at point jitter (object off-center)
  bool random_inplane = true;       // roll uniform in [-45, 45]
};

DatasetManifest gen_dataset(int n_pairs, std::uint64_t seed, double min_separation_deg,
                            const std::filesystem::path& out_dir, const DatasetOptions& options = {});

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct LoadedPair {
  Image images[2];
  Mask masks[2];
};

LoadedPair load_pair(const DatasetManifest& manifest, const DatasetEntry& entry);

/// Pose of a camera at (center) looking at (target) with up = +z, rolled by
/// roll_deg about its optical axis.
RigidTransformd look_at_pose(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                             double roll_deg);

}  // namespace xpose

#endif  // XPOSE_SYNTH_HPP
