#include "xpose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "xpose/png_io.hpp"
#include "xpose/viewsphere.hpp"

namespace xpose {

namespace {

using json = nlohmann::json;

struct Icosphere {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
};

Icosphere make_icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere mesh;
  mesh.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                   {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : mesh.vertices) v.normalize();
  mesh.faces = {{0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
                {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
                {3, 8, 9},  {4, 9, 5},   {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      const auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      const int index = static_cast<int>(mesh.vertices.size()) - 1;
      midpoints.emplace(key, index);
      return index;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      const int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
  }
  return mesh;
}

double edge_fn(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

json to_json(const RigidTransformd& T) {
  json R = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R.push_back(T.rotation(r, c));
  return {{"R", R}, {"t", {T.translation.x(), T.translation.y(), T.translation.z()}}};
}

RigidTransformd transform_from_json(const json& j) {
  const auto& R = j.at("R");
  const auto& t = j.at("t");
  if (R.size() != 9 || t.size() != 3) fail(ErrorCode::IoFailure, "pose arrays must have 9 and 3 entries");
  RigidTransformd T;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) T.rotation(r, c) = R.at(r * 3 + c).get<double>();
  T.translation = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
  return T;
}

json to_json(const CameraIntrinsicsd& K) {
  return {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

CameraIntrinsicsd intrinsics_from_json(const json& j) {
  CameraIntrinsicsd K{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                      j.at("cy").get<double>(), j.at("width").get<int>(), j.at("height").get<int>()};
  if (!K.valid()) fail(ErrorCode::IoFailure, "invalid intrinsics in manifest");
  return K;
}

json to_json(const SphericalViewpointd& vp) {
  return {{"azimuth_deg", vp.azimuth_deg},
          {"elevation_deg", vp.elevation_deg},
          {"inplane_deg", vp.inplane_deg},
          {"distance", vp.distance}};
}

SphericalViewpointd viewpoint_from_json(const json& j) {
  return {j.at("azimuth_deg").get<double>(), j.at("elevation_deg").get<double>(),
          j.at("inplane_deg").get<double>(), j.at("distance").get<double>()};
}

bool touches_border(const Mask& mask) {
  const auto last_row = mask.rows() - 1, last_col = mask.cols() - 1;
  return (mask.row(0) != 0).any() || (mask.row(last_row) != 0).any() ||
         (mask.col(0) != 0).any() || (mask.col(last_col) != 0).any();
}

}  // namespace

Asset make_asset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Icosphere sphere = make_icosphere(2);

  Eigen::Vector3d bulge(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5);
  if (bulge.norm() < 1e-3) bulge = Eigen::Vector3d::UnitX();
  bulge.normalize();

  std::vector<Eigen::Vector3d> verts;
  verts.reserve(sphere.vertices.size());
  for (const auto& dir : sphere.vertices) {
    const double along = std::max(0.0, dir.dot(bulge));
    const double radius = (0.80 + 0.08 * unit(rng)) * (1.0 + 0.10 * along * along);
    verts.push_back(radius * dir);
  }

  Asset asset;
  asset.seed = seed;
  const auto marker = static_cast<std::size_t>(unit(rng) * double(sphere.faces.size())) % sphere.faces.size();
  for (std::size_t f = 0; f < sphere.faces.size(); ++f) {
    Triangle tri;
    const Eigen::Vector3f base(float(30 + 200 * unit(rng)), float(30 + 200 * unit(rng)),
                               float(30 + 200 * unit(rng)));
    for (int k = 0; k < 3; ++k) {
      tri.vertices[k] = verts[sphere.faces[f][k]];
      const Eigen::Vector3f jitter(float(60 * unit(rng) - 30), float(60 * unit(rng) - 30),
                                   float(60 * unit(rng) - 30));
      tri.colors[k] = (base + jitter).cwiseMax(0.0f).cwiseMin(255.0f);
    }
    if (f == marker) {
      tri.colors = {Eigen::Vector3f(0, 0, 0), Eigen::Vector3f(255, 230, 0), Eigen::Vector3f(0, 0, 0)};
    }
    asset.triangles.push_back(tri);
  }
  return asset;
}

Asset asset_from_triangles(std::vector<Triangle> triangles, std::uint64_t seed) {
  require(triangles.size() >= 12, "an asset needs at least 12 triangles");
  for (const auto& tri : triangles)
    for (const auto& v : tri.vertices) require(v.norm() < 1.0, "asset vertices must lie inside the unit sphere");
  return {std::move(triangles), seed};
}

RenderResult render(const Asset& asset, const RigidTransformd& pose, const CameraIntrinsicsd& K,
                    const RenderOptions& options) {
  require(K.valid(), "invalid intrinsics");
  require(pose.center().norm() > 1.0, "camera must lie outside the unit sphere");
  require(options.supersample >= 1, "supersample factor must be >= 1");
  const int ss = options.supersample;
  const int W = K.width * ss, H = K.height * ss;
  const double fx = K.fx * ss, fy = K.fy * ss, cx = K.cx * ss, cy = K.cy * ss;
  const Eigen::Vector3d light = Eigen::Vector3d(0.3, -0.4, 0.87).normalized();

  std::vector<float> depth(std::size_t(W) * H, std::numeric_limits<float>::infinity());
  std::vector<Eigen::Vector3f> color(std::size_t(W) * H, Eigen::Vector3f::Constant(kBackground));

  for (const auto& tri : asset.triangles) {
    std::array<Eigen::Vector3d, 3> cam;
    bool behind = false;
    for (int k = 0; k < 3; ++k) {
      cam[k] = pose * tri.vertices[k];
      behind = behind || cam[k].z() <= 1e-6;
    }
    if (behind) continue;
    std::array<Eigen::Vector2d, 3> px;
    for (int k = 0; k < 3; ++k)
      px[k] = {fx * cam[k].x() / cam[k].z() + cx, fy * cam[k].y() / cam[k].z() + cy};
    const double area = edge_fn(px[0], px[1], px[2].x(), px[2].y());
    if (std::abs(area) < 1e-12) continue;

    const Eigen::Vector3d normal =
        (tri.vertices[1] - tri.vertices[0]).cross(tri.vertices[2] - tri.vertices[0]).normalized();
    const float shade = static_cast<float>(0.4 + 0.6 * std::abs(normal.dot(light)));

    const double xmin = std::min({px[0].x(), px[1].x(), px[2].x()});
    const double xmax = std::max({px[0].x(), px[1].x(), px[2].x()});
    const double ymin = std::min({px[0].y(), px[1].y(), px[2].y()});
    const double ymax = std::max({px[0].y(), px[1].y(), px[2].y()});
    const int j0 = std::max(0, int(std::floor(xmin - 0.5)));
    const int j1 = std::min(W - 1, int(std::ceil(xmax - 0.5)));
    const int i0 = std::max(0, int(std::floor(ymin - 0.5)));
    const int i1 = std::min(H - 1, int(std::ceil(ymax - 0.5)));
    const double inv_area = 1.0 / area;
    const double iz[3] = {1.0 / cam[0].z(), 1.0 / cam[1].z(), 1.0 / cam[2].z()};

    for (int i = i0; i <= i1; ++i) {
      const double py = i + 0.5;
      for (int j = j0; j <= j1; ++j) {
        const double pxx = j + 0.5;
        const double b0 = edge_fn(px[1], px[2], pxx, py) * inv_area;
        const double b1 = edge_fn(px[2], px[0], pxx, py) * inv_area;
        const double b2 = 1.0 - b0 - b1;
        if (b0 < 0 || b1 < 0 || b2 < 0) continue;
        const double inv_z = b0 * iz[0] + b1 * iz[1] + b2 * iz[2];
        const float z = static_cast<float>(1.0 / inv_z);
        const std::size_t idx = std::size_t(i) * W + j;
        if (!(z < depth[idx])) continue;
        depth[idx] = z;
        const double w0 = b0 * iz[0] / inv_z, w1 = b1 * iz[1] / inv_z, w2 = b2 * iz[2] / inv_z;
        const Eigen::Vector3f c =
            float(w0) * tri.colors[0] + float(w1) * tri.colors[1] + float(w2) * tri.colors[2];
        color[idx] = (shade * c).cwiseMin(255.0f);
      }
    }
  }

  RenderResult out{Image::filled(K.width, K.height, 0.0f), Mask::Zero(K.height, K.width)};
  const float norm = 1.0f / float(ss * ss);
  for (int i = 0; i < K.height; ++i) {
    for (int j = 0; j < K.width; ++j) {
      Eigen::Vector3f sum = Eigen::Vector3f::Zero();
      int covered = 0;
      for (int a = 0; a < ss; ++a) {
        for (int b = 0; b < ss; ++b) {
          const std::size_t idx = std::size_t(i * ss + a) * W + (j * ss + b);
          sum += color[idx];
          covered += std::isfinite(depth[idx]) ? 1 : 0;
        }
      }
      for (int c = 0; c < 3; ++c) out.image.channels[c](i, j) = sum[c] * norm;
      out.mask(i, j) = 2 * covered >= ss * ss ? kMaskOn : 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

OracleGenerator::OracleGenerator(Asset asset, const RigidTransformd& source_pose,
                                 const CameraIntrinsicsd& K_v, OracleOptions options)
    : asset_(std::move(asset)), K_v_(K_v), options_(options) {
  require(K_v.width == K_v.height, "oracle intrinsics must be square");
  source_vp_ = pose_to_viewpoint(source_pose);
  source_ = render(asset_, source_pose, K_v_, options_.render);
  source_gray_ = to_gray(source_.image);
  source_gray_small_ = resample_square(source_gray_, std::min(64, K_v.width));
}

RenderResult OracleGenerator::render_view(const SphericalViewpointd& vp) const {
  return render(asset_, orbit_pose(vp.azimuth_deg, vp.elevation_deg, vp.inplane_deg, vp.distance), K_v_,
                options_.render);
}

double OracleGenerator::find_roll(const Image& image) const {
  require(image.width() == K_v_.width && image.height() == K_v_.height,
          "oracle input must match the registered intrinsics");
  const std::uint64_t key = image_digest(image);
  {
    std::lock_guard lock(cache_mutex_);
    if (const auto it = roll_cache_.find(key); it != roll_cache_.end()) return it->second;
  }
  const Plane gray = to_gray(image);
  const Plane small = resample_square(gray, static_cast<int>(source_gray_small_.rows()));

  const double step = options_.roll_search_step_deg;
  double best = 0.0, best_score = -2.0;
  for (double phi = -180.0; phi < 180.0; phi += step) {
    const double s = zero_mean_ncc(small, rotate_inplane(source_gray_small_, phi, kBackground));
    if (s > best_score) {
      best_score = s;
      best = phi;
    }
  }

  // Golden-section refinement at full resolution.
  auto score = [&](double phi) { return zero_mean_ncc(gray, rotate_inplane(source_gray_, phi, kBackground)); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best - step, hi = best + step;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = score(x1), f2 = score(x2);
  while (hi - lo > options_.roll_tolerance_deg) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = score(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = score(x1);
    }
  }
  const double roll = 0.5 * (lo + hi);
  std::lock_guard lock(cache_mutex_);
  roll_cache_.emplace(key, roll);
  return roll;
}

SphericalViewpointd OracleGenerator::perceive(const Image& image) const {
  SphericalViewpointd vp = source_vp_;
  if (!(image == source_.image)) vp.inplane_deg = wrap_deg_180_half_open(vp.inplane_deg + find_roll(image));
  return vp;
}

std::vector<Image> OracleGenerator::generate(const ViewRequest& request) const {
  validate_request(request);
  const SphericalViewpointd input = perceive(request.image);
  std::vector<Image> out;
  out.reserve(request.deltas.size());
  for (const auto& d : request.deltas) {
    SphericalViewpointd vp = input;
    vp.azimuth_deg = wrap_deg_360(input.azimuth_deg + d.d_azimuth_deg);
    vp.elevation_deg = input.elevation_deg + d.d_elevation_deg;
    out.push_back(render_view(vp).image);
  }
  return out;
}

ObjectCentricFrame object_centric_frame(const RigidTransformd& world_to_camera,
                                        const CameraIntrinsicsd& K, const Mask& mask, int s_v) {
  const auto roi = square_roi_from_mask(mask);
  if (!roi) fail(ErrorCode::EmptyMask, "mask has no foreground pixels");
  ObjectCentricFrame frame;
  frame.roi = *roi;
  frame.look_at = look_at_rotation(roi->center, K);
  frame.K_v = virtual_intrinsics(K, *roi, s_v);
  frame.object_pose = frame.look_at * world_to_camera;
  return frame;
}

// ---------------------------------------------------------------------------

RigidTransformd look_at_pose(const Eigen::Vector3d& center, const Eigen::Vector3d& target, double roll_deg) {
  const Eigen::Vector3d forward = (target - center).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  require(right.norm() > 1e-9, "look-at direction parallel to the up axis");
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d R;
  R.row(0) = right.transpose();
  R.row(1) = down.transpose();
  R.row(2) = forward.transpose();
  RigidTransformd T;
  T.rotation = rot_z(deg2rad(roll_deg)) * R;
  T.translation = -(T.rotation * center);
  return T;
}

const DatasetEntry* DatasetManifest::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

DatasetManifest gen_dataset(int n_pairs, std::uint64_t seed, double min_separation_deg,
                            const std::filesystem::path& out_dir, const DatasetOptions& options) {
  require(n_pairs >= 1, "n_pairs must be >= 1");
  require(min_separation_deg >= 0.0 && min_separation_deg <= 180.0, "min separation must lie in [0, 180]");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.root = out_dir;
  const double min_sep = deg2rad(min_separation_deg);
  const double max_sin_el = std::sin(deg2rad(options.max_elevation_deg));

  for (int p = 0; p < n_pairs; ++p) {
    std::seed_seq seq{std::uint32_t(seed & 0xFFFFFFFFu), std::uint32_t(seed >> 32), std::uint32_t(p)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto sample_view = [&]() {
      SphericalViewpointd vp;
      vp.azimuth_deg = 360.0 * unit(rng);
      vp.elevation_deg = rad2deg(std::asin(max_sin_el * unit(rng)));
      return vp;
    };
    SphericalViewpointd views[2];
    int tries = 0;
    do {
      views[0] = sample_view();
      views[1] = sample_view();
      require(++tries < 100000, "cannot satisfy the minimum separation within the elevation band");
    } while (angular_separation(views[0], views[1]) < min_sep);

    DatasetEntry entry;
    char id[32];
    std::snprintf(id, sizeof(id), "pair_%04d", p);
    entry.id = id;
    entry.asset_seed = std::uint64_t(seed) * 1000003ull + std::uint64_t(p) + 1;
    const Asset asset = make_asset(entry.asset_seed);

    for (int k = 0; k < 2; ++k) {
      RenderResult result;
      for (int attempt = 0;; ++attempt) {
        require(attempt < 200, "cannot place the object inside the frame");
        const double f = options.min_focal + (options.max_focal - options.min_focal) * unit(rng);
        const double distance = options.min_distance + (options.max_distance - options.min_distance) * unit(rng);
        Eigen::Vector3d offset;
        do {
          offset = Eigen::Vector3d(2 * unit(rng) - 1, 2 * unit(rng) - 1, 2 * unit(rng) - 1);
        } while (offset.norm() > 1.0);
        offset *= options.max_target_offset;
        const double roll = options.random_inplane ? 90.0 * unit(rng) - 45.0 : 0.0;

        CameraIntrinsicsd K{f, f, options.image_width / 2.0, options.image_height / 2.0,
                            options.image_width, options.image_height};
        const Eigen::Vector3d center =
            distance * viewpoint_direction(views[k].azimuth_deg, views[k].elevation_deg);
        const RigidTransformd pose = look_at_pose(center, offset, roll);
        result = render(asset, pose, K);
        if (touches_border(result.mask) || mask_area(result.mask) == 0) continue;
        entry.intrinsics[k] = K;
        entry.poses[k] = pose;
        entry.viewpoints[k] = views[k];
        entry.viewpoints[k].inplane_deg = roll;
        entry.viewpoints[k].distance = distance;
        break;
      }
      const char* suffix = k == 0 ? "a" : "b";
      entry.images[k] = entry.id + "_" + suffix + ".png";
      entry.masks[k] = entry.id + "_" + suffix + "_mask.png";
      write_png(out_dir / entry.images[k], result.image);
      write_png(out_dir / entry.masks[k], result.mask);
    }
    entry.relative = relative_pose(entry.poses[0], entry.poses[1]);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j;
    j["id"] = e.id;
    j["asset_seed"] = e.asset_seed;
    j["images"] = {e.images[0].generic_string(), e.images[1].generic_string()};
    j["masks"] = {e.masks[0].generic_string(), e.masks[1].generic_string()};
    j["intrinsics"] = {to_json(e.intrinsics[0]), to_json(e.intrinsics[1])};
    j["poses"] = {to_json(e.poses[0]), to_json(e.poses[1])};
    j["viewpoints"] = {to_json(e.viewpoints[0]), to_json(e.viewpoints[1])};
    j["relative_gt"] = to_json(e.relative);
    entries.push_back(std::move(j));
  }
  const json doc = {{"version", manifest.version}, {"entries", entries}};
  write_file(path, doc.dump(2) + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, "manifest parse error: " + std::string(e.what()));
  }
  DatasetManifest manifest;
  manifest.root = path.parent_path();
  try {
    manifest.version = doc.at("version").get<std::string>();
    if (manifest.version != kManifestVersion)
      fail(ErrorCode::IoFailure, "unsupported manifest version " + manifest.version);
    for (const auto& j : doc.at("entries")) {
      DatasetEntry e;
      e.id = j.at("id").get<std::string>();
      e.asset_seed = j.value("asset_seed", std::uint64_t{0});
      for (int k = 0; k < 2; ++k) {
        e.images[k] = j.at("images").at(k).get<std::string>();
        e.masks[k] = j.at("masks").at(k).get<std::string>();
        e.intrinsics[k] = intrinsics_from_json(j.at("intrinsics").at(k));
        e.poses[k] = transform_from_json(j.at("poses").at(k));
        if (!e.poses[k].is_valid(1e-6)) fail(ErrorCode::IoFailure, "invalid pose in entry " + e.id);
        if (j.contains("viewpoints")) e.viewpoints[k] = viewpoint_from_json(j.at("viewpoints").at(k));
      }
      e.relative = j.contains("relative_gt") ? transform_from_json(j.at("relative_gt"))
                                             : relative_pose(e.poses[0], e.poses[1]);
      manifest.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, "manifest schema error: " + std::string(e.what()));
  }
  return manifest;
}

LoadedPair load_pair(const DatasetManifest& manifest, const DatasetEntry& entry) {
  LoadedPair pair;
  for (int k = 0; k < 2; ++k) {
    pair.images[k] = read_png_rgb(manifest.root / entry.images[k]);
    pair.masks[k] = read_png_mask(manifest.root / entry.masks[k]);
  }
  return pair;
}

}  // namespace xpose
