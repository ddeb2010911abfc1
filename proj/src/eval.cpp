#include "xpose/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "xpose/errors.hpp"
#include "xpose/png_io.hpp"
#include "xpose/protocol.hpp"

namespace xpose {

double rotation_error_deg(const Eigen::Matrix3d& R_gt, const Eigen::Matrix3d& R_pr) {
  const double c = std::clamp(((R_gt.transpose() * R_pr).trace() - 1.0) / 2.0, -1.0, 1.0);
  return rad2deg(std::acos(c));
}

double translation_angle_deg(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_pr) {
  if (t_gt.norm() < 1e-12 || t_pr.norm() < 1e-12) fail(ErrorCode::ZeroTranslation, "translation has zero length");
  return rad2deg(std::acos(std::clamp(t_gt.normalized().dot(t_pr.normalized()), -1.0, 1.0)));
}

double accuracy_at(const std::vector<double>& errors, double threshold_deg) {
  require(threshold_deg > 0, "threshold must be positive");
  if (errors.empty()) fail(ErrorCode::EmptyList, "no errors to aggregate");
  const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return e < threshold_deg; });
  return double(hits) / double(errors.size());
}

Mask dilate_mask(const Mask& mask, double percent) {
  require(percent >= 0, "dilation percent must be >= 0");
  const auto box = mask_bbox(mask);
  if (percent == 0 || !box) return mask;
  const int r = int(std::lround(percent / 100.0 * std::max(box->width(), box->height())));
  if (r == 0) return mask;
  const auto h = mask.rows(), w = mask.cols();
  // Per-row prefix counts; a pixel is on if some row within r has an on
  // pixel within the disk's half-width for that row offset.
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> prefix(h, w + 1);
  for (Eigen::Index i = 0; i < h; ++i) {
    prefix(i, 0) = 0;
    for (Eigen::Index j = 0; j < w; ++j) prefix(i, j + 1) = prefix(i, j) + (mask(i, j) != 0);
  }
  Mask out = Mask::Zero(h, w);
  for (int dy = -r; dy <= r; ++dy) {
    const auto half = Eigen::Index(std::floor(std::sqrt(double(r) * r - double(dy) * dy)));
    for (Eigen::Index i = 0; i < h; ++i) {
      const Eigen::Index src = i + dy;
      if (src < 0 || src >= h || prefix(src, w) == 0) continue;
      for (Eigen::Index j = 0; j < w; ++j) {
        if (out(i, j)) continue;
        const Eigen::Index lo = std::max<Eigen::Index>(0, j - half);
        const Eigen::Index hi = std::min<Eigen::Index>(w, j + half + 1);
        if (prefix(src, hi) - prefix(src, lo) > 0) out(i, j) = kMaskOn;
      }
    }
  }
  return out;
}

nlohmann::json BenchmarkReport::to_json() const {
  nlohmann::json pairs_json = nlohmann::json::array();
  for (const auto& p : pairs) {
    nlohmann::json j{{"id", p.id}, {"rot_err_deg", p.rot_err_deg}, {"trans_err_deg", p.trans_err_deg}, {"time_ms", p.time_ms}};
    if (p.failed) j["error"] = p.error;
    if (!p.timings_ms.empty()) j["timings_ms"] = p.timings_ms;
    pairs_json.push_back(std::move(j));
  }
  return {{"config", config},
          {"pairs", pairs_json},
          {"acc", {{"rot15", rot15}, {"rot30", rot30}, {"trans15", trans15}, {"trans30", trans30}}}};
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {{"s_v", c.s_v},
          {"n_views", c.n_views},
          {"steps_orient", c.steps_orient},
          {"steps_generate", c.steps_generate},
          {"refine_iters", c.refine_iters},
          {"seed", c.seed},
          {"scorer", c.scorer},
          {"backend", c.backend},
          {"select_inplane_max_deg", c.select_inplane_max_deg},
          {"select_inplane_step_deg", c.select_inplane_step_deg},
          {"select_query_zooms", c.select_query_zooms}};
}

void write_report(const BenchmarkReport& report, const std::filesystem::path& path) {
  write_file(path, report.to_json().dump(2) + "\n");
}

BackendFactory make_backend_factory(const std::string& name, const std::string& endpoint,
                                    const RemoteOptions& remote_options) {
  if (name == "oracle") {
    return [](const DatasetManifest&, const DatasetEntry& e, const LoadedPair& pair, const PipelineConfig& cfg) {
      const auto frame = object_centric_frame(e.poses[0], e.intrinsics[0], pair.masks[0], cfg.s_v);
      return std::make_shared<const OracleGenerator>(make_asset(e.asset_seed), frame.object_pose, frame.K_v);
    };
  }
  if (name == "mock") {
    auto mock = std::make_shared<const MockGenerator>();
    return [mock](const DatasetManifest&, const DatasetEntry&, const LoadedPair&, const PipelineConfig&) {
      return GeneratorPtr(mock);
    };
  }
  if (name == "remote") {
    require(!endpoint.empty(), "remote backend needs an endpoint (generator.endpoint or " +
                                   std::string(kEndpointEnv) + ")");
    auto remote = std::make_shared<const RemoteGenerator>(endpoint, remote_options);
    return [remote](const DatasetManifest&, const DatasetEntry&, const LoadedPair&, const PipelineConfig&) {
      return GeneratorPtr(remote);
    };
  }
  throw Error(ErrorCode::InvalidArgument, "unknown backend '" + name + "' (expected oracle, mock or remote)");
}

namespace {

PairResult evaluate_entry(const DatasetManifest& manifest, const DatasetEntry& entry, const BenchmarkOptions& o) {
  PairResult r;
  r.id = entry.id;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    LoadedPair pair = load_pair(manifest, entry);
    if (o.dilation_percent > 0)
      for (auto& m : pair.masks) m = dilate_mask(m, o.dilation_percent);
    const auto generator = o.backend(manifest, entry, pair, o.pipeline);
    RigidTransformd rel;
    if (o.estimator) {
      rel = o.estimator(entry, pair, *generator, o.pipeline);
    } else {
      const auto est = estimate_pair(pair.images[0], pair.masks[0], entry.intrinsics[0], pair.images[1],
                                     pair.masks[1], entry.intrinsics[1], *generator, o.pipeline);
      rel = est.relative;
      r.timings_ms = est.diagnostics.timings_ms;
    }
    r.rot_err_deg = rotation_error_deg(entry.relative.rotation, rel.rotation);
    r.trans_err_deg = translation_angle_deg(entry.relative.translation, rel.translation);
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
    r.rot_err_deg = 180.0;
    r.trans_err_deg = 180.0;
  }
  r.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

BenchmarkReport run_benchmark(const DatasetManifest& manifest, const BenchmarkOptions& options) {
  if (manifest.entries.empty()) fail(ErrorCode::EmptyList, "manifest has no entries");
  require(bool(options.backend), "benchmark needs a backend factory");
  require(options.threads >= 1, "threads must be >= 1");
  require(options.dilation_percent >= 0, "dilation percent must be >= 0");
  options.pipeline.validate();

  BenchmarkReport report;
  report.config = to_json(options.pipeline);
  report.config["dilation_percent"] = options.dilation_percent;
  report.pairs.resize(manifest.entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < manifest.entries.size(); k = next++)
      report.pairs[k] = evaluate_entry(manifest, manifest.entries[k], options);
  };
  const int n_threads = std::min<int>(options.threads, int(manifest.entries.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::sort(report.pairs.begin(), report.pairs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::vector<double> rot, trans;
  for (const auto& p : report.pairs) {
    rot.push_back(p.rot_err_deg);
    trans.push_back(p.trans_err_deg);
  }
  report.rot15 = accuracy_at(rot, 15.0);
  report.rot30 = accuracy_at(rot, 30.0);
  report.trans15 = accuracy_at(trans, 15.0);
  report.trans30 = accuracy_at(trans, 30.0);
  return report;
}

}  // namespace xpose
