#include "xpose/match.hpp"

#include <chrono>
#include <cmath>

#include "xpose/errors.hpp"

namespace xpose {

PreparedView prepare_view(const Image& image, const Mask& mask, int size, double zoom) {
  require(!image.empty() && image.width() == image.height(), "scored images must be square");
  require(size >= 1, "score resolution must be positive");
  require(zoom > 0, "crop zoom must be positive");
  const Mask full = mask.size() == 0 ? Mask::Constant(image.height(), image.width(), kMaskOn) : mask;
  const auto roi = square_roi_from_mask(full);
  // Crop at 4x the score resolution, then box-filter down.
  const int crop = 4 * size;
  const double k = (roi ? crop / roi->size : double(crop) / image.width()) / zoom;
  const Eigen::Vector2d c = roi ? roi->center : Eigen::Vector2d(image.width() / 2.0, image.height() / 2.0);
  Eigen::Matrix3d H;
  H << k, 0, crop / 2.0 - k * c.x(), 0, k, crop / 2.0 - k * c.y(), 0, 0, 1;
  const auto warped = warp_image(image, full, Homographyd{H}, crop);
  PreparedView view;
  view.gray = resample_square(to_gray(warped.image), size);
  for (int ch = 0; ch < 3; ++ch) view.color[ch] = resample_square(warped.image.channels[ch], size);
  view.mask = resample_square(warped.mask, size);
  return view;
}

PreparedView prepare_rotated(const Image& image, const Mask& mask, double angle_deg, int size, double zoom) {
  if (angle_deg == 0.0) return prepare_view(image, mask, size, zoom);
  const Mask full = mask.size() == 0 ? Mask::Constant(image.height(), image.width(), kMaskOn) : mask;
  return prepare_view(rotate_inplane(image, angle_deg), rotate_inplane(full, angle_deg), size, zoom);
}

double NccScorer::score(const PreparedView& query, const PreparedView& candidate) const {
  const Mask region = (query.mask != 0 || candidate.mask != 0).select(Mask::Constant(query.mask.rows(), query.mask.cols(), kMaskOn),
                                                                      Mask::Zero(query.mask.rows(), query.mask.cols()));
  return zero_mean_ncc(query.gray, candidate.gray, region);
}

double ColorNccScorer::score(const PreparedView& query, const PreparedView& candidate) const {
  const auto n_px = query.mask.size();
  double cov = 0, va = 0, vb = 0;
  for (int c = 0; c < 3; ++c) {
    double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    const float* a = query.color[c].data();
    const float* b = candidate.color[c].data();
    for (Eigen::Index k = 0; k < n_px; ++k) {
      if (query.mask.data()[k] == 0 && candidate.mask.data()[k] == 0) continue;
      n += 1;
      sa += a[k];
      sb += b[k];
      saa += double(a[k]) * a[k];
      sbb += double(b[k]) * b[k];
      sab += double(a[k]) * b[k];
    }
    if (n < 2) return 0.0;
    cov += sab - sa * sb / n;
    va += saa - sa * sa / n;
    vb += sbb - sb * sb / n;
  }
  const double eps = 1e-9 * double(n_px);
  if (va <= eps || vb <= eps) return 0.0;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double score_pair(const Image& query, const Mask& query_mask, const Image& candidate, const Mask& candidate_mask) {
  return NccScorer().score(prepare_view(query, query_mask), prepare_view(candidate, candidate_mask));
}

namespace {

std::vector<PreparedView> prepare_set(const GeneratedViewSet& refset, int size) {
  std::vector<PreparedView> out;
  out.reserve(refset.size());
  for (std::size_t k = 0; k < refset.size(); ++k) out.push_back(prepare_view(refset.images[k], refset.masks[k], size));
  return out;
}

MatchScore argmax(const PreparedView& query, const std::vector<PreparedView>& refs, const PairScorer& scorer) {
  MatchScore best;
  best.scores.reserve(refs.size());
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const double s = scorer.score(query, refs[k]);
    best.scores.push_back(s);
    if (k == 0 || s > best.score) {
      best.index = k;
      best.score = s;
    }
  }
  return best;
}

}  // namespace

MatchScore select_viewpoint(const Image& query, const Mask& query_mask, const GeneratedViewSet& refset,
                            const PairScorer& scorer) {
  require(!refset.empty(), "reference set is empty");
  return argmax(prepare_view(query, query_mask), prepare_set(refset, kScoreResolution), scorer);
}

MatchScore select_viewpoint_inplane(const Image& query, const Mask& query_mask, const GeneratedViewSet& refset,
                                    double max_inplane_deg, double step_deg, const PairScorer& scorer,
                                    const std::vector<double>& zooms) {
  require(!refset.empty(), "reference set is empty");
  require(max_inplane_deg >= 0 && step_deg > 0, "invalid in-plane search range");
  require(!zooms.empty(), "need at least one query zoom");
  const auto refs = prepare_set(refset, kScoreResolution);
  // Enumerate 0 first so that ties keep the unrotated query.
  std::vector<double> angles{0.0};
  for (double a = step_deg; a <= max_inplane_deg + 1e-9; a += step_deg) {
    angles.push_back(-a);
    angles.push_back(a);
  }
  MatchScore best;
  bool first = true;
  for (double rho : angles) {
    for (double zoom : zooms) {
      auto m = argmax(prepare_rotated(query, query_mask, -rho, kScoreResolution, zoom), refs, scorer);
      if (first || m.score > best.score) {
        best = std::move(m);
        best.inplane_deg = rho;
        best.zoom = zoom;
        first = false;
      }
    }
  }
  return best;
}

RefineResult refine_viewpoint(const Image& query, const Mask& query_mask, const SphericalViewpointd& coarse,
                              const RefineContext& context, int iters, const PairScorer& scorer) {
  require(iters >= 0, "refine iterations must be >= 0");
  RefineResult result;
  result.viewpoint = coarse;
  if (iters == 0) return result;
  require(context.generator != nullptr && context.source != nullptr, "refinement needs a generator and a source");
  for (int i = 0; i < iters; ++i) {
    const double delta = 10.0 / std::pow(2.0, i);
    const SphericalViewpointd center = result.viewpoint;
    // Grid order puts (0, 0) first so the center wins ties.
    std::vector<std::pair<double, double>> offsets{{0, 0}};
    for (double da : {-delta, 0.0, delta})
      for (double de : {-delta, 0.0, delta})
        if (da != 0 || de != 0) offsets.emplace_back(da, de);
    std::vector<SphericalViewpointd> vps;
    std::vector<ViewDelta> deltas;
    for (const auto& [da, de] : offsets) {
      SphericalViewpointd vp = center;
      vp.azimuth_deg = wrap_deg_360(center.azimuth_deg + da);
      vp.elevation_deg = std::clamp(center.elevation_deg + de, -89.0, 89.0);
      vps.push_back(vp);
      deltas.push_back(delta_view(context.source_viewpoint, vp));
    }
    const auto images = context.generator->generate({*context.source, deltas, context.steps, context.seed});
    if (images.size() != deltas.size())
      throw Error(GeneratorFailureKind::CountMismatch, "generator returned a wrong number of refinement views");
    std::vector<PreparedView> cands;
    for (const auto& img : images) cands.push_back(prepare_view(img, foreground_mask(img)));

    SphericalViewpointd best_vp = center;
    double best = 0;
    bool first = true;
    for (double dr : {0.0, -delta, delta}) {
      const PreparedView q =
          prepare_rotated(query, query_mask, -(center.inplane_deg + dr), kScoreResolution, context.query_zoom);
      for (std::size_t k = 0; k < cands.size(); ++k) {
        const double s = scorer.score(q, cands[k]);
        if (first || s > best) {
          best = s;
          best_vp = vps[k];
          best_vp.inplane_deg = center.inplane_deg + dr;
          first = false;
        }
      }
    }
    result.viewpoint = best_vp;
    result.score = best;
    result.history.push_back(best);
  }
  return result;
}

// ---------------------------------------------------------------------------

void PipelineConfig::validate() const {
  require(s_v >= 16, "s_v must be >= 16");
  require(n_views >= 1, "n_views must be >= 1");
  require(steps_orient >= 1 && steps_generate >= 1, "diffusion steps must be >= 1");
  require(refine_iters >= 0, "refine_iters must be >= 0");
  require(select_inplane_max_deg >= 0 && select_inplane_step_deg > 0, "invalid selection in-plane range");
  require(!select_query_zooms.empty(), "select_query_zooms must not be empty");
  for (double z : select_query_zooms) require(z > 0, "query zooms must be positive");
  make_scorer(scorer);
}

std::unique_ptr<PairScorer> make_scorer(const std::string& name) {
  if (name == "ncc") return std::make_unique<NccScorer>();
  if (name == "ncc-rgb") return std::make_unique<ColorNccScorer>();
  throw Error(ErrorCode::InvalidArgument, "unknown scorer '" + name + "'");
}

namespace {

struct VirtualView {
  SquareRoid roi;
  RigidTransformd look_at;
  CameraIntrinsicsd K_v;
  WarpResult warped;
};

VirtualView to_object_centric(const Image& image, const Mask& mask, const CameraIntrinsicsd& K, int s_v) {
  require(K.valid(), "invalid camera intrinsics");
  require(mask.rows() == image.height() && mask.cols() == image.width(), "mask size must match the image");
  const auto roi = square_roi_from_mask(mask);
  if (!roi) fail(ErrorCode::EmptyMask, "mask has no foreground pixels");
  VirtualView v;
  v.roi = *roi;
  v.look_at = look_at_rotation(roi->center, K);
  v.K_v = virtual_intrinsics(K, *roi, s_v);
  v.warped = warp_image(image, mask, object_centric_homography(K, v.K_v, v.look_at.rotation), s_v);
  return v;
}

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& out) : out_(out) {}
  void mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    out_[stage] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }

 private:
  std::map<std::string, double>& out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

PairEstimate estimate_pair(const Image& image1, const Mask& mask1, const CameraIntrinsicsd& K1,
                           const Image& image2, const Mask& mask2, const CameraIntrinsicsd& K2,
                           const Generator& generator, const PipelineConfig& config) {
  config.validate();
  const auto scorer = make_scorer(config.scorer);
  PairEstimate out;
  auto& diag = out.diagnostics;
  StageTimer timer(diag.timings_ms);

  const VirtualView v1 = to_object_centric(image1, mask1, K1, config.s_v);
  const VirtualView v2 = to_object_centric(image2, mask2, K2, config.s_v);
  diag.roi1 = v1.roi;
  diag.roi2 = v2.roi;
  diag.K_v1 = v1.K_v;
  diag.K_v2 = v2.K_v;
  timer.mark("object_centric");

  OrientationConfig ocfg;
  ocfg.consistency.steps = config.steps_orient;
  ocfg.consistency.seed = config.seed;
  const auto orientation = estimate_orientation(v1.warped.image, v1.K_v, generator, ocfg);
  diag.orientation = orientation.hypothesis;
  diag.insufficient_correspondences = orientation.insufficient_correspondences;
  timer.mark("orientation");

  ReferenceSetOptions ropts;
  ropts.n_views = config.n_views;
  ropts.steps = config.steps_generate;
  ropts.seed = config.seed;
  const auto refset = build_reference_set(orientation.rectified, orientation.hypothesis, v1.K_v, generator, ropts);
  timer.mark("generation");

  const auto selected = select_viewpoint_inplane(v2.warped.image, v2.warped.mask, refset, config.select_inplane_max_deg,
                                                 config.select_inplane_step_deg, *scorer, config.select_query_zooms);
  diag.selected_index = selected.index;
  diag.selected_score = selected.score;
  diag.selected_zoom = selected.zoom;
  SphericalViewpointd coarse = refset.viewpoints[selected.index];
  coarse.inplane_deg = selected.inplane_deg;
  diag.coarse_viewpoint = coarse;
  timer.mark("selection");

  const SphericalViewpointd source_vp = refset.viewpoints.back();
  const RefineContext ctx{&generator, &orientation.rectified,
                          {0.0, orientation.hypothesis.elevation_deg, 0.0, source_vp.distance},
                          config.steps_generate, config.seed, selected.zoom};
  const auto refined = refine_viewpoint(v2.warped.image, v2.warped.mask, coarse, ctx, config.refine_iters, *scorer);
  diag.refined_viewpoint = refined.viewpoint;
  diag.refined_score = config.refine_iters > 0 ? refined.score : selected.score;
  diag.refine_history = refined.history;
  timer.mark("refinement");

  const double d1 = distance_for_inscribed_sphere(v1.K_v);
  const double d2 = distance_for_inscribed_sphere(v2.K_v);
  const auto pose1 = viewpoint_to_pose(SphericalViewpointd{0.0, orientation.hypothesis.elevation_deg,
                                                           orientation.hypothesis.inplane_deg, d1});
  SphericalViewpointd vp2 = refined.viewpoint;
  vp2.distance = d2;
  const auto pose2 = viewpoint_to_pose(vp2);
  const auto rel_v = compose_object_to_relative(pose1, pose2);
  out.relative = lift_relative_to_input_cameras(rel_v, v1.look_at.rotation, v2.look_at.rotation);
  timer.mark("composition");
  return out;
}

}  // namespace xpose
