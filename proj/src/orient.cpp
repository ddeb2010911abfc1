#include "xpose/orient.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "xpose/errors.hpp"

namespace xpose {

// ---------------------------------------------------------------------------
// Search

SearchSchedule SearchSchedule::three_stage() {
  SearchSchedule s;
  s.stages = {{{-30, -10, 10, 30}, 20}, {{-14, -7, 0, 7, 14}, 7}, {{-4, -2, 0, 2, 4}, 2}};
  return s;
}

SearchSchedule SearchSchedule::three_stage(double lo, double hi) {
  require(hi > lo, "search range must be non-empty");
  SearchSchedule s = three_stage();
  s.center = 0.5 * (lo + hi);
  s.scale = (hi - lo) / 90.0;
  return s;
}

double SearchSchedule::lower() const { return center - 45.0 * scale; }
double SearchSchedule::upper() const { return center + 45.0 * scale; }

SearchResult coarse_to_fine_search(const std::function<double(double)>& score_fn,
                                   const SearchSchedule& schedule) {
  require(!schedule.stages.empty(), "search schedule has no stages");
  SearchResult result;
  const double lo = schedule.lower() - 1e-9;
  const double hi = schedule.upper() + 1e-9;
  bool have_best = false;
  auto evaluate = [&](double angle) {
    for (const auto& [a, s] : result.evaluations)
      if (std::abs(a - angle) < 1e-9) return;
    const double s = score_fn(angle);
    result.evaluations.emplace_back(angle, s);
    if (!have_best || s > result.score) {
      result.best = angle;
      result.score = s;
      have_best = true;
    }
  };
  for (std::size_t k = 0; k < schedule.stages.size(); ++k) {
    const double anchor = k == 0 ? schedule.center : result.best;
    for (double offset : schedule.stages[k].offsets) {
      const double angle = anchor + schedule.scale * offset;
      if (angle < lo || angle > hi) continue;
      evaluate(angle);
    }
  }
  require(have_best, "search schedule produced no candidate inside the range");
  return result;
}

SearchResult coarse_to_fine_angles(const std::function<double(double)>& score_fn, double max_abs_deg) {
  return coarse_to_fine_search(score_fn, SearchSchedule::three_stage(-max_abs_deg, max_abs_deg));
}

// ---------------------------------------------------------------------------
// Patch matching

namespace {

using Summed = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Integral images of a plane and its square, for O(1) window statistics.
struct PatchSearcher {
  const Plane* plane;
  Summed sum, sq;
  int half;

  PatchSearcher(const Plane& p, int patch) : plane(&p), half(patch / 2) {
    const auto h = p.rows(), w = p.cols();
    sum = Summed::Zero(h + 1, w + 1);
    sq = Summed::Zero(h + 1, w + 1);
    for (Eigen::Index i = 0; i < h; ++i) {
      double row = 0, row_sq = 0;
      for (Eigen::Index j = 0; j < w; ++j) {
        row += p(i, j);
        row_sq += double(p(i, j)) * p(i, j);
        sum(i + 1, j + 1) = sum(i, j + 1) + row;
        sq(i + 1, j + 1) = sq(i, j + 1) + row_sq;
      }
    }
  }

  bool inside(int row, int col) const {
    return row - half >= 0 && col - half >= 0 && row + half < plane->rows() && col + half < plane->cols();
  }

  double box(const Summed& s, int row, int col) const {
    const int r0 = row - half, c0 = col - half, r1 = row + half + 1, c1 = col + half + 1;
    return s(r1, c1) - s(r0, c1) - s(r1, c0) + s(r0, c0);
  }

  // Zero-mean, unit-norm template around (row, col); empty when flat.
  std::optional<Plane> normalized_template(int row, int col, double min_std) const {
    if (!inside(row, col)) return std::nullopt;
    const int n = 2 * half + 1;
    Plane t = plane->block(row - half, col - half, n, n);
    const double mean = t.mean();
    t -= float(mean);
    const double norm = std::sqrt(double(t.square().sum()));
    if (norm / n < min_std) return std::nullopt;
    t /= float(norm);
    return t;
  }

  double ncc(const Plane& tmpl, int row, int col) const {
    if (!inside(row, col)) return -2.0;
    const int n = 2 * half + 1;
    const double cnt = double(n) * n;
    const double s = box(sum, row, col);
    const double var = box(sq, row, col) - s * s / cnt;
    if (var <= 1e-6 * cnt) return -2.0;
    double dot = 0;
    for (int i = 0; i < n; ++i) {
      const float* a = &tmpl(i, 0);
      const float* b = &(*plane)(row - half + i, col - half);
      float acc = 0;
      for (int j = 0; j < n; ++j) acc += a[j] * b[j];
      dot += acc;
    }
    // The template has zero mean, so the window mean drops out of the numerator.
    return dot / std::sqrt(var);
  }

  struct Hit {
    int row = 0, col = 0;
    double score = -2.0;
  };

  Hit search(const Plane& tmpl, int row, int col, int radius, int stride) const {
    Hit best;
    const int r2 = radius * radius;
    for (int dy = -radius; dy <= radius; dy += stride) {
      for (int dx = -radius; dx <= radius; dx += stride) {
        if (dx * dx + dy * dy > r2) continue;
        const double s = ncc(tmpl, row + dy, col + dx);
        if (s > best.score) best = {row + dy, col + dx, s};
      }
    }
    if (stride > 1 && best.score > -2.0) {
      const Hit coarse = best;
      for (int dy = -stride + 1; dy < stride; ++dy) {
        for (int dx = -stride + 1; dx < stride; ++dx) {
          const double s = ncc(tmpl, coarse.row + dy, coarse.col + dx);
          if (s > best.score) best = {coarse.row + dy, coarse.col + dx, s};
        }
      }
    }
    return best;
  }
};

Plane half_resolution(const Plane& p) {
  const auto h = p.rows() / 2, w = p.cols() / 2;
  Plane out(h, w);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j)
      out(i, j) = 0.25f * (p(2 * i, 2 * j) + p(2 * i, 2 * j + 1) + p(2 * i + 1, 2 * j) + p(2 * i + 1, 2 * j + 1));
  return out;
}

// Vertex of the parabola through (-1, a), (0, b), (1, c), clamped to +-0.5.
double parabolic_offset(double a, double b, double c) {
  const double denom = a - 2 * b + c;
  if (!(denom < -1e-12)) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

}  // namespace

std::vector<Track> GridNccMatcher::find(const std::vector<Image>& views) const {
  require(views.size() >= 2, "correspondence search needs at least two views");
  const auto& o = options_;
  require(o.grid >= 1 && o.patch >= 3 && o.patch % 2 == 1, "invalid matcher options");
  const int size = views[0].width();
  for (const auto& v : views)
    require(v.width() == size && v.height() == size, "views must be square and equally sized");

  std::vector<Plane> full(views.size()), half(views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    full[k] = to_gray(views[k]);
    half[k] = half_resolution(full[k]);
  }
  std::vector<PatchSearcher> full_s, half_s;
  full_s.reserve(views.size());
  half_s.reserve(views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    full_s.emplace_back(full[k], o.patch);
    half_s.emplace_back(half[k], o.patch);
  }
  const Mask hub_mask = foreground_mask(views[0]);
  const int radius = std::max(1, int(std::lround(o.radius_px)));
  const int h = o.patch / 2;

  std::vector<Track> tracks;
  const double cell = double(size) / o.grid;
  for (int gi = 0; gi < o.grid; ++gi) {
    for (int gj = 0; gj < o.grid; ++gj) {
      const int row = int(std::floor((gi + 0.5) * cell));
      const int col = int(std::floor((gj + 0.5) * cell));
      if (!full_s[0].inside(row, col) || hub_mask(row, col) == 0) continue;
      const auto fg = (hub_mask.block(row - h, col - h, o.patch, o.patch) != 0).count();
      if (double(fg) < o.min_foreground * o.patch * o.patch) continue;
      const auto tmpl_full = full_s[0].normalized_template(row, col, o.min_patch_std);
      const int hrow = row / 2, hcol = col / 2;
      const auto tmpl_half = half_s[0].normalized_template(hrow, hcol, 0.5 * o.min_patch_std);
      if (!tmpl_full || !tmpl_half) continue;

      Track track;
      track.observations.emplace_back(0, Eigen::Vector2d(col + 0.5, row + 0.5));
      for (std::size_t k = 1; k < views.size(); ++k) {
        const auto fwd = half_s[k].search(*tmpl_half, hrow, hcol, radius, 2);
        if (fwd.score < o.min_ncc) continue;
        const auto back_tmpl = half_s[k].normalized_template(fwd.row, fwd.col, 0.0);
        if (!back_tmpl) continue;
        const auto bwd = half_s[0].search(*back_tmpl, fwd.row, fwd.col, radius, 2);
        if (std::hypot(bwd.row - hrow, bwd.col - hcol) > o.backward_tolerance_px) continue;

        const auto fine = full_s[k].search(*tmpl_full, 2 * fwd.row + (row & 1), 2 * fwd.col + (col & 1), 3, 1);
        if (fine.score < o.min_ncc) continue;
        const auto& fs = full_s[k];
        const double dx = parabolic_offset(fs.ncc(*tmpl_full, fine.row, fine.col - 1), fine.score,
                                           fs.ncc(*tmpl_full, fine.row, fine.col + 1));
        const double dy = parabolic_offset(fs.ncc(*tmpl_full, fine.row - 1, fine.col), fine.score,
                                           fs.ncc(*tmpl_full, fine.row + 1, fine.col));
        track.observations.emplace_back(int(k), Eigen::Vector2d(fine.col + 0.5 + dx, fine.row + 0.5 + dy));
      }
      if (int(track.observations.size()) >= o.min_views) tracks.push_back(std::move(track));
    }
  }
  return tracks;
}

// ---------------------------------------------------------------------------
// Triangulation

Eigen::Vector3d triangulate_dlt(const std::vector<Eigen::Matrix<double, 3, 4>>& projections,
                                const std::vector<Eigen::Vector2d>& pixels) {
  require(projections.size() == pixels.size() && projections.size() >= 2,
          "triangulation needs matching projections and pixels (at least two)");
  Eigen::Matrix4d normal = Eigen::Matrix4d::Zero();
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    const auto& P = projections[k];
    Eigen::Matrix<double, 2, 4> rows;
    rows.row(0) = pixels[k].x() * P.row(2) - P.row(0);
    rows.row(1) = pixels[k].y() * P.row(2) - P.row(1);
    for (int r = 0; r < 2; ++r) {
      const double n = rows.row(r).norm();
      if (n > 0) rows.row(r) /= n;
    }
    normal += rows.transpose() * rows;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal);
  const Eigen::Vector4d X = eig.eigenvectors().col(0);
  if (std::abs(X.w()) < 1e-15) return Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN());
  return X.head<3>() / X.w();
}

// ---------------------------------------------------------------------------
// Consistency

ConsistencyEvaluator::ConsistencyEvaluator(const Image& image, const CameraIntrinsicsd& K_v,
                                           const Generator& generator, const ConsistencyConfig& config)
    : K_v_(K_v) {
  require(K_v.valid(), "invalid virtual intrinsics");
  require(config.nearby_delta_deg > 0, "nearby delta must be positive");
  const double d = config.nearby_delta_deg;
  deltas_ = {{0, 0}, {d, 0}, {-d, 0}, {0, d}, {0, -d}};
  tau_px_ = config.tau_px_at_256 * double(K_v.width) / 256.0;
  distance_ = distance_for_inscribed_sphere(K_v);

  ViewRequest request{image, deltas_, config.steps, config.seed};
  const auto views = generator.generate(request);
  if (views.size() != deltas_.size())
    throw Error(GeneratorFailureKind::CountMismatch, "generator returned an unexpected number of views");
  static const GridNccMatcher default_matcher;
  const CorrespondenceFinder& matcher = config.matcher ? *config.matcher : default_matcher;
  set_tracks(matcher.find(views));
}

void ConsistencyEvaluator::set_tracks(std::vector<Track> tracks) {
  tracks_ = std::move(tracks);
  insufficient_ = int(tracks_.size()) < kMinCorrespondences;
}

ConsistencyEvaluator::Score ConsistencyEvaluator::score_elevation(double elevation_deg) const {
  Score score;
  if (insufficient_) return score;
  std::vector<Eigen::Matrix<double, 3, 4>> P(deltas_.size());
  std::vector<RigidTransformd> poses(deltas_.size());
  for (std::size_t k = 0; k < deltas_.size(); ++k) {
    const SphericalViewpointd vp{deltas_[k].d_azimuth_deg, elevation_deg + deltas_[k].d_elevation_deg, 0.0,
                                 distance_};
    poses[k] = viewpoint_to_pose(vp);
    Eigen::Matrix<double, 3, 4> Rt;
    Rt << poses[k].rotation, poses[k].translation;
    P[k] = K_v_.matrix() * Rt;
  }
  double error_sum = 0, soft = 0;
  std::vector<Eigen::Matrix<double, 3, 4>> proj;
  std::vector<Eigen::Vector2d> px;
  for (const auto& track : tracks_) {
    proj.clear();
    px.clear();
    for (const auto& [view, pixel] : track.observations) {
      proj.push_back(P[view]);
      px.push_back(pixel);
    }
    if (proj.size() < 2) continue;
    const Eigen::Vector3d X = triangulate_dlt(proj, px);
    if (!X.allFinite()) continue;
    double worst = 0;
    bool in_front = true;
    for (const auto& [view, pixel] : track.observations) {
      const Eigen::Vector3d c = poses[view] * X;
      if (c.z() <= 0) {
        in_front = false;
        break;
      }
      const Eigen::Vector3d q = P[view] * X.homogeneous();
      worst = std::max(worst, (q.head<2>() / q.z() - pixel).norm());
    }
    if (in_front && worst < tau_px_) {
      ++score.inliers;
      error_sum += worst;
      soft += 1.0 - (worst / tau_px_) * (worst / tau_px_);
    }
  }
  if (score.inliers > 0) score.mean_error_px = error_sum / score.inliers;
  score.value = soft / double(tracks_.size());
  return score;
}

ConsistencyResult consistency_score(const Image& image, const CameraIntrinsicsd& K_v,
                                    const std::vector<double>& elevation_candidates,
                                    const Generator& generator, const ConsistencyConfig& config) {
  require(!elevation_candidates.empty(), "elevation candidate list is empty");
  const ConsistencyEvaluator evaluator(image, K_v, generator, config);
  ConsistencyResult result;
  result.best_elevation_deg = elevation_candidates.front();
  if (evaluator.insufficient()) {
    result.insufficient_correspondences = true;
    return result;
  }
  bool first = true;
  for (double e : elevation_candidates) {
    const auto s = evaluator.score_elevation(e);
    if (first || s.value > result.score) {
      result.best_elevation_deg = e;
      result.score = s.value;
      result.inliers = s.inliers;
      first = false;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Orientation

OrientationResult estimate_orientation(const Image& image, const CameraIntrinsicsd& K_v,
                                       const Generator& generator, const OrientationConfig& config) {
  require(!image.empty() && image.width() == image.height(), "orientation expects a square image");
  struct Candidate {
    double elevation = 0;
    bool insufficient = false;
  };
  std::vector<std::pair<double, Candidate>> seen;

  auto score_inplane = [&](double a) {
    const Image rotated = rotate_inplane(image, -a);
    const ConsistencyEvaluator evaluator(rotated, K_v, generator, config.consistency);
    Candidate c;
    double value = 0;
    if (evaluator.insufficient()) {
      c.insufficient = true;
      c.elevation = config.elevation.center;
    } else {
      const auto el = coarse_to_fine_search(
          [&](double e) { return evaluator.score_elevation(e).value; }, config.elevation);
      c.elevation = el.best;
      value = el.score;
    }
    seen.emplace_back(a, c);
    return value;
  };

  const auto search = coarse_to_fine_search(score_inplane, config.inplane);
  OrientationResult result;
  result.inplane_evaluations = search.evaluations;
  result.hypothesis.inplane_deg = search.best;
  result.hypothesis.score = search.score;
  for (const auto& [a, c] : seen) {
    if (a == search.best) {
      result.hypothesis.elevation_deg = c.elevation;
      result.insufficient_correspondences = c.insufficient;
    }
  }
  result.rectified = rotate_inplane(image, -search.best);
  return result;
}

}  // namespace xpose
