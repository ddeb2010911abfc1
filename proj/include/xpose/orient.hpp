#ifndef XPOSE_ORIENT_HPP
#define XPOSE_ORIENT_HPP

#include <functional>
#include <memory>
#include <vector>

#include "xpose/generator.hpp"
#include "xpose/geom.hpp"
#include "xpose/image.hpp"

namespace xpose {

// ---------------------------------------------------------------------------
// Coarse-to-fine 1D search

struct SearchStage {
  std::vector<double> offsets;  // absolute for the first stage, relative to the running best after
  double interval = 0;
};

/// Three-stage enumeration: {-30, -10, 10, 30}, then the best x plus
/// {x-14, x-7, x, x+7, x+14}, then the best y plus {y-4, y-2, y, y+2, y+4}.
/// `center` and `scale` map the schedule onto other ranges.
struct SearchSchedule {
  std::vector<SearchStage> stages;
  double center = 0;
  double scale = 1;

  static SearchSchedule three_stage();
  /// three_stage() mapped onto [lo, hi] (the default covers +-45).
  static SearchSchedule three_stage(double lo, double hi);
  double lower() const;
  double upper() const;
};

struct SearchResult {
  double best = 0;
  double score = 0;
  std::vector<std::pair<double, double>> evaluations;  // (angle, score) in evaluation order
};

/// Maximizes score_fn with the schedule. Candidates outside
/// [center - 45 scale, center + 45 scale] are skipped, repeated candidates
/// are evaluated once, and ties keep the first-enumerated candidate.
SearchResult coarse_to_fine_search(const std::function<double(double)>& score_fn,
                                   const SearchSchedule& schedule);

/// Inplane form: the default schedule over [-max_abs_deg, max_abs_deg].
SearchResult coarse_to_fine_angles(const std::function<double(double)>& score_fn,
                                   double max_abs_deg = 45.0);

// ---------------------------------------------------------------------------
// Correspondences and triangulation

/// One 3D point observed in several views: (view index, pixel) pairs in
/// continuous pixel coordinates.
struct Track {
  std::vector<std::pair<int, Eigen::Vector2d>> observations;
};

class CorrespondenceFinder {
 public:
  virtual ~CorrespondenceFinder() = default;
  /// Tracks anchored on views[0].
  virtual std::vector<Track> find(const std::vector<Image>& views) const = 0;
};

struct GridNccOptions {
  int grid = 16;              // grid points per side on the hub view
  int patch = 15;             // patch side (pixels)
  double radius_px = 24.0;    // search radius at half resolution (doubles at full resolution)
  double min_ncc = 0.8;
  double min_patch_std = 3.0;
  double min_foreground = 0.6;  // fraction of the hub patch on the object
  double backward_tolerance_px = 1.5;
  int min_views = 3;          // hub included
};

/// Hub-anchored patch matcher: grid-sampled patches on views[0] are matched
/// into every other view by best NCC (coarse search at half resolution,
/// forward-backward checked, refined to subpixel at full resolution).
class GridNccMatcher final : public CorrespondenceFinder {
 public:
  explicit GridNccMatcher(GridNccOptions options = {}) : options_(options) {}
  std::vector<Track> find(const std::vector<Image>& views) const override;
  const GridNccOptions& options() const { return options_; }

 private:
  GridNccOptions options_;
};

/// Linear (DLT) triangulation from two or more 3x4 projection matrices.
Eigen::Vector3d triangulate_dlt(const std::vector<Eigen::Matrix<double, 3, 4>>& projections,
                                const std::vector<Eigen::Vector2d>& pixels);

// ---------------------------------------------------------------------------
// Consistency score

struct ConsistencyConfig {
  double nearby_delta_deg = 10.0;
  int steps = 75;
  std::uint64_t seed = 0;
  double tau_px_at_256 = 3.0;
  std::shared_ptr<const CorrespondenceFinder> matcher;  // GridNccMatcher when null
};

/// Generated nearby views of one image and their correspondences; scores
/// elevation hypotheses by triangulation consistency.
class ConsistencyEvaluator {
 public:
  ConsistencyEvaluator(const Image& image, const CameraIntrinsicsd& K_v, const Generator& generator,
                       const ConsistencyConfig& config);

  struct Score {
    int inliers = 0;           // tracks with max reprojection error < tau
    double mean_error_px = 0;  // over inliers
    /// Soft inlier fraction: mean over tracks of max(0, 1 - (err / tau)^2).
    double value = 0;
  };

  Score score_elevation(double elevation_deg) const;

  bool insufficient() const { return insufficient_; }
  const std::vector<Track>& tracks() const { return tracks_; }
  void set_tracks(std::vector<Track> tracks);
  const std::vector<ViewDelta>& deltas() const { return deltas_; }
  double tau_px() const { return tau_px_; }

 private:
  CameraIntrinsicsd K_v_;
  std::vector<ViewDelta> deltas_;
  std::vector<Track> tracks_;
  double tau_px_ = 3.0;
  double distance_ = 2.0;
  bool insufficient_ = false;
};

inline constexpr int kMinCorrespondences = 8;

struct ConsistencyResult {
  double best_elevation_deg = 0;
  double score = 0;
  int inliers = 0;
  bool insufficient_correspondences = false;
};

/// Best elevation among the candidates by Score::value (first listed wins
/// ties); `inliers` is the hard count at that elevation. Score 0 and
/// the warning flag when fewer than kMinCorrespondences tracks are found.
ConsistencyResult consistency_score(const Image& image, const CameraIntrinsicsd& K_v,
                                    const std::vector<double>& elevation_candidates,
                                    const Generator& generator, const ConsistencyConfig& config);

// ---------------------------------------------------------------------------
// Orientation estimation

struct OrientationHypothesis {
  double inplane_deg = 0;
  double elevation_deg = 0;
  double score = 0;
};

struct OrientationConfig {
  ConsistencyConfig consistency;
  SearchSchedule inplane = SearchSchedule::three_stage(-45.0, 45.0);
  SearchSchedule elevation = SearchSchedule::three_stage(-10.0, 80.0);
};

struct OrientationResult {
  OrientationHypothesis hypothesis;
  Image rectified;
  bool insufficient_correspondences = false;
  std::vector<std::pair<double, double>> inplane_evaluations;
};

/// Joint in-plane / elevation estimate of an object-centric image: each
/// in-plane candidate a is scored by the elevation search on the image
/// rotated by -a. Returns the image rectified by the winning angle.
OrientationResult estimate_orientation(const Image& image, const CameraIntrinsicsd& K_v,
                                       const Generator& generator, const OrientationConfig& config = {});

}  // namespace xpose

#endif  // XPOSE_ORIENT_HPP
