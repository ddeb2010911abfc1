#ifndef XPOSE_MATCH_HPP
#define XPOSE_MATCH_HPP

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "xpose/generator.hpp"
#include "xpose/geom.hpp"
#include "xpose/image.hpp"
#include "xpose/orient.hpp"
#include "xpose/viewgen.hpp"

namespace xpose {

// ---------------------------------------------------------------------------
// Scoring

inline constexpr int kScoreResolution = 64;

/// Grayscale and mask resampled to the scorer resolution.
struct PreparedView {
  Plane gray;
  std::array<Plane, 3> color;
  Mask mask;
};

/// Crops the image to the tight square ROI of its mask (the framing of an
/// object-centric input) and resamples to size x size. An empty mask keeps
/// the full frame. zoom < 1 shrinks the crop about the ROI center, for
/// masks looser than the object.
PreparedView prepare_view(const Image& image, const Mask& mask, int size = kScoreResolution, double zoom = 1.0);
/// prepare_view of the image rotated in-plane by angle_deg (camera roll),
/// re-cropped to the rotated mask.
PreparedView prepare_rotated(const Image& image, const Mask& mask, double angle_deg, int size = kScoreResolution,
                             double zoom = 1.0);

/// Similarity of a query and a candidate view, higher is better.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double score(const PreparedView& query, const PreparedView& candidate) const = 0;
  virtual std::string name() const = 0;
};

/// Zero-mean NCC over the union of both masks, in [-1, 1].
class NccScorer final : public PairScorer {
 public:
  double score(const PreparedView& query, const PreparedView& candidate) const override;
  std::string name() const override { return "ncc"; }
};

/// NCC over the union of both masks with the RGB channels stacked (each
/// channel centered on its own mean), in [-1, 1].
class ColorNccScorer final : public PairScorer {
 public:
  double score(const PreparedView& query, const PreparedView& candidate) const override;
  std::string name() const override { return "ncc-rgb"; }
};

/// Baseline scorer on raw images: both resampled to 64x64 grayscale, NCC
/// over the union of masks; 0 for constant images.
double score_pair(const Image& query, const Mask& query_mask, const Image& candidate, const Mask& candidate_mask);

// ---------------------------------------------------------------------------
// Selection and refinement

struct MatchScore {
  std::size_t index = 0;
  double score = 0;
  double inplane_deg = 0;      // roll of the query relative to the selected view
  double zoom = 1.0;           // query crop scale of the winning match
  std::vector<double> scores;  // per member, at the winning in-plane angle
};

/// Argmax of the scorer over the set; ties go to the lowest index.
MatchScore select_viewpoint(const Image& query, const Mask& query_mask, const GeneratedViewSet& refset,
                            const PairScorer& scorer = NccScorer());

/// select_viewpoint over query roll candidates -max..max in `step` degrees
/// and query crop scales `zooms`: the query is un-rolled and re-cropped by
/// each candidate before scoring. Roll 0 and the first zoom win ties.
MatchScore select_viewpoint_inplane(const Image& query, const Mask& query_mask, const GeneratedViewSet& refset,
                                    double max_inplane_deg = 60.0, double step_deg = 10.0,
                                    const PairScorer& scorer = NccScorer(),
                                    const std::vector<double>& zooms = {1.0});

/// What refinement needs to render candidates: the generator, the image it
/// was conditioned on and that image's canonical viewpoint.
struct RefineContext {
  const Generator* generator = nullptr;
  const Image* source = nullptr;
  SphericalViewpointd source_viewpoint;
  int steps = 50;
  std::uint64_t seed = 0;
  double query_zoom = 1.0;  // query crop scale (MatchScore::zoom)
};

struct RefineResult {
  SphericalViewpointd viewpoint;
  double score = 0;
  std::vector<double> history;  // best score after each iteration
};

/// Render-and-score local search: iteration i scores the 3x3x3 grid of
/// (d_az, d_el, d_inplane) in {-delta_i, 0, +delta_i} with delta_i = 10 / 2^i
/// around the current estimate and moves to the best (the center wins ties).
/// In-plane offsets are applied by rotating the query, so each iteration
/// requests 9 views.
RefineResult refine_viewpoint(const Image& query, const Mask& query_mask, const SphericalViewpointd& coarse,
                              const RefineContext& context, int iters, const PairScorer& scorer = NccScorer());

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineConfig {
  int s_v = 256;
  int n_views = 128;
  int steps_orient = 75;
  int steps_generate = 50;
  int refine_iters = 3;
  std::uint64_t seed = 0;
  std::string scorer = "ncc-rgb";
  std::string backend = "oracle";
  double select_inplane_max_deg = 60.0;
  double select_inplane_step_deg = 10.0;
  /// Query crop scales tried during selection; absorbs masks looser than the object.
  std::vector<double> select_query_zooms = {1.0, 0.95, 0.9, 0.85, 0.8};

  void validate() const;
};

struct PairDiagnostics {
  OrientationHypothesis orientation;
  bool insufficient_correspondences = false;
  SquareRoid roi1, roi2;
  CameraIntrinsicsd K_v1, K_v2;
  std::size_t selected_index = 0;
  double selected_score = 0;
  double selected_zoom = 1.0;
  SphericalViewpointd coarse_viewpoint;
  SphericalViewpointd refined_viewpoint;
  double refined_score = 0;
  std::vector<double> refine_history;
  std::map<std::string, double> timings_ms;  // per stage
};

struct PairEstimate {
  RigidTransformd relative;  // x_c2 = R x_c1 + t, translation at object scale
  PairDiagnostics diagnostics;
};

std::unique_ptr<PairScorer> make_scorer(const std::string& name);

/// Relative pose of two views of one object from their masks and intrinsics.
PairEstimate estimate_pair(const Image& image1, const Mask& mask1, const CameraIntrinsicsd& K1,
                           const Image& image2, const Mask& mask2, const CameraIntrinsicsd& K2,
                           const Generator& generator, const PipelineConfig& config = {});

}  // namespace xpose

#endif  // XPOSE_MATCH_HPP
