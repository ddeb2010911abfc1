#ifndef XPOSE_EVAL_HPP
#define XPOSE_EVAL_HPP

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xpose/generator.hpp"
#include "xpose/match.hpp"
#include "xpose/protocol.hpp"
#include "xpose/synth.hpp"

namespace xpose {

/// Axis-angle magnitude of R_gt^T R_pr, in [0, 180].
double rotation_error_deg(const Eigen::Matrix3d& R_gt, const Eigen::Matrix3d& R_pr);

/// Angle between the translation directions; ZeroTranslation for |t| < 1e-12.
double translation_angle_deg(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_pr);

/// Fraction of errors strictly below the threshold. EmptyList on no errors.
double accuracy_at(const std::vector<double>& errors, double threshold_deg);

/// Dilation by a disk of radius round(percent / 100 * s), s = longest mask
/// bbox side. Percent 0 (or an empty mask) returns the mask unchanged.
Mask dilate_mask(const Mask& mask, double percent);

struct PairResult {
  std::string id;
  double rot_err_deg = 180.0;
  double trans_err_deg = 180.0;
  double time_ms = 0;
  bool failed = false;
  std::string error;
  std::map<std::string, double> timings_ms;
};

struct BenchmarkReport {
  nlohmann::json config;
  std::vector<PairResult> pairs;  // sorted by id
  double rot15 = 0, rot30 = 0, trans15 = 0, trans30 = 0;

  nlohmann::json to_json() const;
};

/// Creates the generator for one pair. `masks` are the masks the pipeline
/// will see (after dilation), so oracle backends can frame their source.
using BackendFactory = std::function<GeneratorPtr(const DatasetManifest&, const DatasetEntry&,
                                                  const LoadedPair& pair, const PipelineConfig&)>;

/// Replaces estimate_pair (tests and stubs); returns x_c2 = R x_c1 + t.
using PairEstimator = std::function<RigidTransformd(const DatasetEntry&, const LoadedPair&, const Generator&,
                                                    const PipelineConfig&)>;

struct BenchmarkOptions {
  PipelineConfig pipeline;
  double dilation_percent = 0;
  int threads = 1;
  BackendFactory backend;   // required
  PairEstimator estimator;  // estimate_pair when empty
};

/// Backends by name: "oracle" (renders the pair's asset, framed by the first
/// view's object-centric camera), "mock", or "remote" (needs an endpoint).
BackendFactory make_backend_factory(const std::string& name, const std::string& endpoint = {},
                                    const RemoteOptions& remote = {});

/// Runs the pipeline over every entry. Per-pair failures are recorded with
/// 180 deg errors instead of aborting. EmptyList for an empty manifest.
BenchmarkReport run_benchmark(const DatasetManifest& manifest, const BenchmarkOptions& options);

nlohmann::json to_json(const PipelineConfig& config);
void write_report(const BenchmarkReport& report, const std::filesystem::path& path);

}  // namespace xpose

#endif  // XPOSE_EVAL_HPP
