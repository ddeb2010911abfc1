// xpose command-line entry point. stdout carries JSON only; logs go to stderr.
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <csignal>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xpose/config.hpp"
#include "xpose/errors.hpp"
#include "xpose/eval.hpp"
#include "xpose/graph.hpp"
#include "xpose/match.hpp"
#include "xpose/protocol.hpp"
#include "xpose/synth.hpp"

namespace {

using nlohmann::json;
using namespace xpose;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

json error_json(const std::exception& e) {
  json j{{"error", e.what()}};
  if (const auto* x = dynamic_cast<const Error*>(&e)) {
    j["code"] = std::string(to_string(x->code()));
    if (x->code() == ErrorCode::GeneratorFailure) j["generator_failure"] = std::string(to_string(x->generator_kind()));
  }
  return j;
}

json pose_json(const RigidTransformd& T) {
  Eigen::Quaterniond q(T.rotation);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  json R = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R.push_back(T.rotation(r, c));
  const double n = T.translation.norm();
  const Eigen::Vector3d dir = n > 0 ? Eigen::Vector3d(T.translation / n) : Eigen::Vector3d::Zero();
  return {{"rotation_quat_xyzw", {q.x(), q.y(), q.z(), q.w()}},
          {"rotation_matrix", R},
          {"translation", {T.translation.x(), T.translation.y(), T.translation.z()}},
          {"translation_dir", {dir.x(), dir.y(), dir.z()}}};
}

json viewpoint_json(const SphericalViewpointd& v) {
  return {{"azimuth_deg", v.azimuth_deg}, {"elevation_deg", v.elevation_deg}, {"inplane_deg", v.inplane_deg},
          {"distance", v.distance}};
}

// Pipeline flags shared by estimate and eval; applied over the config file.
struct PipelineFlags {
  std::string config_path;
  std::string backend;
  std::string endpoint;
  std::optional<int> n_views, refine_iters, s_v, steps_orient, steps_generate, threads;
  std::optional<std::uint64_t> seed;
  std::string scorer;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--backend", backend, "Generator backend")->check(CLI::IsMember({"oracle", "mock", "remote"}));
    cmd->add_option("--endpoint", endpoint, "Generator service endpoint (remote backend)");
    cmd->add_option("--n-views", n_views, "Reference views to generate")->check(CLI::PositiveNumber);
    cmd->add_option("--refine-iters", refine_iters, "Refinement iterations")->check(CLI::NonNegativeNumber);
    cmd->add_option("--s-v", s_v, "Object-centric image size")->check(CLI::Range(16, 4096));
    cmd->add_option("--steps-orient", steps_orient, "Diffusion steps for orientation views")->check(CLI::PositiveNumber);
    cmd->add_option("--steps-generate", steps_generate, "Diffusion steps for reference views")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Seed");
    cmd->add_option("--scorer", scorer, "Pair scorer")->check(CLI::IsMember({"ncc", "ncc-rgb"}));
  }

  Config resolve() const {
    Config c;
    try {
      if (!config_path.empty()) c = load_config(config_path, c);
      if (!backend.empty()) c.pipeline.backend = backend;
      if (!endpoint.empty()) c.generator.endpoint = endpoint;
      if (n_views) c.pipeline.n_views = *n_views;
      if (refine_iters) c.pipeline.refine_iters = *refine_iters;
      if (s_v) c.pipeline.s_v = *s_v;
      if (steps_orient) c.pipeline.steps_orient = *steps_orient;
      if (steps_generate) c.pipeline.steps_generate = *steps_generate;
      if (threads) c.threads = *threads;
      if (seed) c.pipeline.seed = *seed;
      if (!scorer.empty()) c.pipeline.scorer = scorer;
      apply_environment(c);
      c.validate();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidArgument) throw UsageError(e.what());
      throw;
    }
    return c;
  }
};

RemoteOptions remote_options(const Config& c) {
  RemoteOptions o;
  o.read_timeout = std::chrono::milliseconds(c.generator.timeout_ms);
  o.max_in_flight = c.generator.max_in_flight;
  return o;
}

int cmd_synth(int pairs, double min_sep, std::uint64_t seed, const std::string& out, bool no_inplane) {
  DatasetOptions opts;
  opts.random_inplane = !no_inplane;
  const auto manifest = gen_dataset(pairs, seed, min_sep, out, opts);
  print({{"manifest", (std::filesystem::path(out) / "manifest.json").string()}, {"pairs", manifest.entries.size()}});
  return 0;
}

int cmd_estimate(const std::string& manifest_path, const std::string& pair_id, const PipelineFlags& flags) {
  const Config config = flags.resolve();
  const auto manifest = load_manifest(manifest_path);
  const auto* entry = manifest.find(pair_id);
  if (entry == nullptr) throw UsageError("pair '" + pair_id + "' is not in the manifest");
  const auto pair = load_pair(manifest, *entry);
  const auto factory =
      make_backend_factory(config.pipeline.backend, config.generator.endpoint, remote_options(config));
  const auto generator = factory(manifest, *entry, pair, config.pipeline);
  const auto est = estimate_pair(pair.images[0], pair.masks[0], entry->intrinsics[0], pair.images[1], pair.masks[1],
                                 entry->intrinsics[1], *generator, config.pipeline);
  const auto& d = est.diagnostics;
  json out{{"id", entry->id},
           {"backend", generator->name()},
           {"relative", pose_json(est.relative)},
           {"diagnostics",
            {{"orientation",
              {{"inplane_deg", d.orientation.inplane_deg},
               {"elevation_deg", d.orientation.elevation_deg},
               {"score", d.orientation.score},
               {"insufficient_correspondences", d.insufficient_correspondences}}},
             {"selected_index", d.selected_index},
             {"selected_score", d.selected_score},
             {"selected_zoom", d.selected_zoom},
             {"coarse_viewpoint", viewpoint_json(d.coarse_viewpoint)},
             {"refined_viewpoint", viewpoint_json(d.refined_viewpoint)},
             {"refined_score", d.refined_score},
             {"refine_history", d.refine_history},
             {"timings_ms", d.timings_ms}}},
           {"config", to_json(config.pipeline)}};
  out["gt"] = {{"rot_err_deg", rotation_error_deg(entry->relative.rotation, est.relative.rotation)},
               {"trans_err_deg", translation_angle_deg(entry->relative.translation, est.relative.translation)}};
  print(out);
  return 0;
}

int cmd_eval(const std::string& manifest_path, double dilate, std::string report_path, const PipelineFlags& flags) {
  const Config config = flags.resolve();
  if (report_path.empty()) report_path = config.report_path;
  const auto manifest = load_manifest(manifest_path);
  BenchmarkOptions opts;
  opts.pipeline = config.pipeline;
  opts.dilation_percent = dilate;
  opts.threads = config.threads;
  opts.backend = make_backend_factory(config.pipeline.backend, config.generator.endpoint, remote_options(config));
  const auto report = run_benchmark(manifest, opts);
  if (!report_path.empty()) write_report(report, report_path);
  for (const auto& p : report.pairs)
    std::cerr << p.id << " rot " << p.rot_err_deg << " trans " << p.trans_err_deg << (p.failed ? " FAILED: " + p.error : "")
              << "\n";
  json out = report.to_json();
  if (!report_path.empty()) out["report"] = report_path;
  print(out);
  return 0;
}

int cmd_graph_opt(const std::string& in, const std::string& out, int max_iters) {
  const PoseGraph graph = read_graph(in);
  OptimizeOptions opts;
  opts.max_iters = max_iters;
  const auto result = optimize(graph, opts);
  write_graph(result.graph, out);
  print({{"out", out},
         {"nodes", result.graph.nodes.size()},
         {"edges", result.graph.edges.size()},
         {"iterations", result.iterations},
         {"initial_residual", result.residual_history.front()},
         {"final_residual", result.residual_history.back()}});
  return 0;
}

MockServer* g_server = nullptr;

int cmd_serve_mock(const std::string& host, int port) {
  MockServer server;
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "serving /v1 mock on " << host << ":" << port << std::endl;
  if (!server.listen(host, port)) throw Error(ErrorCode::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative pose of two object views via generated novel views"};
  app.require_subcommand(1);

  int pairs = 0;
  double min_sep = 120.0;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool no_inplane = false;
  auto* synth = app.add_subcommand("synth", "Render a synthetic pair dataset");
  synth->add_option("--pairs", pairs, "Number of pairs")->required()->check(CLI::PositiveNumber);
  synth->add_option("--min-sep", min_sep, "Minimum angular separation (deg)")->check(CLI::Range(0.0, 180.0));
  synth->add_option("--seed", seed, "Seed");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_flag("--no-inplane", no_inplane, "Disable random in-plane camera roll");

  std::string manifest, pair_id;
  PipelineFlags est_flags;
  auto* estimate = app.add_subcommand("estimate", "Estimate the relative pose of one pair");
  estimate->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  estimate->add_option("--pair", pair_id, "Pair id")->required();
  est_flags.add(estimate);

  double dilate = 0;
  std::string report;
  PipelineFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Benchmark a dataset manifest");
  eval->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--dilate", dilate, "Mask dilation percent")->check(CLI::NonNegativeNumber);
  eval->add_option("--report", report, "Report JSON path");
  eval->add_option("--threads", eval_flags.threads, "Pairs evaluated concurrently")->check(CLI::PositiveNumber);
  eval_flags.add(eval);

  std::string graph_in, graph_out;
  int max_iters = 100;
  auto* graph = app.add_subcommand("graph-opt", "Optimize a pose graph");
  graph->add_option("--graph", graph_in, "Input graph")->required()->check(CLI::ExistingFile);
  graph->add_option("--out", graph_out, "Output graph")->required();
  graph->add_option("--max-iters", max_iters, "Iteration limit")->check(CLI::NonNegativeNumber);

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve-mock", "Serve the /v1 protocol with test-card images");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(pairs, min_sep, seed, out_dir, no_inplane);
    if (*estimate) return cmd_estimate(manifest, pair_id, est_flags);
    if (*eval) return cmd_eval(manifest, dilate, report, eval_flags);
    if (*graph) return cmd_graph_opt(graph_in, graph_out, max_iters);
    if (*serve) return cmd_serve_mock(host, port);
  } catch (const UsageError& e) {
    print({{"error", e.what()}, {"code", "Usage"}});
    return kExitUsage;
  } catch (const std::exception& e) {
    print(error_json(e));
    return kExitRuntime;
  }
  return kExitUsage;
}
