#ifndef XPOSE_CONFIG_HPP
#define XPOSE_CONFIG_HPP

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "xpose/match.hpp"

namespace xpose {

struct GeneratorSettings {
  std::string endpoint;
  int timeout_ms = 600000;
  int max_in_flight = 2;
};

/// Config file (JSON). Pipeline keys sit at the top level; unknown keys are
/// rejected:
///   {"s_v":256, "n_views":128, "steps_orient":75, "steps_generate":50,
///    "refine_iters":3, "seed":0, "scorer":"ncc-rgb", "backend":"oracle",
///    "threads":1,
///    "generator":{"endpoint":"http://127.0.0.1:8080", "timeout_ms":600000, "max_in_flight":2},
///    "output":{"report":"report.json"}}
struct Config {
  PipelineConfig pipeline;
  GeneratorSettings generator;
  std::string report_path;
  int threads = 1;

  void validate() const;
};

/// Overlays the keys present in `j` onto `base`. InvalidArgument on unknown
/// keys or wrong types.
Config apply_config_json(Config base, const nlohmann::json& j);
Config load_config(const std::filesystem::path& path, Config base = {});

/// The environment endpoint wins over everything else.
void apply_environment(Config& config);

}  // namespace xpose

#endif  // XPOSE_CONFIG_HPP
