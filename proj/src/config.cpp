#include "xpose/config.hpp"

#include <set>

#include "xpose/errors.hpp"
#include "xpose/png_io.hpp"
#include "xpose/protocol.hpp"

namespace xpose {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, "unknown config key '" + where + (where.empty() ? "" : ".") + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "' has the wrong type");
  }
  if constexpr (std::is_arithmetic_v<T>)
    require(j.at(key).is_number(), std::string("config key '") + key + "' must be a number");
}

}  // namespace

void Config::validate() const {
  pipeline.validate();
  require(threads >= 1, "threads must be >= 1");
  require(generator.timeout_ms >= 1, "generator.timeout_ms must be >= 1");
  require(generator.max_in_flight >= 1, "generator.max_in_flight must be >= 1");
  require(pipeline.backend == "oracle" || pipeline.backend == "mock" || pipeline.backend == "remote",
          "backend must be oracle, mock or remote");
}

Config apply_config_json(Config c, const json& j) {
  reject_unknown(j,
                 {"s_v", "n_views", "steps_orient", "steps_generate", "refine_iters", "seed", "scorer", "backend",
                  "threads", "generator", "output"},
                 "");
  auto& p = c.pipeline;
  read(j, "s_v", p.s_v);
  read(j, "n_views", p.n_views);
  read(j, "steps_orient", p.steps_orient);
  read(j, "steps_generate", p.steps_generate);
  read(j, "refine_iters", p.refine_iters);
  read(j, "seed", p.seed);
  read(j, "scorer", p.scorer);
  read(j, "backend", p.backend);
  read(j, "threads", c.threads);
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    reject_unknown(g, {"endpoint", "timeout_ms", "max_in_flight"}, "generator");
    read(g, "endpoint", c.generator.endpoint);
    read(g, "timeout_ms", c.generator.timeout_ms);
    read(g, "max_in_flight", c.generator.max_in_flight);
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    reject_unknown(o, {"report"}, "output");
    read(o, "report", c.report_path);
  }
  return c;
}

Config load_config(const std::filesystem::path& path, Config base) {
  const json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidArgument, "config " + path.string() + " is not valid JSON");
  return apply_config_json(std::move(base), j);
}

void apply_environment(Config& config) { config.generator.endpoint = resolve_endpoint(config.generator.endpoint); }

}  // namespace xpose
