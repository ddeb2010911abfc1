#include "xpose/protocol.hpp"

#include <cmath>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "xpose/errors.hpp"
#include "xpose/png_io.hpp"

namespace xpose {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Wire format

std::string serialize_request(const ViewRequest& request) {
  json views = json::array();
  for (const auto& d : request.deltas)
    views.push_back({{"d_azimuth_deg", d.d_azimuth_deg}, {"d_elevation_deg", d.d_elevation_deg}});
  return json{{"image_png_b64", base64_encode(encode_png(request.image))},
              {"views", views},
              {"steps", request.steps},
              {"seed", request.seed}}
      .dump();
}

ViewRequest parse_request(std::string_view body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError(400, "body is not a JSON object");
  for (const char* key : {"image_png_b64", "views", "steps", "seed"})
    if (!j.contains(key)) throw ProtocolError(400, std::string("missing field '") + key + "'");
  if (!j["image_png_b64"].is_string()) throw ProtocolError(400, "image_png_b64 must be a string");
  if (!j["views"].is_array() || j["views"].empty()) throw ProtocolError(400, "views must be a non-empty array");
  if (!j["steps"].is_number_integer() || j["steps"].get<long long>() < 1)
    throw ProtocolError(400, "steps must be an integer >= 1");
  if (!j["seed"].is_number_integer()) throw ProtocolError(400, "seed must be an integer");

  ViewRequest request;
  request.steps = j["steps"].get<int>();
  request.seed = j["seed"].get<std::uint64_t>();
  for (const auto& v : j["views"]) {
    if (!v.is_object() || !v.contains("d_azimuth_deg") || !v.contains("d_elevation_deg") ||
        !v["d_azimuth_deg"].is_number() || !v["d_elevation_deg"].is_number())
      throw ProtocolError(400, "each view needs numeric d_azimuth_deg and d_elevation_deg");
    const ViewDelta d{v["d_azimuth_deg"].get<double>(), v["d_elevation_deg"].get<double>()};
    if (!std::isfinite(d.d_azimuth_deg) || !std::isfinite(d.d_elevation_deg) || std::abs(d.d_azimuth_deg) > 180.0 ||
        std::abs(d.d_elevation_deg) > 180.0)
      throw ProtocolError(422, "view delta out of range");
    request.deltas.push_back(d);
  }
  try {
    request.image = decode_png_rgb(base64_decode(j["image_png_b64"].get<std::string>()));
  } catch (const Error& e) {
    throw ProtocolError(400, std::string("undecodable image: ") + e.what());
  }
  if (request.image.empty() || request.image.width() != request.image.height())
    throw ProtocolError(400, "image must be square");
  return request;
}

std::string serialize_response(const std::vector<Image>& images) {
  json list = json::array();
  for (const auto& img : images) list.push_back(base64_encode(encode_png(img)));
  return json{{"images_png_b64", list}}.dump();
}

std::vector<Image> parse_response(std::string_view body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("images_png_b64") || !j["images_png_b64"].is_array())
    throw Error(GeneratorFailureKind::Decode, "response lacks an images_png_b64 array");
  std::vector<Image> images;
  for (const auto& item : j["images_png_b64"]) {
    if (!item.is_string()) throw Error(GeneratorFailureKind::Decode, "image entry is not a string");
    try {
      images.push_back(decode_png_rgb(base64_decode(item.get<std::string>())));
    } catch (const Error& e) {
      throw Error(GeneratorFailureKind::Decode, e.what());
    }
  }
  return images;
}

std::string serialize_health(const Health& health) {
  return json{{"status", health.status}, {"model", health.model}}.dump();
}

Health parse_health(std::string_view body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("status") || !j["status"].is_string())
    throw Error(GeneratorFailureKind::Decode, "malformed health response");
  return {j["status"].get<std::string>(), j.value("model", std::string())};
}

std::string error_body(std::string_view message) { return json{{"error", message}}.dump(); }

std::string resolve_endpoint(const std::string& configured) {
  if (const char* env = std::getenv(kEndpointEnv); env != nullptr && *env != '\0') return env;
  return configured;
}

// ---------------------------------------------------------------------------
// Client

struct RemoteGenerator::Limiter {
  explicit Limiter(int n) : slots(n) {}
  std::counting_semaphore<1024> slots;
};

namespace {

httplib::Client make_client(const std::string& endpoint, const RemoteOptions& o) {
  httplib::Client client(endpoint);
  client.set_connection_timeout(o.connect_timeout);
  client.set_read_timeout(o.read_timeout);
  client.set_write_timeout(o.read_timeout);
  return client;
}

[[noreturn]] void fail_transport(httplib::Error err, const std::string& endpoint) {
  const std::string what = "request to " + endpoint + " failed: " + httplib::to_string(err);
  if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
    throw Error(GeneratorFailureKind::Timeout, what);
  throw Error(GeneratorFailureKind::Unavailable, what);
}

std::string server_message(const httplib::Result& res) {
  const json j = json::parse(res->body, nullptr, false);
  if (!j.is_discarded() && j.is_object() && j.contains("error") && j["error"].is_string())
    return j["error"].get<std::string>();
  return res->body;
}

}  // namespace

RemoteGenerator::RemoteGenerator(std::string endpoint, RemoteOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  require(!endpoint_.empty(), "generator endpoint is empty");
  require(options_.max_in_flight >= 1 && options_.max_in_flight <= 1024, "max_in_flight must be in [1, 1024]");
  limiter_ = std::make_unique<Limiter>(options_.max_in_flight);
}

RemoteGenerator::~RemoteGenerator() = default;

std::vector<Image> RemoteGenerator::generate(const ViewRequest& request) const {
  try {
    validate_request(request);
  } catch (const Error& e) {
    throw Error(GeneratorFailureKind::Precondition, e.what());
  }
  const std::string body = serialize_request(request);
  limiter_->slots.acquire();
  struct Release {
    Limiter* l;
    ~Release() { l->slots.release(); }
  } release{limiter_.get()};

  auto client = make_client(endpoint_, options_);
  const auto res = client.Post("/v1/generate", body, "application/json");
  if (!res) fail_transport(res.error(), endpoint_);
  if (res->status != 200)
    throw Error(GeneratorFailureKind::HttpStatus, "HTTP " + std::to_string(res->status) + ": " + server_message(res));
  auto images = parse_response(res->body);
  if (images.size() != request.deltas.size())
    throw Error(GeneratorFailureKind::CountMismatch, "expected " + std::to_string(request.deltas.size()) +
                                                         " images, got " + std::to_string(images.size()));
  return images;
}

Health RemoteGenerator::health() const {
  auto client = make_client(endpoint_, options_);
  const auto res = client.Get("/v1/health");
  if (!res) fail_transport(res.error(), endpoint_);
  if (res->status != 200)
    throw Error(GeneratorFailureKind::HttpStatus, "HTTP " + std::to_string(res->status) + ": " + server_message(res));
  return parse_health(res->body);
}

// ---------------------------------------------------------------------------
// Mock server

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
  MockGenerator generator;
};

MockServer::MockServer() : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(serialize_health({"ok", kModel}), "application/json");
  });
  s.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const ViewRequest request = parse_request(req.body);
      res.set_content(serialize_response(impl_->generator.generate(request)), "application/json");
    } catch (const ProtocolError& e) {
      res.status = e.status();
      res.set_content(error_body(e.what()), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_body(e.what()), "application/json");
    }
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(error_body("HTTP " + std::to_string(res.status)), "application/json");
  });
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  auto& s = impl_->server;
  port_ = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) fail(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return port_;
}

bool MockServer::listen(const std::string& host, int port) {
  port_ = port;
  return impl_->server.listen(host, port);
}

void MockServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace xpose
