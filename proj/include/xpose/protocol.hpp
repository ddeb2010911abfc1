#ifndef XPOSE_PROTOCOL_HPP
#define XPOSE_PROTOCOL_HPP

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xpose/generator.hpp"

// /v1 wire protocol of the novel-view service:
//   GET  /v1/health   -> 200 {"status":"ok","model":"<id>"}
//   POST /v1/generate {"image_png_b64","views":[{"d_azimuth_deg","d_elevation_deg"}],"steps","seed"}
//                     -> 200 {"images_png_b64":[...]} | 4xx {"error":"..."}

namespace xpose {

inline constexpr const char* kEndpointEnv = "XPOSE_GENERATOR_ENDPOINT";

/// Rejected request body; `status` is the HTTP status to answer with.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct Health {
  std::string status;
  std::string model;
};

std::string serialize_request(const ViewRequest& request);
/// Throws ProtocolError: 400 for malformed JSON/base64/PNG or invalid
/// fields, 422 for deltas outside |d_az| <= 180, |d_el| <= 180.
ViewRequest parse_request(std::string_view body);

std::string serialize_response(const std::vector<Image>& images);
/// Throws Error(GeneratorFailureKind::Decode).
std::vector<Image> parse_response(std::string_view body);

std::string serialize_health(const Health& health);
Health parse_health(std::string_view body);

std::string error_body(std::string_view message);

/// Endpoint from the environment when set, else the configured value.
std::string resolve_endpoint(const std::string& configured);

struct RemoteOptions {
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds read_timeout{600000};
  int max_in_flight = 2;
};

/// Client for a /v1 service. One POST per generate call; concurrent calls
/// beyond max_in_flight wait.
class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(std::string endpoint, RemoteOptions options = {});
  ~RemoteGenerator() override;

  std::vector<Image> generate(const ViewRequest& request) const override;
  std::string name() const override { return "remote"; }
  Health health() const;
  const std::string& endpoint() const { return endpoint_; }

 private:
  struct Limiter;
  std::string endpoint_;
  RemoteOptions options_;
  std::unique_ptr<Limiter> limiter_;
};

/// In-process /v1 server answering with stamped test cards (MockGenerator).
class MockServer {
 public:
  MockServer();
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Binds and serves on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

  static constexpr const char* kModel = "mock-testcard";

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace xpose

#endif  // XPOSE_PROTOCOL_HPP
