#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "xpose/errors.hpp"
#include "xpose/protocol.hpp"

// After Eigen: resolv.h defines a _res macro that clashes with Eigen internals.
#include <httplib.h>

using namespace xpose;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(XPOSE_FIXTURE_DIR) + "/" + name, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ViewRequest golden_request() {
  ViewRequest r;
  r.image = make_test_card(32);
  r.deltas = {{30, 0}, {-15, 10}};
  r.steps = 50;
  r.seed = 7;
  return r;
}

GeneratorFailureKind failure_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.generator_kind();
  }
  return GeneratorFailureKind::None;
}

int protocol_status(std::string_view body) {
  try {
    parse_request(body);
  } catch (const ProtocolError& e) {
    return e.status();
  }
  return 200;
}

// Serves a fixed reply on a free port for the lifetime of the object.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/v1/generate", handler);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    thread.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST(Protocol, GoldenRequestBytes) {
  EXPECT_EQ(serialize_request(golden_request()), fixture("generate_request.json"));
}

TEST(Protocol, GoldenRequestParses) {
  const ViewRequest r = parse_request(fixture("generate_request.json"));
  const ViewRequest g = golden_request();
  EXPECT_EQ(r.image, g.image);
  EXPECT_EQ(r.deltas, g.deltas);
  EXPECT_EQ(r.steps, 50);
  EXPECT_EQ(r.seed, 7u);
}

TEST(Protocol, GoldenResponseDecodesToStampedCards) {
  const auto images = parse_response(fixture("generate_response.json"));
  ASSERT_EQ(images.size(), 2u);
  EXPECT_EQ(read_stamp(images[0]), (ViewDelta{30, 0}));
  EXPECT_EQ(read_stamp(images[1]), (ViewDelta{-15, 10}));
  EXPECT_EQ(serialize_response(images), fixture("generate_response.json"));
}

TEST(Protocol, GoldenHealth) {
  const Health h = parse_health(fixture("health_response.json"));
  EXPECT_EQ(h.status, "ok");
  EXPECT_EQ(h.model, MockServer::kModel);
  EXPECT_EQ(serialize_health(h), fixture("health_response.json"));
}

TEST(Protocol, RejectsMalformedRequests) {
  EXPECT_EQ(protocol_status(fixture("generate_request_bad_b64.json")), 400);
  EXPECT_EQ(protocol_status(fixture("generate_request_out_of_range.json")), 422);
  EXPECT_EQ(protocol_status("{not json"), 400);
  EXPECT_EQ(protocol_status(R"({"views":[]})"), 400);
}

TEST(Protocol, ResponseDecodeFailures) {
  EXPECT_EQ(failure_kind([] { parse_response("[]"); }), GeneratorFailureKind::Decode);
  EXPECT_EQ(failure_kind([] { parse_response(R"({"images_png_b64":["AAAA"]})"); }), GeneratorFailureKind::Decode);
}

TEST(Protocol, EnvironmentEndpointWins) {
  ::unsetenv(kEndpointEnv);
  EXPECT_EQ(resolve_endpoint("http://a:1"), "http://a:1");
  ::setenv(kEndpointEnv, "http://b:2", 1);
  EXPECT_EQ(resolve_endpoint("http://a:1"), "http://b:2");
  ::unsetenv(kEndpointEnv);
}

TEST(Protocol, MockServerRoundTrip) {
  MockServer server;
  const int port = server.start();
  RemoteGenerator remote("http://127.0.0.1:" + std::to_string(port));
  EXPECT_EQ(remote.health().model, MockServer::kModel);
  const ViewRequest r = golden_request();
  const auto images = remote.generate(r);
  const auto local = MockGenerator().generate(r);
  ASSERT_EQ(images.size(), local.size());
  for (std::size_t k = 0; k < images.size(); ++k) EXPECT_EQ(images[k], local[k]);
  server.stop();
}

TEST(Protocol, MockServerStatusCodes) {
  MockServer server;
  const int port = server.start();
  httplib::Client client("127.0.0.1", port);
  auto bad = client.Post("/v1/generate", fixture("generate_request_bad_b64.json"), "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_TRUE(nlohmann::json::parse(bad->body).contains("error"));
  auto range = client.Post("/v1/generate", fixture("generate_request_out_of_range.json"), "application/json");
  ASSERT_TRUE(range);
  EXPECT_EQ(range->status, 422);

  RemoteGenerator remote("http://127.0.0.1:" + std::to_string(port));
  ViewRequest r = golden_request();
  r.deltas = {{270, 0}};
  EXPECT_EQ(failure_kind([&] { remote.generate(r); }), GeneratorFailureKind::HttpStatus);
  server.stop();
}

TEST(Protocol, CountMismatch) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content(serialize_response({make_test_card(32)}), "application/json");
  });
  RemoteGenerator remote(stub.endpoint());
  EXPECT_EQ(failure_kind([&] { remote.generate(golden_request()); }), GeneratorFailureKind::CountMismatch);
}

TEST(Protocol, ServerErrorIsHttpStatus) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content(error_body("warming up"), "application/json");
  });
  RemoteGenerator remote(stub.endpoint());
  try {
    remote.generate(golden_request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.generator_kind(), GeneratorFailureKind::HttpStatus);
    EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
  }
}

TEST(Protocol, ReadTimeout) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    res.set_content(serialize_response({}), "application/json");
  });
  RemoteOptions o;
  o.read_timeout = std::chrono::milliseconds(200);
  RemoteGenerator remote(stub.endpoint(), o);
  EXPECT_EQ(failure_kind([&] { remote.generate(golden_request()); }), GeneratorFailureKind::Timeout);
}

TEST(Protocol, UnreachableEndpoint) {
  // Bind (without listening) and release a port so connections are refused.
  int port = 0;
  {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port = ntohs(addr.sin_port);
    ::close(fd);
  }
  RemoteGenerator remote("http://127.0.0.1:" + std::to_string(port));
  EXPECT_EQ(failure_kind([&] { remote.generate(golden_request()); }), GeneratorFailureKind::Unavailable);
}

TEST(Protocol, EmptyRequestIsPrecondition) {
  MockServer server;
  const int port = server.start();
  RemoteGenerator remote("http://127.0.0.1:" + std::to_string(port));
  ViewRequest r;
  r.deltas = {{0, 0}};
  EXPECT_EQ(failure_kind([&] { remote.generate(r); }), GeneratorFailureKind::Precondition);
  server.stop();
}
