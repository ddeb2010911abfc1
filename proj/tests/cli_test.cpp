#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

namespace {

struct CliRun {
  int code = -1;
  std::string out;  // stdout only
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(XPOSE_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string& dataset() {
  static const std::string dir = [] {
    const auto d = std::filesystem::temp_directory_path() / "xpose_cli_test";
    std::filesystem::remove_all(d);
    return d.string();
  }();
  return dir;
}

}  // namespace

TEST(Cli, SynthPrintsJson) {
  const CliRun r = run("synth --pairs 2 --seed 4 --out " + dataset());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["pairs"], 2);
  EXPECT_TRUE(std::filesystem::exists(j["manifest"].get<std::string>()));
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("synth --out x").code, 2);
  EXPECT_EQ(run("synth --pairs 0 --out x").code, 2);
  EXPECT_EQ(run("bogus").code, 2);
  ASSERT_EQ(run("synth --pairs 1 --seed 4 --out " + dataset()).code, 0);
  const CliRun missing = run("estimate --manifest " + dataset() + "/manifest.json --pair nope");
  EXPECT_EQ(missing.code, 2);
  EXPECT_TRUE(nlohmann::json::parse(missing.out).contains("error"));
  EXPECT_EQ(run("estimate --manifest " + dataset() + "/manifest.json --pair pair_0000 --scorer sift").code, 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
  ASSERT_EQ(run("synth --pairs 1 --seed 4 --out " + dataset()).code, 0);
  // Remote backend with nothing listening.
  const CliRun r = run("estimate --manifest " + dataset() +
                    "/manifest.json --pair pair_0000 --backend remote --endpoint http://127.0.0.1:1");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.out)["code"], "GeneratorFailure");
}

TEST(Cli, GraphOpt) {
  const auto in = std::filesystem::temp_directory_path() / "xpose_cli_graph.txt";
  const auto out = std::filesystem::temp_directory_path() / "xpose_cli_graph_out.txt";
  FILE* f = std::fopen(in.c_str(), "w");
  std::fputs("NODE 0 0 0 0 0 0 0 1\nNODE 1 1.2 0 0 0 0 0 1\nEDGE odometry 1 0 1 0 0 0 0 0 1 1\n", f);
  std::fclose(f);
  const CliRun r = run("graph-opt --graph " + in.string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_LT(nlohmann::json::parse(r.out)["final_residual"].get<double>(), 1e-12);
  EXPECT_TRUE(std::filesystem::exists(out));
}
