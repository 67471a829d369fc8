#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// stderr is merged into the captured output
CliRun run(const std::string& args) {
  const std::string cmd = "ANATGRAPH_LOG=quiet " + std::string(ANATGRAPH_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

nlohmann::json last_json_line(const std::string& text) {
  std::string line, last;
  std::istringstream in(text);
  while (std::getline(in, line))
    if (!line.empty() && line.front() == '{') last = line;
  return nlohmann::json::parse(last);
}

const std::string kTiny =
    "--set epochs=2 --set n_users=2 --set segment_length=128 --set conv1_channels=4 --set conv2_channels=4 "
    "--set gcn1_dim=8 --set gcn2_dim=8 --set graph_embedding_dim=8";

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("anatgraph_cli_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Cli, ConfigErrorExitsTwoWithPath) {
  const CliRun r = run("train --out " + scratch("bad").string() + " --set zeta=-1");
  EXPECT_EQ(r.code, 2);
  const auto j = last_json_line(r.out);
  EXPECT_EQ(j["error"], "config");
  EXPECT_EQ(j["path"], "loss.zeta");
}

TEST(Cli, UnknownOverrideKeyNamed) {
  const CliRun r = run("loso --set colour=red");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(last_json_line(r.out)["path"], "colour");
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("train --bogus").code, 2);
  EXPECT_EQ(run("loso --parallel-folds 0").code, 2);
  EXPECT_EQ(run("train --config /nonexistent.json").code, 2);
}

TEST(Cli, NonFiniteLossExitsThreeNamingTerm) {
  const CliRun r = run("train --out " + scratch("nan").string() + " " + kTiny + " --set kl_weight=1e308");
  EXPECT_EQ(r.code, 3);
  const auto j = last_json_line(r.out);
  EXPECT_EQ(j["error"], "non_finite_loss");
  EXPECT_EQ(j["path"], "L_KL");
}

TEST(Cli, GradcheckSingleTrial) {
  const CliRun r = run("gradcheck --trials 1 --seed 3");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  // an impossible tolerance must fail
  EXPECT_EQ(run("gradcheck --trials 1 --tolerance 0").code, 1);
}

TEST(Cli, GenerateTrainAndReport) {
  const fs::path gen = scratch("gen");
  ASSERT_EQ(run("generate --out " + gen.string() + " --set n_users=2 --set segment_length=128").code, 0);
  EXPECT_TRUE(fs::exists(gen / "dataset.csv"));
  EXPECT_TRUE(fs::exists(gen / "manifest.json"));
  EXPECT_TRUE(fs::exists(gen / "config.json"));

  // train on the CSV the generator wrote
  const fs::path out = scratch("train");
  const CliRun t = run("train --out " + out.string() + " " + kTiny + " --set source=csv --set csv_path=" +
                    (gen / "dataset.csv").string() + " --set manifest_path=" + (gen / "manifest.json").string());
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_NE(t.out.find("mean accuracy"), std::string::npos);
  const auto cfg = nlohmann::json::parse(std::ifstream(out / "config.json"));
  EXPECT_EQ(cfg["data"]["source"], "csv");

  const fs::path again = scratch("report");
  ASSERT_EQ(run("report --from " + out.string() + " --out " + again.string()).code, 0);
  for (const char* f : {"metrics.json", "training_log.csv", "pearson.csv"}) {
    std::ifstream a(out / f), b(again / f);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(sa, sb) << f;
  }
  EXPECT_EQ(run("report --from " + scratch("missing").string()).code, 1);
  for (const auto& d : {gen, out, again}) fs::remove_all(d);
}
