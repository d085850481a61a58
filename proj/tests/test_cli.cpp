#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

#include "memchar/cli.hpp"
#include "memchar/plots.hpp"
#include "memchar/results.hpp"
#include "memchar/text.hpp"

using namespace memchar;
namespace fs = std::filesystem;

namespace {

std::string fx(const std::string& f) { return std::string(MEMCHAR_FIXTURES) + "/" + f; }

struct Run {
  int rc;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  int rc = run_cli(args, o, e);
  return {rc, o.str(), e.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("memchar_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string sub(const std::string& n) const { return (dir / n).string(); }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, SameCcxMStateGivesSixteenPairs) {
  auto r = cli({"latency", "--topology", fx("rome_2s.json"), "--scope", "same_ccx", "--state", "M", "--backend", "sim",
                "--out", sub("a")});
  ASSERT_EQ(r.rc, 0) << r.err;
  auto rs = read_result_set(sub("a"));
  ASSERT_EQ(rs.latency.size(), 16u);
  EXPECT_EQ(rs.manifest, kManifestJson);
  std::set<std::pair<int, int>> pairs;
  for (const auto& rec : rs.latency) {
    pairs.insert({rec.requester, rec.owner});
    EXPECT_EQ(rec.state, CoherenceState::M);
    EXPECT_EQ(rec.backend, BackendKind::simulated);
    // 4x4 grid: local L1 on the diagonal, remote-core L1 elsewhere
    EXPECT_EQ(rec.latency_cycles, rec.requester == rec.owner ? 4.0 : 78.0);
  }
  EXPECT_EQ(pairs.size(), 16u);
  EXPECT_TRUE(fs::exists(sub("a/manifest.json")));
  auto h = heatmap_from_latency(rs.latency);
  EXPECT_EQ(h.rows.size(), 4u);
  EXPECT_EQ(h.cols.size(), 4u);
}

TEST_F(Cli, EmptyScopeIsConfigErrorWithoutFiles) {
  auto r = cli({"latency", "--topology", fx("rome_2s.json"), "--scope", "same_ccx", "--cores", "100", "--out",
                sub("empty")});
  EXPECT_EQ(r.rc, kExitConfig);
  EXPECT_FALSE(fs::exists(sub("empty")));
  r = cli({"latency", "--topology", fx("clx_2s.json"), "--scope", "same_ccd", "--out", sub("mesh")});
  EXPECT_EQ(r.rc, kExitConfig);
  EXPECT_FALSE(fs::exists(sub("mesh")));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli({}).rc, kExitConfig);
  EXPECT_EQ(cli({"nope"}).rc, kExitConfig);
  EXPECT_EQ(cli({"latency", "--topology", fx("missing.json"), "--out", sub("x")}).rc, kExitConfig);
  EXPECT_EQ(cli({"latency", "--topology", fx("rome_2s.json"), "--state", "F", "--out", sub("x")}).rc, kExitConfig);
  EXPECT_EQ(cli({"triad", "--topology", fx("rome_2s.json"), "--cores", "0,64", "--sizes", "1M", "--out", sub("x")}).rc,
            kExitConfig);
  EXPECT_EQ(cli({"latency", "--topology", fx("rome_2s.json"), "--backend", "gpu", "--out", sub("x")}).rc,
            kExitConfig);
  EXPECT_FALSE(fs::exists(sub("x")));
  EXPECT_EQ(cli({"latency", "--help"}).rc, kExitOk);
}

TEST_F(Cli, NativePinningOutsideHostIsExitThree) {
  // The Rome fixture has 128 cores; no test host has core 127 and the placement needs it.
  auto r = cli({"latency", "--topology", fx("rome_2s.json"), "--backend", "native", "--scope", "local", "--cores",
                "127", "--sizes", "4K", "--out", sub("n")});
  if (std::thread::hardware_concurrency() > 127) GTEST_SKIP() << "host has 128+ CPUs";
  EXPECT_EQ(r.rc, kExitPinning) << r.err;
  EXPECT_FALSE(fs::exists(sub("n")));
}

TEST_F(Cli, ReplayIsByteIdentical) {
  std::vector<std::vector<std::string>> runs{
      {"latency", "--topology", fx("rome_2s.json"), "--scope", "same_ccd", "--state", "M,O", "--level", "L1,L3",
       "--seed", "7"},
      {"latency", "--topology", fx("clx_2s.json"), "--scope", "intra_socket", "--state", "F", "--level", "L3",
       "--sizes", "4M,8M", "--alignment", "64"},
      {"bandwidth", "--topology", fx("rome_2s.json"), "--cores", "0-3"},
      {"triad", "--topology", fx("clx_2s.json"), "--ladder", "cores", "--sizes", "64M", "--nt"},
  };
  int k = 0;
  for (auto args : runs) {
    std::string a = sub("run" + std::to_string(k)), b = sub("replay" + std::to_string(k));
    ++k;
    args.push_back("--out");
    args.push_back(a);
    auto r = cli(args);
    ASSERT_EQ(r.rc, 0) << r.err;
    auto m = read_manifest(a + "/manifest.json");
    ASSERT_FALSE(m.outputs.empty());
    auto rp = cli({"replay", "--manifest", a + "/manifest.json", "--out", b});
    ASSERT_EQ(rp.rc, 0) << rp.err;
    for (const auto& f : m.outputs) {
      auto orig = read_text_file(a + "/" + f);
      EXPECT_EQ(orig, read_text_file(b + "/" + f)) << f;
      // and the parse round trip is the identity
      auto rs = read_result_file(a + "/" + f);
      std::ostringstream again;
      if (!rs.latency.empty()) write_latency_csv(again, rs.latency, rs.manifest);
      else write_bandwidth_csv(again, rs.bandwidth, rs.manifest);
      EXPECT_EQ(again.str(), orig);
    }
  }
}

TEST_F(Cli, ReplayRestoresEnvironment) {
  setenv("MEMCHAR_ALIGNMENT", "64", 1);
  auto r = cli({"latency", "--topology", fx("rome_2s.json"), "--level", "L2", "--cores", "0", "--out", sub("e1")});
  unsetenv("MEMCHAR_ALIGNMENT");
  ASSERT_EQ(r.rc, 0) << r.err;
  auto m = read_manifest(sub("e1/manifest.json"));
  EXPECT_EQ(m.env.at("MEMCHAR_ALIGNMENT"), "64");
  ASSERT_EQ(cli({"replay", "--manifest", sub("e1/manifest.json"), "--out", sub("e2")}).rc, 0);
  EXPECT_EQ(read_result_set(sub("e2")).latency.at(0).alignment, 64u);
  EXPECT_EQ(read_text_file(sub("e1/latency.csv")), read_text_file(sub("e2/latency.csv")));
  EXPECT_EQ(std::getenv("MEMCHAR_ALIGNMENT"), nullptr);
}

TEST_F(Cli, ModelFitWritesParametersAndResiduals) {
  auto r = cli({"model-fit", "--topology", fx("rome_2s.json"), "--input", fx("rome_table2.csv"), "--out", sub("fit")});
  ASSERT_EQ(r.rc, 0) << r.err;
  auto j = nlohmann::json::parse(read_text_file(sub("fit/model.json")));
  EXPECT_TRUE(j.contains("base"));
  auto report = read_text_file(sub("fit/fit_report.txt"));
  EXPECT_NE(report.find("measured 220"), std::string::npos);
  EXPECT_EQ(read_observations_file(sub("fit/predicted.csv")).size(), read_observations_file(fx("rome_table2.csv")).size());
  // The fitted model feeds back into the simulated backend.
  r = cli({"latency", "--topology", fx("rome_2s.json"), "--model", sub("fit/model.json"), "--state", "I", "--level",
           "RAM", "--cores", "0", "--out", sub("lat")});
  EXPECT_EQ(r.rc, 0) << r.err;
}

TEST_F(Cli, ReportPlots) {
  auto r = cli({"report", "--input", fx("rome_table2.csv"), "--out", sub("p"), "--name", "table2"});
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_TRUE(fs::exists(sub("p/table2.svg")));
  EXPECT_NE(read_text_file(sub("p/table2.data.txt")).find("grouped_bars"), std::string::npos);

  ASSERT_EQ(cli({"model-predict", "--topology", fx("rome_2s.json"), "--out", sub("m")}).rc, 0);
  r = cli({"report", "--input", sub("m/matrix.csv"), "--out", sub("p"), "--name", "matrix"});
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(read_text_file(sub("p/matrix.data.txt")).find("heatmap"), std::string::npos);

  ASSERT_EQ(cli({"latency", "--topology", fx("rome_2s.json"), "--scope", "same_ccx", "--state", "M,O", "--out",
                 sub("l")})
                .rc,
            0);
  // Two states on one heat map is a mismatched axis; filtering to one state fixes it.
  EXPECT_EQ(cli({"report", "--input", sub("l"), "--kind", "heatmap", "--out", sub("q")}).rc, kExitConfig);
  EXPECT_FALSE(fs::exists(sub("q")));
  EXPECT_EQ(cli({"report", "--input", sub("l"), "--kind", "heatmap", "--state", "O", "--out", sub("q")}).rc, 0);
  EXPECT_EQ(cli({"report", "--input", sub("l"), "--kind", "grouped_bars", "--out", sub("q")}).rc, 0);
}

TEST_F(Cli, TopoWritesNormalizedTopology) {
  auto r = cli({"topo", "--topology", fx("clx_2s.json"), "--out", sub("t")});
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(r.out.find("mesh diameter 9"), std::string::npos);
  auto g = load_topology_file(sub("t/topology.json"));
  EXPECT_EQ(g, load_topology_file(fx("clx_2s.json")));
}
