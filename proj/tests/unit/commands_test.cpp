#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pflow/commands.hpp"
#include "pflow/netpbm.hpp"
#include "pflow/scene.hpp"
#include "test_support.hpp"

namespace pflow {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CommandsTest : public ::testing::Test {
 protected:
  CommandsTest() : dir_("cmd") {}

  fs::path write_config(const std::string& body) {
    const fs::path p = dir_.path() / "c.ini";
    std::ofstream(p) << body;
    return p;
  }

  CommandOptions options(const fs::path& config) {
    CommandOptions o;
    o.config = config;
    o.out_dir = dir_.path() / "out";
    return o;
  }

  static std::string small_scene() {
    return "[general]\nseed = 3\n[scene]\nframes = 48\n[drop]\ndrop = 1 20 30\n[analytics]\nslots = 0-23,24-47\n";
  }

  testing::TempDir dir_;
};

TEST_F(CommandsTest, CommandNames) {
  EXPECT_EQ(command_from_string("run"), Command::kRun);
  EXPECT_EQ(command_from_string("bench"), Command::kBench);
  EXPECT_FALSE(command_from_string("train").has_value());
  EXPECT_EQ(artifacts::overlay_name(1), "overlay_slot1.ppm");
}

TEST_F(CommandsTest, RunWritesArtifacts) {
  std::ostringstream out;
  std::ostringstream err;
  const auto opts = options(write_config(small_scene()));
  ASSERT_EQ(run_command(Command::kRun, opts, out, err), kExitOk) << err.str();
  EXPECT_TRUE(err.str().empty());
  EXPECT_NE(out.str().find("48 frames, 3 tracks"), std::string::npos) << out.str();
  EXPECT_FALSE(slurp(opts.out_dir / artifacts::kEvents).empty());
  EXPECT_EQ(slurp(opts.out_dir / artifacts::kTracks).rfind("# frame id x y w h confidence\n", 0), 0U);
  EXPECT_NE(slurp(opts.out_dir / artifacts::kSummary).find("frames=48"), std::string::npos);
}

TEST_F(CommandsTest, SeedOverrideChangesTheRun) {
  const fs::path cfg = write_config("[scene]\nframes = 24\n[drop]\njitter_sigma = 2\n");
  std::ostringstream out;
  std::ostringstream err;
  auto a = options(cfg);
  a.seed = 1;
  auto b = options(cfg);
  b.out_dir = a.out_dir.parent_path() / "out_b";
  b.seed = 2;
  ASSERT_EQ(run_command(Command::kRun, a, out, err), kExitOk);
  ASSERT_EQ(run_command(Command::kRun, b, out, err), kExitOk);
  EXPECT_NE(slurp(a.out_dir / artifacts::kEvents), slurp(b.out_dir / artifacts::kEvents));
}

TEST_F(CommandsTest, ConfigErrorsExitOneWithOneLine) {
  std::ostringstream out;
  std::ostringstream err;
  const auto opts = options(write_config("[pipeline]\nbuffer_size = 10\n"));
  EXPECT_EQ(run_command(Command::kRun, opts, out, err), kExitConfig);
  const std::string msg = err.str();
  EXPECT_EQ(msg.rfind("pflow: error[config]: ", 0), 0U) << msg;
  EXPECT_NE(msg.find("pipeline.buffer_size"), std::string::npos);
  EXPECT_EQ(msg.find('\n'), msg.size() - 1);
  EXPECT_FALSE(fs::exists(opts.out_dir));
}

TEST_F(CommandsTest, MissingConfigFileIsAConfigError) {
  std::ostringstream out;
  std::ostringstream err;
  EXPECT_EQ(run_command(Command::kRun, options(dir_.path() / "none.ini"), out, err), kExitConfig);
}

TEST_F(CommandsTest, MissingFramesDirectoryIsAConfigError) {
  std::ostringstream out;
  std::ostringstream err;
  const auto opts = options(write_config("[input]\nsource = directory\nframes_dir = frames\nprovider = file\n"
                                         "detections = d.txt\n"));
  EXPECT_EQ(run_command(Command::kRun, opts, out, err), kExitConfig);
  EXPECT_NE(err.str().find((dir_.path() / "frames").string()), std::string::npos) << err.str();
}

TEST_F(CommandsTest, RuntimeErrorsExitTwo) {
  std::ofstream(dir_.path() / "bad.txt") << "0 1 1 2 3\n";
  std::ostringstream out;
  std::ostringstream err;
  const auto opts = options(write_config("[scene]\nframes = 24\n[input]\nprovider = file\ndetections = bad.txt\n"));
  EXPECT_EQ(run_command(Command::kRun, opts, out, err), kExitRuntime);
  EXPECT_EQ(err.str().rfind("pflow: error[runtime]: ", 0), 0U) << err.str();
  EXPECT_NE(err.str().find("bad.txt:1"), std::string::npos);
}

TEST_F(CommandsTest, HeatmapWritesOneOverlayPerSlot) {
  std::ostringstream out;
  std::ostringstream err;
  const auto opts = options(write_config(small_scene()));
  ASSERT_EQ(run_command(Command::kHeatmap, opts, out, err), kExitOk) << err.str();
  for (std::size_t i = 0; i < 2; ++i) {
    const RgbImage img = netpbm::read_rgb(opts.out_dir / artifacts::overlay_name(i));
    EXPECT_EQ(img.width(), 512);
    EXPECT_EQ(img.height(), 288);
    EXPECT_TRUE(fs::exists(opts.out_dir / artifacts::heatmap_name(i)));
  }
  EXPECT_FALSE(fs::exists(opts.out_dir / artifacts::overlay_name(2)));
  EXPECT_NE(slurp(opts.out_dir / artifacts::kStats).find("visitor_count=3"), std::string::npos);
}

TEST_F(CommandsTest, HeatmapFromEmptyEventLogShowsOnlyBackground) {
  const fs::path log = dir_.path() / "empty.log";
  std::ofstream(log).close();
  std::ostringstream out;
  std::ostringstream err;
  auto opts = options(write_config("[scene]\nframes = 24\n"));
  opts.events = log;
  ASSERT_EQ(run_command(Command::kHeatmap, opts, out, err), kExitOk) << err.str();
  const RgbImage overlay = netpbm::read_rgb(opts.out_dir / artifacts::overlay_name(0));
  const SyntheticScene scene = demo_scene(24, 7);
  EXPECT_EQ(overlay, to_rgb(render_frame(scene, 0)));
  EXPECT_NE(slurp(opts.out_dir / artifacts::kStats).find("visitor_count=0"), std::string::npos);
}

TEST_F(CommandsTest, EvalWithPerfectProviderScoresOne) {
  std::ostringstream out;
  std::ostringstream err;
  const auto opts = options(write_config("[scene]\nframes = 48\n[drop]\nconfidence = 0.9\n[eval]\nmiss_thresholds = 5\n"));
  ASSERT_EQ(run_command(Command::kEval, opts, out, err), kExitOk) << err.str();
  const std::string report = slurp(opts.out_dir / artifacts::kEvalReport);
  EXPECT_NE(report.find("detector_ap 1.000000"), std::string::npos) << report;
  EXPECT_NE(report.find("id_switches 0"), std::string::npos);
  EXPECT_TRUE(fs::exists(opts.out_dir / artifacts::kSweep));
  EXPECT_TRUE(fs::exists(opts.out_dir / artifacts::kPrTracker));
}

TEST_F(CommandsTest, BenchRejectsDirectorySource) {
  fs::create_directories(dir_.path() / "frames");
  std::ofstream(dir_.path() / "d.txt").close();
  std::ostringstream out;
  std::ostringstream err;
  const auto opts = options(write_config("[input]\nsource = directory\nframes_dir = frames\nprovider = file\n"
                                         "detections = d.txt\n"));
  EXPECT_EQ(run_command(Command::kBench, opts, out, err), kExitConfig);
}

#ifdef PFLOW_CLI_PATH
int run_cli(const std::string& args, std::string& output) {
  const std::string cmd = std::string(PFLOW_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    return -1;
  }
  char buf[256];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) {
    output += buf;
  }
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CommandsTest, CliUsageErrors) {
  std::string output;
  EXPECT_EQ(run_cli("run", output), 1);
  EXPECT_EQ(output.rfind("pflow: error[usage]: ", 0), 0U) << output;
  output.clear();
  EXPECT_EQ(run_cli("frobnicate --config x", output), 1);
  output.clear();
  EXPECT_EQ(run_cli("--help", output), 0);
  EXPECT_NE(output.find("heatmap"), std::string::npos);
}

TEST_F(CommandsTest, CliRunEndToEnd) {
  std::string output;
  const fs::path cfg = write_config(small_scene());
  const fs::path out = dir_.path() / "cli_out";
  EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + out.string() + " --verbose", output), 0) << output;
  EXPECT_NE(output.find("batch 0 frames=24"), std::string::npos) << output;
  EXPECT_TRUE(fs::exists(out / artifacts::kEvents));
}
#endif

}  // namespace
}  // namespace pflow
