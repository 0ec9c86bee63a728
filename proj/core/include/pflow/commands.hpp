#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace pflow {

enum class Command : std::uint8_t { kRun, kHeatmap, kEval, kBench };

std::optional<Command> command_from_string(std::string_view name) noexcept;

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  std::filesystem::path events;  // heatmap only: render from a saved event log instead of a live run
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

// Runs one command. Progress goes to `out`; a failure is reported as a single
// "pflow: error[<kind>]: ..." line on `err` and mapped to kExitConfig or
// kExitRuntime.
int run_command(Command cmd, const CommandOptions& opts, std::ostream& out, std::ostream& err);

// Artifact file names, relative to the output directory.
namespace artifacts {
inline constexpr std::string_view kEvents = "events.log";
inline constexpr std::string_view kTracks = "tracks.txt";
inline constexpr std::string_view kSummary = "summary.txt";
inline constexpr std::string_view kStats = "stats.txt";
inline constexpr std::string_view kPrDetector = "pr_detector.txt";
inline constexpr std::string_view kPrTracker = "pr_tracker.txt";
inline constexpr std::string_view kEvalReport = "eval_report.txt";
inline constexpr std::string_view kSweep = "sweep.txt";
inline constexpr std::string_view kBench = "bench.txt";
std::string overlay_name(std::size_t slot);
std::string heatmap_name(std::size_t slot);
}  // namespace artifacts

}  // namespace pflow
