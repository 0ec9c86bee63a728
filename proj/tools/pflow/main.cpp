#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pflow/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pflow: person-flow tracking, heat maps and evaluation"};
  app.require_subcommand(1);

  pflow::CommandOptions opts;
  std::string config;
  std::string out_dir = "out";
  std::string events;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Configuration file")->required();
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override [general] seed");
    sub->add_flag("--verbose", opts.verbose, "Print per-batch timing lines");
  };
  CLI::App* run = app.add_subcommand("run", "Run the tracker and write the event log, track boxes and summary");
  CLI::App* heatmap = app.add_subcommand("heatmap", "Render heat-map overlays and visit statistics");
  CLI::App* eval = app.add_subcommand("eval", "Precision/recall, AP and id switches against ground truth");
  CLI::App* bench = app.add_subcommand("bench", "Sequential vs pipelined throughput table");
  for (CLI::App* sub : {run, heatmap, eval, bench}) {
    add_common(sub);
  }
  heatmap->add_option("--events", events, "Existing event log to render instead of a live run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "pflow: error[usage]: " << msg << '\n';
    return pflow::kExitConfig;
  }

  opts.config = config;
  opts.out_dir = out_dir;
  opts.events = events;
  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed") > 0) {
    opts.seed = seed;
  }
  const auto cmd = pflow::command_from_string(chosen->get_name());
  return pflow::run_command(*cmd, opts, std::cout, std::cerr);
}
