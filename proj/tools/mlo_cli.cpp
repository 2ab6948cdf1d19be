// Experiment harness entry point: schedules seeded runs across algorithms,
// dimensions, and seeds, persists traces, and produces the comparison
// tables. See README.md for config examples.

#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <string>

#include "mlo/campaign.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mlo - meta-learning-assisted optimization for expensive dynamic problems"};
  app.require_subcommand(1);

  std::string config_arg = "{}";
  bool desk = false;
  int parallelism = -1;
  auto* run = app.add_subcommand("run", "Execute a campaign from a JSON config");
  run->add_option("--config", config_arg, "Config file path or inline JSON");
  run->add_flag("--preset-desk,--preset", desk,
                "Desk-scale preset: dims {4,6}, 5 seeds, 10 environments");
  run->add_option("--parallelism", parallelism, "Worker pool size (0 = all cores)");

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "Print summary tables for a campaign");
  rep->add_option("--dir", report_dir, "Campaign output directory")->required();

  std::string analyze_dir;
  auto* ana = app.add_subcommand("analyze", "Recompute analysis CSVs from traces");
  ana->add_option("--dir", analyze_dir, "Campaign output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      mlo::CampaignConfig config = mlo::parse_config(config_arg);
      if (desk) mlo::apply_desk_preset(config);
      if (parallelism >= 0) config.parallelism = parallelism;
      return mlo::run_campaign(config);
    }
    if (rep->parsed()) return mlo::report(report_dir);
    if (ana->parsed()) return mlo::analyze(analyze_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
