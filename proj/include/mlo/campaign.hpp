#pragma once

#include <string>
#include <vector>

#include "mlo/engine.hpp"
#include "mlo/serialize.hpp"

namespace mlo {

enum class CampaignMode { kEbbc, kBudgetRatio, kSensitivityK, kSensitivityXi };

std::string to_string(CampaignMode mode);

/// Per-dimension budget factors; the effective policy for dimension n is
/// (init_factor*n, cap_factor*n, extended_multiplier).
struct BudgetFactors {
  int init_factor = 4;
  int cap_factor = 5;
  int extended_multiplier = 7;
};

struct CampaignConfig {
  MpbConfig problem;                    // dims overridden per cell
  std::vector<AlgorithmSpec> algorithms;  // defaults to the standard comparison set
  std::vector<int> dims{4, 6, 8, 10};
  int seeds = 20;
  CampaignMode mode = CampaignMode::kEbbc;
  std::vector<int> sweep_k{1, 5, 15, 30, 50};
  std::vector<int> sweep_xi{1, 5, 10};
  BudgetFactors budget;
  std::string output_dir = "mlo_out";
  int parallelism = 0;  // 0 = hardware concurrency
  std::uint64_t campaign_seed = 42;
  bool persist_meta_params = true;

  void validate() const;
};

/// Strict JSON parse: unknown keys rejected, defaults filled. Accepts a
/// file path or inline JSON text (detected by a leading '{').
CampaignConfig parse_config(const std::string& path_or_json);
CampaignConfig parse_config_json(const json& j);
json config_to_json(const CampaignConfig& config);

/// Desk-scale preset: dims {4, 6}, 5 seeds, 10 environments.
void apply_desk_preset(CampaignConfig& config);

/// One runnable unit of a campaign.
struct CampaignCell {
  AlgorithmSpec spec;
  int dims = 0;
  int seed_index = 0;
  std::uint64_t run_seed = 0;
  MpbConfig problem;
  BudgetPolicy budget;
  bool extended = false;  // budget-ratio peer run
  std::string trace_path;
};

/// Deterministic cell list for the campaign (normal-mode runs).
std::vector<CampaignCell> campaign_cells(const CampaignConfig& config);

/// Executes all cells (skipping completed ones), then analysis. Returns 0
/// when every cell succeeded.
int run_campaign(const CampaignConfig& config);

/// Recomputes all analysis artifacts from persisted traces.
int analyze(const std::string& output_dir);

/// Prints the summary tables to stdout.
int report(const std::string& output_dir);

}  // namespace mlo
