#pragma once

#include <json.hpp>
#include <string>

#include "mlo/engine.hpp"

namespace mlo {

using json = nlohmann::json;

// Eigen carriers
json vec_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vec_from_json(const json& j);

// ADL hooks for nlohmann::json
void to_json(json& j, const MpbConfig& c);
void from_json(const json& j, MpbConfig& c);
void to_json(json& j, const MpbState& s);  // landscape snapshot export
void to_json(json& j, const SurrogateParams& p);
void from_json(const json& j, SurrogateParams& p);
void to_json(json& j, const MetaConfig& c);
void from_json(const json& j, MetaConfig& c);
void to_json(json& j, const MetaTrace& t);
void from_json(const json& j, MetaTrace& t);
void to_json(json& j, const BudgetPolicy& b);
void from_json(const json& j, BudgetPolicy& b);
void to_json(json& j, const AlgorithmSpec& s);
void from_json(const json& j, AlgorithmSpec& s);
void to_json(json& j, const RunTrace& t);
void from_json(const json& j, RunTrace& t);

/// Shortest round-trip decimal representation; keeps CSV output
/// byte-stable across runs.
std::string fmt_double(double v);

/// Strict-mode helper: rejects keys outside the allowed set.
void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& path);

void save_trace(const RunTrace& trace, const std::string& json_path,
                bool include_meta_params = true);
RunTrace load_trace(const std::string& json_path);

/// Flat per-FE rows: algo, seed, n, env, fe, y_true, best_so_far.
void save_trace_csv(const RunTrace& trace, const std::string& csv_path);

}  // namespace mlo
