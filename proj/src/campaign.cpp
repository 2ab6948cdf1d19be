#include "mlo/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mlo/analysis.hpp"

namespace fs = std::filesystem;

namespace mlo {

std::string to_string(CampaignMode mode) {
  switch (mode) {
    case CampaignMode::kEbbc: return "ebbc";
    case CampaignMode::kBudgetRatio: return "budget_ratio";
    case CampaignMode::kSensitivityK: return "sensitivity_K";
    case CampaignMode::kSensitivityXi: return "sensitivity_xi";
  }
  return "?";
}

namespace {

CampaignMode mode_from_string(const std::string& s) {
  if (s == "ebbc") return CampaignMode::kEbbc;
  if (s == "budget_ratio") return CampaignMode::kBudgetRatio;
  if (s == "sensitivity_K") return CampaignMode::kSensitivityK;
  if (s == "sensitivity_xi") return CampaignMode::kSensitivityXi;
  throw ConfigError("unknown campaign mode: " + s);
}

std::vector<AlgorithmSpec> default_algorithms(CampaignMode mode) {
  switch (mode) {
    case CampaignMode::kSensitivityK:
      return {AlgorithmSpec::mlbo()};
    case CampaignMode::kSensitivityXi:
      return {AlgorithmSpec::mlddeo(EaKind::kCmaEs, SurrogateKind::kNn)};
    default:
      return {AlgorithmSpec::mlbo(), AlgorithmSpec::rbo(), AlgorithmSpec::cbo(),
              AlgorithmSpec::mlddeo(EaKind::kDe, SurrogateKind::kGpr),
              AlgorithmSpec::rddeo(EaKind::kDe, SurrogateKind::kGpr)};
  }
}

std::string resolve_output_dir(const std::string& dir) {
  const char* root = std::getenv("MLO_OUTPUT_ROOT");
  if (root && *root && fs::path(dir).is_relative())
    return (fs::path(root) / dir).string();
  return dir;
}

}  // namespace

void CampaignConfig::validate() const {
  if (algorithms.empty()) throw ConfigError("campaign: no algorithms");
  for (const auto& a : algorithms) a.validate();
  if (dims.empty()) throw ConfigError("campaign: no dimensions");
  for (int d : dims)
    if (d < 1) throw ConfigError("campaign: dimensions must be positive");
  if (seeds < 1) throw ConfigError("campaign: seeds must be >= 1");
  if (budget.init_factor < 1 || budget.cap_factor < 1 || budget.extended_multiplier < 1)
    throw ConfigError("campaign: invalid budget factors");
  for (int k : sweep_k)
    if (k < 1) throw ConfigError("campaign: sweep K values must be positive");
  for (int x : sweep_xi)
    if (x < 1) throw ConfigError("campaign: sweep xi values must be positive");
  if (parallelism < 0) throw ConfigError("campaign: parallelism must be >= 0");
  if (output_dir.empty()) throw ConfigError("campaign: output_dir required");
  if (mode == CampaignMode::kSensitivityK && !algorithms.front().meta_enabled())
    throw ConfigError("campaign: K sweep needs a meta-learning algorithm");
  if (mode == CampaignMode::kSensitivityXi) {
    const auto& base = algorithms.front();
    if (base.bo_family() || base.surrogate != SurrogateKind::kNn)
      throw ConfigError("campaign: xi sweep needs an NN-based EA algorithm");
  }
}

CampaignConfig parse_config_json(const json& j) {
  check_keys(j,
             {"problem", "algorithms", "dims", "seeds", "mode", "sweep_k", "sweep_xi",
              "budget", "output_dir", "parallelism", "campaign_seed",
              "persist_meta_params"},
             "campaign");
  CampaignConfig c;
  if (j.contains("mode")) c.mode = mode_from_string(j["mode"].get<std::string>());
  if (j.contains("problem")) c.problem = j["problem"].get<MpbConfig>();
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& aj : j["algorithms"]) c.algorithms.push_back(aj.get<AlgorithmSpec>());
  } else {
    c.algorithms = default_algorithms(c.mode);
  }
  if (j.contains("dims")) c.dims = j["dims"].get<std::vector<int>>();
  if (j.contains("seeds")) c.seeds = j["seeds"].get<int>();
  if (j.contains("sweep_k")) c.sweep_k = j["sweep_k"].get<std::vector<int>>();
  if (j.contains("sweep_xi")) c.sweep_xi = j["sweep_xi"].get<std::vector<int>>();
  if (j.contains("budget")) {
    check_keys(j["budget"], {"init_factor", "cap_factor", "extended_multiplier"},
               "budget");
    const auto& b = j["budget"];
    if (b.contains("init_factor")) c.budget.init_factor = b["init_factor"].get<int>();
    if (b.contains("cap_factor")) c.budget.cap_factor = b["cap_factor"].get<int>();
    if (b.contains("extended_multiplier"))
      c.budget.extended_multiplier = b["extended_multiplier"].get<int>();
  }
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("parallelism")) c.parallelism = j["parallelism"].get<int>();
  if (j.contains("campaign_seed")) c.campaign_seed = j["campaign_seed"].get<std::uint64_t>();
  if (j.contains("persist_meta_params"))
    c.persist_meta_params = j["persist_meta_params"].get<bool>();
  c.validate();
  return c;
}

CampaignConfig parse_config(const std::string& path_or_json) {
  json j;
  const auto first = path_or_json.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && path_or_json[first] == '{') {
    j = json::parse(path_or_json);
  } else {
    std::ifstream in(path_or_json);
    if (!in) throw ConfigError("cannot read config file: " + path_or_json);
    in >> j;
  }
  return parse_config_json(j);
}

json config_to_json(const CampaignConfig& c) {
  json algos = json::array();
  for (const auto& a : c.algorithms) algos.push_back(a);
  return json{{"problem", c.problem},
              {"algorithms", std::move(algos)},
              {"dims", c.dims},
              {"seeds", c.seeds},
              {"mode", to_string(c.mode)},
              {"sweep_k", c.sweep_k},
              {"sweep_xi", c.sweep_xi},
              {"budget",
               {{"init_factor", c.budget.init_factor},
                {"cap_factor", c.budget.cap_factor},
                {"extended_multiplier", c.budget.extended_multiplier}}},
              {"output_dir", c.output_dir},
              {"parallelism", c.parallelism},
              {"campaign_seed", c.campaign_seed},
              {"persist_meta_params", c.persist_meta_params}};
}

void apply_desk_preset(CampaignConfig& config) {
  config.dims = {4, 6};
  config.seeds = 5;
  config.problem.num_environments = 10;
}

namespace {

/// Sweep modes expand the base algorithm into labeled variants.
std::vector<AlgorithmSpec> effective_algorithms(const CampaignConfig& config) {
  switch (config.mode) {
    case CampaignMode::kSensitivityK: {
      std::vector<AlgorithmSpec> out;
      for (int k : config.sweep_k) {
        AlgorithmSpec s = config.algorithms.front();
        if (!s.meta) s.meta = MetaConfig{};
        s.meta->few_shot_k = k;
        s.label = s.id() + "-K" + std::to_string(k);
        out.push_back(std::move(s));
      }
      return out;
    }
    case CampaignMode::kSensitivityXi: {
      std::vector<AlgorithmSpec> out;
      for (int xi : config.sweep_xi) {
        AlgorithmSpec s = config.algorithms.front();
        s.xi = xi;
        s.label = s.id() + "-XI" + std::to_string(xi);
        out.push_back(std::move(s));
      }
      return out;
    }
    default:
      return config.algorithms;
  }
}

std::string cell_stem(const std::string& algo, int dims, int seed) {
  return algo + "__n" + std::to_string(dims) + "__s" + std::to_string(seed);
}

MpbConfig cell_problem(const CampaignConfig& config, int dims, int seed_index) {
  MpbConfig p = config.problem;
  if (p.lower.size() != 0 && p.lower.size() != dims)
    throw ConfigError("campaign: explicit problem bounds do not match dims=" +
                      std::to_string(dims));
  p.dims = dims;
  p.seed = derive_seed(config.problem.seed, "problem", static_cast<std::uint64_t>(dims),
                       static_cast<std::uint64_t>(seed_index));
  p.finalize();
  p.validate();
  return p;
}

BudgetPolicy cell_budget(const CampaignConfig& config, int dims) {
  BudgetPolicy b;
  b.init_samples = config.budget.init_factor * dims;
  b.max_fe_per_env = config.budget.cap_factor * dims;
  b.extended_cap_multiplier = config.budget.extended_multiplier;
  b.total_environments = config.problem.num_environments;
  return b;
}

}  // namespace

std::vector<CampaignCell> campaign_cells(const CampaignConfig& config) {
  std::vector<CampaignCell> cells;
  for (const auto& spec : effective_algorithms(config)) {
    for (int d : config.dims) {
      for (int s = 0; s < config.seeds; ++s) {
        CampaignCell cell;
        cell.spec = spec;
        cell.dims = d;
        cell.seed_index = s;
        cell.run_seed = derive_seed(config.campaign_seed, spec.id(),
                                    static_cast<std::uint64_t>(d),
                                    static_cast<std::uint64_t>(s));
        cell.problem = cell_problem(config, d, s);
        cell.budget = cell_budget(config, d);
        cell.trace_path = cell_stem(spec.id(), d, s) + ".json";
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

namespace {

/// Runs tasks on a small worker pool; collects failure messages.
std::vector<std::string> run_pool(const std::vector<std::function<void()>>& tasks,
                                  const std::vector<std::string>& names,
                                  int parallelism) {
  const int workers = parallelism > 0
                          ? parallelism
                          : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::string> failures;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        tasks[i]();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        failures.push_back(names[i] + ": " + e.what());
      }
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < std::min<int>(workers, static_cast<int>(tasks.size())); ++w)
    pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  std::sort(failures.begin(), failures.end());
  return failures;
}

struct LoadedCell {
  std::string algo;
  int dims = 0;
  int seed = 0;
  RunTrace trace;
};

struct ExtResult {
  std::vector<int> counts;
  std::vector<int> ref_counts;
  double rho = 0.0;
};

std::string ext_stem(const std::string& algo, int dims, int seed) {
  return cell_stem(algo, dims, seed) + ".json";
}

std::vector<std::string> algo_order(const CampaignConfig& config) {
  std::vector<std::string> order;
  for (const auto& spec : effective_algorithms(config)) order.push_back(spec.id());
  return order;
}

// ---------------------------------------------------------------------------
// analysis emission

struct Aggregates {
  // (algo, n) -> e_bbc per seed (NaN when missing)
  std::map<std::pair<std::string, int>, std::vector<double>> ebbc;
  std::map<std::tuple<std::string, int, int>, double> rho;  // (algo,n,seed)
};

std::vector<double> present(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

void write_metrics_csv(const fs::path& dir, const CampaignConfig& config,
                       const std::vector<LoadedCell>& cells, const Aggregates& agg) {
  const int T = config.problem.num_environments;
  std::ofstream out(dir / "metrics.csv");
  out << "algo,n,seed,e_bbc,rho_c";
  for (int t = 0; t < T; ++t) out << ",err_env" << t;
  out << "\n";
  for (const auto& cell : cells) {
    out << cell.algo << ',' << cell.dims << ',' << cell.seed << ','
        << fmt_double(e_bbc(cell.trace)) << ',';
    const auto it = agg.rho.find({cell.algo, cell.dims, cell.seed});
    if (it != agg.rho.end()) out << fmt_double(it->second);
    for (const auto& env : cell.trace.envs)
      out << ',' << fmt_double(env.global_optimum - env.best_y);
    out << "\n";
  }
}

void write_pairwise_csvs(const fs::path& dir, const CampaignConfig& config,
                         const Aggregates& agg) {
  const auto order = algo_order(config);
  std::ofstream wout(dir / "wilcoxon.csv");
  wout << "n,algo_a,algo_b,p,verdict_a,w_plus,w_minus,effective_pairs,exact\n";
  std::ofstream aout(dir / "a12.csv");
  aout << "n,algo_a,algo_b,a12,class\n";

  for (int n : config.dims) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (std::size_t k = i + 1; k < order.size(); ++k) {
        const auto ia = agg.ebbc.find({order[i], n});
        const auto ib = agg.ebbc.find({order[k], n});
        if (ia == agg.ebbc.end() || ib == agg.ebbc.end()) continue;
        const auto a = present(ia->second);
        const auto b = present(ib->second);
        if (a.size() != ib->second.size() || b.size() != ia->second.size() ||
            a.size() != b.size())
          continue;  // missing cells break the pairing

        if (a.size() >= 5) {
          const auto w = wilcoxon_signed_rank(a, b);
          // E_BBC: smaller is better, so "a greater" means a loses.
          const char* verdict = w.verdict == WilcoxonVerdict::kTie ? "tie"
                                : w.verdict == WilcoxonVerdict::kAGreater ? "loss"
                                                                          : "win";
          wout << n << ',' << order[i] << ',' << order[k] << ',' << fmt_double(w.p)
               << ',' << verdict << ',' << fmt_double(w.w_plus) << ','
               << fmt_double(w.w_minus) << ',' << w.effective_pairs << ','
               << (w.exact ? 1 : 0) << "\n";
        }
        const double a12v = a12(a, b);
        aout << n << ',' << order[i] << ',' << order[k] << ',' << fmt_double(a12v)
             << ',' << to_string(a12_class(a12v)) << "\n";
      }
    }
  }
}

void write_scott_knott_csvs(const fs::path& dir, const CampaignConfig& config,
                            const Aggregates& agg) {
  const auto order = algo_order(config);
  std::ofstream out(dir / "scott_knott.csv");
  out << "n,algo,rank\n";
  std::map<std::string, std::vector<int>> pooled;

  for (int n : config.dims) {
    std::vector<std::vector<double>> groups;
    std::vector<std::string> names;
    for (const auto& algo : order) {
      const auto it = agg.ebbc.find({algo, n});
      if (it == agg.ebbc.end()) continue;
      const auto vals = present(it->second);
      if (vals.empty()) continue;
      groups.push_back(vals);
      names.push_back(algo);
    }
    if (groups.empty()) continue;
    const auto ranks = scott_knott(groups);
    for (std::size_t i = 0; i < names.size(); ++i) {
      out << n << ',' << names[i] << ',' << ranks[i] << "\n";
      pooled[names[i]].push_back(ranks[i]);
    }
  }

  std::ofstream pout(dir / "scott_knott_pooled.csv");
  pout << "algo,mean_rank,median_rank,min_rank,max_rank\n";
  for (const auto& algo : order) {
    auto it = pooled.find(algo);
    if (it == pooled.end()) continue;
    auto r = it->second;
    std::sort(r.begin(), r.end());
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / r.size();
    const double median = r.size() % 2 == 1
                              ? r[r.size() / 2]
                              : 0.5 * (r[r.size() / 2 - 1] + r[r.size() / 2]);
    pout << algo << ',' << fmt_double(mean) << ',' << fmt_double(median) << ','
         << r.front() << ',' << r.back() << "\n";
  }
}

void write_loss_curves_csv(const fs::path& dir, const std::vector<LoadedCell>& cells) {
  std::ofstream out(dir / "loss_curves.csv");
  out << "algo,n,seed,fe,env,L\n";
  for (const auto& cell : cells)
    for (const auto& pt : loss_curve(cell.trace))
      out << cell.algo << ',' << cell.dims << ',' << cell.seed << ',' << pt.fe << ','
          << pt.env << ',' << fmt_double(pt.loss) << "\n";
}

void write_meta_trace_csv(const fs::path& dir, const std::vector<LoadedCell>& cells) {
  // GPR meta traces carry exactly three parameters; export them in natural
  // space. Any other parameterization falls back to generic raw columns.
  bool all_gpr = true;
  std::size_t max_params = 0;
  for (const auto& cell : cells)
    for (const auto& env : cell.trace.envs)
      if (env.meta_trace)
        for (const auto& rec : env.meta_trace->records) {
          max_params = std::max<std::size_t>(max_params, rec.params.size());
          if (rec.params.size() != 3) all_gpr = false;
        }

  std::ofstream out(dir / "meta_trace.csv");
  out << "algo,n,seed,env,batch,al_b";
  if (all_gpr && max_params == 3)
    out << ",lengthscale,signal_var,noise_var";
  else
    for (std::size_t i = 0; i < max_params; ++i) out << ",param" << i;
  out << "\n";

  for (const auto& cell : cells)
    for (const auto& env : cell.trace.envs) {
      if (!env.meta_trace) continue;
      for (const auto& rec : env.meta_trace->records) {
        out << cell.algo << ',' << cell.dims << ',' << cell.seed << ',' << env.env
            << ',' << rec.batch << ',' << fmt_double(rec.avg_loss);
        if (all_gpr && max_params == 3 && rec.params.size() == 3) {
          for (int i = 0; i < 3; ++i) out << ',' << fmt_double(std::exp(rec.params[i]));
        } else {
          for (std::size_t i = 0; i < max_params; ++i)
            if (i < static_cast<std::size_t>(rec.params.size()))
              out << ',' << fmt_double(rec.params[i]);
            else
              out << ',';
        }
        out << "\n";
      }
    }
}

void write_ratios_csv(const fs::path& dir, const CampaignConfig& config,
                      const Aggregates& agg) {
  if (config.mode != CampaignMode::kBudgetRatio) return;
  std::ofstream out(dir / "ratios.csv");
  out << "algo,n,seed,rho_c\n";
  for (const auto& [key, rho] : agg.rho) {
    const auto& [algo, n, seed] = key;
    out << algo << ',' << n << ',' << seed << ',' << fmt_double(rho) << "\n";
  }
}

void write_summary_csv(const fs::path& dir, const CampaignConfig& config,
                       const Aggregates& agg) {
  const auto order = algo_order(config);
  std::ofstream out(dir / "summary.csv");
  out << "algo,n,count,mean_ebbc,std_ebbc,mean_rho\n";
  for (const auto& algo : order) {
    for (int n : config.dims) {
      const auto it = agg.ebbc.find({algo, n});
      if (it == agg.ebbc.end()) continue;
      const auto vals = present(it->second);
      if (vals.empty()) continue;
      const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      const double sd = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1)) : 0.0;
      double rho_sum = 0.0;
      int rho_count = 0;
      for (const auto& [key, rho] : agg.rho) {
        if (std::get<0>(key) == algo && std::get<1>(key) == n) {
          rho_sum += rho;
          ++rho_count;
        }
      }
      out << algo << ',' << n << ',' << vals.size() << ',' << fmt_double(mean) << ','
          << fmt_double(sd) << ',';
      if (rho_count > 0) out << fmt_double(rho_sum / rho_count);
      out << "\n";
    }
  }
}

void write_schema(const fs::path& dir) {
  std::ofstream out(dir / "schema.md");
  out << "# Output schema\n\n"
      << "All CSV files are comma-separated with a header row; floating-point\n"
      << "values use shortest round-trip formatting.\n\n"
      << "## traces/<algo>__n<dims>__s<seed>.json\n"
      << "Full run trace: per-FE records (env, fe, x, y, best) and per-environment\n"
      << "records (best_x, best_y, global_optimum, fe_count, final_params,\n"
      << "meta_trace when meta-learning ran).\n\n"
      << "## traces/<algo>__n<dims>__s<seed>.csv\n"
      << "algo,seed,n,env,fe,y_true,best_so_far - flat per-FE view of the trace.\n\n"
      << "## metrics.csv\n"
      << "algo,n,seed,e_bbc,rho_c,err_env<t>... - per-run E_BBC, budget ratio\n"
      << "(budget_ratio mode only), and the per-environment final errors.\n\n"
      << "## wilcoxon.csv\n"
      << "n,algo_a,algo_b,p,verdict_a,w_plus,w_minus,effective_pairs,exact -\n"
      << "two-sided Wilcoxon signed-rank on paired per-seed E_BBC values at level\n"
      << "0.05. Zero differences are dropped (classic variant, not Pratt); tied\n"
      << "absolute differences get averaged ranks. verdict_a is win/tie/loss for\n"
      << "algo_a under smaller-is-better. exact=1 marks the exact null\n"
      << "distribution (<= 25 effective pairs), 0 the continuity-corrected normal\n"
      << "approximation.\n\n"
      << "## a12.csv\n"
      << "n,algo_a,algo_b,a12,class - Vargha-Delaney A12 of the E_BBC samples,\n"
      << "P(a>b)+0.5P(a=b); classes large/medium/small/equivalent at\n"
      << "|A12-0.5| >= 0.21 / 0.14 / 0.06.\n\n"
      << "## scott_knott.csv / scott_knott_pooled.csv\n"
      << "Per-dimension Scott-Knott cluster ranks of per-seed E_BBC samples\n"
      << "(rank 1 = best cluster, i.e. smallest mean), plus the across-dimension\n"
      << "pooled summary per algorithm.\n\n"
      << "## loss_curves.csv\n"
      << "algo,n,seed,fe,env,L - optimality gap of the best-so-far solution at\n"
      << "every FE; fe is the global 1-based index, the gap resets per\n"
      << "environment.\n\n"
      << "## meta_trace.csv\n"
      << "algo,n,seed,env,batch,al_b,... - per-batch running-average meta-loss\n"
      << "(AL_B) and parameter snapshots (MP_B). GPR parameters are exported in\n"
      << "natural space as lengthscale,signal_var,noise_var; other models use raw\n"
      << "param<i> columns.\n\n"
      << "## ratios.csv (budget_ratio mode)\n"
      << "algo,n,seed,rho_c - mean over environments of peer-FE / reference-FE\n"
      << "to reach the reference run's per-environment best value.\n\n"
      << "## summary.csv\n"
      << "algo,n,count,mean_ebbc,std_ebbc,mean_rho - aggregation over seeds.\n";
}

Aggregates build_aggregates(const CampaignConfig& config,
                            const std::vector<LoadedCell>& cells,
                            const fs::path& ext_dir) {
  Aggregates agg;
  for (const auto& algo : algo_order(config))
    for (int n : config.dims)
      agg.ebbc[{algo, n}] =
          std::vector<double>(config.seeds, std::numeric_limits<double>::quiet_NaN());
  for (const auto& cell : cells)
    agg.ebbc[{cell.algo, cell.dims}][cell.seed] = e_bbc(cell.trace);

  if (config.mode == CampaignMode::kBudgetRatio && fs::exists(ext_dir)) {
    for (const auto& algo : algo_order(config)) {
      for (int n : config.dims) {
        for (int s = 0; s < config.seeds; ++s) {
          const fs::path p = ext_dir / ext_stem(algo, n, s);
          if (!fs::exists(p)) continue;
          std::ifstream in(p);
          json j;
          in >> j;
          agg.rho[{algo, n, s}] = j.at("rho").get<double>();
        }
      }
    }
  }
  return agg;
}

std::vector<LoadedCell> load_cells(const CampaignConfig& config, const fs::path& traces) {
  std::vector<LoadedCell> cells;
  for (const auto& spec : effective_algorithms(config)) {
    for (int d : config.dims) {
      for (int s = 0; s < config.seeds; ++s) {
        const fs::path p = traces / (cell_stem(spec.id(), d, s) + ".json");
        if (!fs::exists(p)) continue;
        LoadedCell cell;
        cell.algo = spec.id();
        cell.dims = d;
        cell.seed = s;
        cell.trace = load_trace(p.string());
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

void write_analysis(const fs::path& dir, const CampaignConfig& config) {
  const auto cells = load_cells(config, dir / "traces");
  const auto agg = build_aggregates(config, cells, dir / "ext");
  write_metrics_csv(dir, config, cells, agg);
  write_pairwise_csvs(dir, config, agg);
  write_scott_knott_csvs(dir, config, agg);
  write_loss_curves_csv(dir, cells);
  write_meta_trace_csv(dir, cells);
  write_ratios_csv(dir, config, agg);
  write_summary_csv(dir, config, agg);
  write_schema(dir);
}

}  // namespace

int run_campaign(const CampaignConfig& config_in) {
  CampaignConfig config = config_in;
  config.validate();
  config.output_dir = resolve_output_dir(config.output_dir);

  const fs::path dir(config.output_dir);
  const fs::path traces = dir / "traces";
  fs::create_directories(traces);

  const auto t_start = std::chrono::steady_clock::now();
  const auto cells = campaign_cells(config);

  // Normal-budget runs (skipping completed cells).
  std::vector<std::function<void()>> tasks;
  std::vector<std::string> names;
  int skipped = 0;
  for (const auto& cell : cells) {
    const fs::path jpath = traces / cell.trace_path;
    if (fs::exists(jpath)) {
      ++skipped;
      continue;
    }
    names.push_back(cell.trace_path);
    tasks.push_back([cell, jpath, &config] {
      MpbProblem problem(cell.problem);
      const RunTrace trace = run_algorithm(problem, cell.spec, cell.budget, cell.run_seed);
      save_trace(trace, jpath.string(), config.persist_meta_params);
      save_trace_csv(trace, (jpath.parent_path() /
                             (jpath.stem().string() + ".csv")).string());
    });
  }
  auto failures = run_pool(tasks, names, config.parallelism);
  const int ran = static_cast<int>(tasks.size()) - static_cast<int>(failures.size());

  // Budget-ratio mode: extended-cap runs against the reference algorithm's
  // per-environment targets.
  if (config.mode == CampaignMode::kBudgetRatio) {
    const fs::path ext_dir = dir / "ext";
    fs::create_directories(ext_dir);
    const auto algos = effective_algorithms(config);
    const std::string ref_id = algos.front().id();

    std::vector<std::function<void()>> ext_tasks;
    std::vector<std::string> ext_names;
    for (const auto& spec : algos) {
      for (int d : config.dims) {
        for (int s = 0; s < config.seeds; ++s) {
          const fs::path out_path = ext_dir / ext_stem(spec.id(), d, s);
          if (fs::exists(out_path)) continue;
          const fs::path ref_path = traces / (cell_stem(ref_id, d, s) + ".json");
          ext_names.push_back(out_path.filename().string());
          ext_tasks.push_back([spec, d, s, out_path, ref_path, &config] {
            if (!fs::exists(ref_path))
              throw std::runtime_error("missing reference trace " + ref_path.string());
            const RunTrace ref = load_trace(ref_path.string());
            const auto targets = env_best_targets(ref);
            const auto ref_counts = fe_to_best_counts(ref);
            MpbProblem problem(cell_problem(config, d, s));
            const auto counts =
                run_extended_budget(problem, spec, cell_budget(config, d), targets,
                                    derive_seed(config.campaign_seed, spec.id(),
                                                static_cast<std::uint64_t>(d),
                                                static_cast<std::uint64_t>(s)));
            const json j{{"counts", counts},
                         {"ref_counts", ref_counts},
                         {"rho", budget_ratio(counts, ref_counts)}};
            std::ofstream out(out_path);
            out << j.dump();
          });
        }
      }
    }
    auto ext_failures = run_pool(ext_tasks, ext_names, config.parallelism);
    failures.insert(failures.end(), ext_failures.begin(), ext_failures.end());
  }

  write_analysis(dir, config);

  const auto t_end = std::chrono::steady_clock::now();
  const double secs = std::chrono::duration<double>(t_end - t_start).count();

  if (!failures.empty()) {
    std::ofstream fout(dir / "failures.txt");
    for (const auto& f : failures) fout << f << "\n";
  }

  json manifest{{"config", config_to_json(config)},
                {"version", "0.1.0"},
                {"cells_total", cells.size()},
                {"cells_run", ran},
                {"cells_skipped", skipped},
                {"cells_failed", failures.size()},
                {"duration_seconds", secs}};
  {
    std::ofstream mout(dir / "manifest.json");
    mout << manifest.dump(2);
  }

  for (const auto& f : failures) std::cerr << "[cell failed] " << f << "\n";
  std::cout << "campaign: " << ran << " run, " << skipped << " skipped, "
            << failures.size() << " failed; outputs in " << dir.string() << "\n";
  return failures.empty() ? 0 : 1;
}

namespace {

CampaignConfig config_from_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + dir.string());
  json j;
  in >> j;
  return parse_config_json(j.at("config"));
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(field);
    if (!line.empty() && line.back() == ',') row.push_back("");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int analyze(const std::string& output_dir) {
  const fs::path dir(resolve_output_dir(output_dir));
  const CampaignConfig config = config_from_manifest(dir);
  write_analysis(dir, config);
  std::cout << "analysis artifacts regenerated in " << dir.string() << "\n";
  return 0;
}

int report(const std::string& output_dir) {
  const fs::path dir(resolve_output_dir(output_dir));
  if (!fs::exists(dir / "summary.csv"))
    throw std::runtime_error("missing summary.csv; run the campaign or `analyze` first");

  std::cout << "== E_BBC mean +/- std per algorithm and dimension ==\n";
  for (const auto& row : read_csv(dir / "summary.csv")) {
    if (row.size() < 5 || row[0] == "algo") continue;
    std::cout << "  " << row[0] << "  n=" << row[1] << "  E_BBC=" << row[3]
              << " +/- " << row[4];
    if (row.size() > 5 && !row[5].empty()) std::cout << "  rho_c=" << row[5];
    std::cout << "\n";
  }

  if (fs::exists(dir / "wilcoxon.csv")) {
    const auto rows = read_csv(dir / "wilcoxon.csv");
    if (rows.size() > 1) {
      std::cout << "\n== Wilcoxon signed-rank (level 0.05, verdict for algo_a) ==\n";
      for (const auto& row : rows) {
        if (row.size() < 5 || row[0] == "n") continue;
        std::cout << "  n=" << row[0] << "  " << row[1] << " vs " << row[2]
                  << "  p=" << row[3] << "  " << row[4] << "\n";
      }
    }
  }

  if (fs::exists(dir / "a12.csv")) {
    const auto rows = read_csv(dir / "a12.csv");
    if (rows.size() > 1) {
      std::cout << "\n== A12 effect sizes ==\n";
      for (const auto& row : rows) {
        if (row.size() < 5 || row[0] == "n") continue;
        std::cout << "  n=" << row[0] << "  " << row[1] << " vs " << row[2]
                  << "  A12=" << row[3] << "  (" << row[4] << ")\n";
      }
    }
  }

  if (fs::exists(dir / "scott_knott.csv")) {
    const auto rows = read_csv(dir / "scott_knott.csv");
    if (rows.size() > 1) {
      std::cout << "\n== Scott-Knott ranks (1 = best) ==\n";
      for (const auto& row : rows) {
        if (row.size() < 3 || row[0] == "n") continue;
        std::cout << "  n=" << row[0] << "  " << row[1] << "  rank " << row[2] << "\n";
      }
    }
  }
  return 0;
}

}  // namespace mlo
