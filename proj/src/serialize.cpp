#include "mlo/serialize.hpp"

#include <charconv>
#include <fstream>

namespace mlo {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

void to_json(json& j, const MpbConfig& c) {
  j = json{{"dims", c.dims},
           {"num_peaks", c.num_peaks},
           {"lower", vec_to_json(c.lower)},
           {"upper", vec_to_json(c.upper)},
           {"height_range", {c.height_min, c.height_max}},
           {"width_range", {c.width_min, c.width_max}},
           {"height_severity", c.height_severity},
           {"width_severity", c.width_severity},
           {"shift_severity", c.shift_severity},
           {"correlation", c.correlation},
           {"num_environments", c.num_environments},
           {"seed", c.seed}};
}

void from_json(const json& j, MpbConfig& c) {
  check_keys(j,
             {"dims", "num_peaks", "lower", "upper", "height_range", "width_range",
              "height_severity", "width_severity", "shift_severity", "correlation",
              "num_environments", "seed"},
             "problem");
  c = MpbConfig{};
  if (j.contains("dims")) c.dims = j["dims"].get<int>();
  if (j.contains("num_peaks")) c.num_peaks = j["num_peaks"].get<int>();
  if (j.contains("lower")) c.lower = vec_from_json(j["lower"]);
  if (j.contains("upper")) c.upper = vec_from_json(j["upper"]);
  if (j.contains("height_range")) {
    c.height_min = j["height_range"][0].get<double>();
    c.height_max = j["height_range"][1].get<double>();
  }
  if (j.contains("width_range")) {
    c.width_min = j["width_range"][0].get<double>();
    c.width_max = j["width_range"][1].get<double>();
  }
  if (j.contains("height_severity")) c.height_severity = j["height_severity"].get<double>();
  if (j.contains("width_severity")) c.width_severity = j["width_severity"].get<double>();
  if (j.contains("shift_severity")) c.shift_severity = j["shift_severity"].get<double>();
  if (j.contains("correlation")) c.correlation = j["correlation"].get<double>();
  if (j.contains("num_environments")) c.num_environments = j["num_environments"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  // Bounds stay empty unless given explicitly; they are filled per-cell once
  // the dimension is known.
}

void to_json(json& j, const MpbState& s) {
  json peaks = json::array();
  for (const auto& p : s.peaks)
    peaks.push_back(json{{"center", vec_to_json(p.center)},
                         {"height", p.height},
                         {"width", p.width}});
  j = json{{"time_step", s.time_step},
           {"lower", vec_to_json(s.lower)},
           {"upper", vec_to_json(s.upper)},
           {"peaks", std::move(peaks)}};
}

void to_json(json& j, const SurrogateParams& p) {
  j = json{{"kind", p.kind == SurrogateKind::kGpr ? "GPR" : "NN"},
           {"input_dim", p.input_dim},
           {"values", vec_to_json(p.values)}};
}

void from_json(const json& j, SurrogateParams& p) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "GPR")
    p.kind = SurrogateKind::kGpr;
  else if (kind == "NN")
    p.kind = SurrogateKind::kNn;
  else
    throw ConfigError("surrogate kind must be GPR or NN");
  p.input_dim = j.value("input_dim", 0);
  p.values = vec_from_json(j.at("values"));
}

void to_json(json& j, const MetaConfig& c) {
  j = json{{"few_shot_k", c.few_shot_k},
           {"tasks_per_batch", c.tasks_per_batch},
           {"inner_lr", c.inner_lr},
           {"outer_lr", c.outer_lr},
           {"max_epochs", c.max_epochs},
           {"convergence_tol", c.convergence_tol},
           {"first_order", c.first_order},
           {"adapt_max_iters", c.adapt_max_iters},
           {"adapt_tol", c.adapt_tol},
           {"use_adam", c.use_adam}};
}

void from_json(const json& j, MetaConfig& c) {
  check_keys(j,
             {"few_shot_k", "tasks_per_batch", "inner_lr", "outer_lr", "max_epochs",
              "convergence_tol", "first_order", "adapt_max_iters", "adapt_tol",
              "use_adam"},
             "meta");
  c = MetaConfig{};
  if (j.contains("few_shot_k")) c.few_shot_k = j["few_shot_k"].get<int>();
  if (j.contains("tasks_per_batch")) c.tasks_per_batch = j["tasks_per_batch"].get<int>();
  if (j.contains("inner_lr")) c.inner_lr = j["inner_lr"].get<double>();
  if (j.contains("outer_lr")) c.outer_lr = j["outer_lr"].get<double>();
  if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("convergence_tol")) c.convergence_tol = j["convergence_tol"].get<double>();
  if (j.contains("first_order")) c.first_order = j["first_order"].get<bool>();
  if (j.contains("adapt_max_iters")) c.adapt_max_iters = j["adapt_max_iters"].get<int>();
  if (j.contains("adapt_tol")) c.adapt_tol = j["adapt_tol"].get<double>();
  if (j.contains("use_adam")) c.use_adam = j["use_adam"].get<bool>();
}

void to_json(json& j, const MetaTrace& t) {
  json records = json::array();
  for (const auto& r : t.records)
    records.push_back(json{
        {"batch", r.batch}, {"avg_loss", r.avg_loss}, {"params", vec_to_json(r.params)}});
  j = json{{"records", std::move(records)}};
}

void from_json(const json& j, MetaTrace& t) {
  t.records.clear();
  for (const auto& rj : j.at("records")) {
    MetaBatchRecord r;
    r.batch = rj.at("batch").get<int>();
    r.avg_loss = rj.at("avg_loss").get<double>();
    if (rj.contains("params")) r.params = vec_from_json(rj["params"]);
    t.records.push_back(std::move(r));
  }
}

void to_json(json& j, const BudgetPolicy& b) {
  j = json{{"init_samples", b.init_samples},
           {"max_fe_per_env", b.max_fe_per_env},
           {"extended_cap_multiplier", b.extended_cap_multiplier},
           {"total_environments", b.total_environments}};
}

void from_json(const json& j, BudgetPolicy& b) {
  check_keys(j,
             {"init_samples", "max_fe_per_env", "extended_cap_multiplier",
              "total_environments"},
             "budget");
  b = BudgetPolicy{};
  if (j.contains("init_samples")) b.init_samples = j["init_samples"].get<int>();
  if (j.contains("max_fe_per_env")) b.max_fe_per_env = j["max_fe_per_env"].get<int>();
  if (j.contains("extended_cap_multiplier"))
    b.extended_cap_multiplier = j["extended_cap_multiplier"].get<int>();
  if (j.contains("total_environments"))
    b.total_environments = j["total_environments"].get<int>();
}

namespace {

AlgoFamily family_from_string(const std::string& s) {
  if (s == "MLBO") return AlgoFamily::kMlbo;
  if (s == "MLDDEO") return AlgoFamily::kMlddeo;
  if (s == "RBO") return AlgoFamily::kRbo;
  if (s == "CBO") return AlgoFamily::kCbo;
  if (s == "RDDEO") return AlgoFamily::kRddeo;
  if (s == "SAEA") return AlgoFamily::kSaeaPlain;
  throw ConfigError("unknown algorithm family: " + s);
}

EaKind ea_from_string(const std::string& s) {
  if (s == "CMAES") return EaKind::kCmaEs;
  if (s == "PSO") return EaKind::kPso;
  if (s == "DE") return EaKind::kDe;
  throw ConfigError("unknown EA kind: " + s);
}

}  // namespace

void to_json(json& j, const AlgorithmSpec& s) {
  j = json{{"family", to_string(s.family)},
           {"surrogate", to_string(s.surrogate)},
           {"xi", s.xi},
           {"ucb_w", s.acquisition.ucb_w},
           {"pop_size", s.ea_params.pop_size}};
  if (s.ea) j["ea"] = to_string(*s.ea);
  if (s.meta) j["meta"] = *s.meta;
  if (!s.label.empty()) j["label"] = s.label;
}

void from_json(const json& j, AlgorithmSpec& s) {
  check_keys(j, {"family", "surrogate", "ea", "meta", "xi", "ucb_w", "pop_size", "label"},
             "algorithm");
  s = AlgorithmSpec{};
  s.family = family_from_string(j.at("family").get<std::string>());
  if (j.contains("surrogate")) {
    const std::string k = j["surrogate"].get<std::string>();
    if (k == "GPR")
      s.surrogate = SurrogateKind::kGpr;
    else if (k == "NN")
      s.surrogate = SurrogateKind::kNn;
    else
      throw ConfigError("surrogate must be GPR or NN");
  }
  if (j.contains("ea")) s.ea = ea_from_string(j["ea"].get<std::string>());
  if (j.contains("meta")) s.meta = j["meta"].get<MetaConfig>();
  if (s.meta_enabled() && !s.meta) s.meta = MetaConfig{};
  if (j.contains("xi"))
    s.xi = j["xi"].get<int>();
  else if (!s.bo_family() && s.surrogate == SurrogateKind::kNn)
    s.xi = 5;
  if (j.contains("ucb_w")) s.acquisition.ucb_w = j["ucb_w"].get<double>();
  if (j.contains("pop_size")) s.ea_params.pop_size = j["pop_size"].get<int>();
  if (j.contains("label")) s.label = j["label"].get<std::string>();
  s.validate();
}

namespace {

json fe_to_json(const FeRecord& r) {
  return json{{"env", r.env},
              {"fe", r.fe_in_env},
              {"x", vec_to_json(r.x)},
              {"y", r.y_true},
              {"best", r.best_so_far}};
}

json env_to_json(const EnvRecord& r, bool include_meta_params) {
  json j{{"env", r.env},
         {"best_x", vec_to_json(r.best_x)},
         {"best_y", r.best_y},
         {"global_optimum", r.global_optimum},
         {"fe_count", r.fe_count},
         {"train_size", r.train_size},
         {"final_params", r.final_params}};
  if (r.meta_trace) {
    if (include_meta_params) {
      j["meta_trace"] = *r.meta_trace;
    } else {
      MetaTrace slim = *r.meta_trace;
      for (auto& rec : slim.records) rec.params = Eigen::VectorXd();
      j["meta_trace"] = slim;
    }
  }
  return j;
}

}  // namespace

void to_json(json& j, const RunTrace& t) {
  json fes = json::array();
  for (const auto& fe : t.fes) fes.push_back(fe_to_json(fe));
  json envs = json::array();
  for (const auto& env : t.envs) envs.push_back(env_to_json(env, true));
  j = json{{"algo", t.algo_id},  {"seed", t.seed},   {"dims", t.dims},
           {"truncated", t.truncated}, {"fes", std::move(fes)}, {"envs", std::move(envs)}};
}

void from_json(const json& j, RunTrace& t) {
  t = RunTrace{};
  t.algo_id = j.at("algo").get<std::string>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.dims = j.at("dims").get<int>();
  t.truncated = j.value("truncated", false);
  for (const auto& fj : j.at("fes")) {
    FeRecord r;
    r.env = fj.at("env").get<int>();
    r.fe_in_env = fj.at("fe").get<int>();
    r.x = vec_from_json(fj.at("x"));
    r.y_true = fj.at("y").get<double>();
    r.best_so_far = fj.at("best").get<double>();
    t.fes.push_back(std::move(r));
  }
  for (const auto& ej : j.at("envs")) {
    EnvRecord r;
    r.env = ej.at("env").get<int>();
    r.best_x = vec_from_json(ej.at("best_x"));
    r.best_y = ej.at("best_y").get<double>();
    r.global_optimum = ej.at("global_optimum").get<double>();
    r.fe_count = ej.at("fe_count").get<int>();
    r.train_size = ej.value("train_size", 0);
    r.final_params = ej.at("final_params").get<SurrogateParams>();
    if (ej.contains("meta_trace")) r.meta_trace = ej["meta_trace"].get<MetaTrace>();
    t.envs.push_back(std::move(r));
  }
}

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(path + ": unknown key '" + key + "'");
  }
}

void save_trace(const RunTrace& trace, const std::string& json_path,
                bool include_meta_params) {
  json fes = json::array();
  for (const auto& fe : trace.fes) fes.push_back(fe_to_json(fe));
  json envs = json::array();
  for (const auto& env : trace.envs) envs.push_back(env_to_json(env, include_meta_params));
  const json j{{"algo", trace.algo_id},        {"seed", trace.seed},
               {"dims", trace.dims},           {"truncated", trace.truncated},
               {"fes", std::move(fes)},        {"envs", std::move(envs)}};
  const std::string tmp = json_path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << j.dump();
  }
  if (std::rename(tmp.c_str(), json_path.c_str()) != 0)
    throw std::runtime_error("cannot move " + tmp + " into place");
}

RunTrace load_trace(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot read " + json_path);
  json j;
  in >> j;
  return j.get<RunTrace>();
}

void save_trace_csv(const RunTrace& trace, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path);
  out << "algo,seed,n,env,fe,y_true,best_so_far\n";
  for (const auto& fe : trace.fes)
    out << trace.algo_id << ',' << trace.seed << ',' << trace.dims << ',' << fe.env
        << ',' << fe.fe_in_env << ',' << fmt_double(fe.y_true) << ','
        << fmt_double(fe.best_so_far) << '\n';
}

}  // namespace mlo
