#include "phm/config.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "phm/errors.hpp"

namespace phm {

namespace {

YAML::Node hyper_node(const AgentHyper& h) {
  YAML::Node n;
  n["hidden"] = h.hidden;
  n["batch"] = h.batch;
  n["lr"] = h.lr;
  n["gamma"] = h.gamma;
  n["tau"] = h.tau;
  n["buffer"] = h.buffer;
  n["epsilon"]["start"] = h.epsilon.start;
  n["epsilon"]["min"] = h.epsilon.min;
  n["epsilon"]["decay"] = h.epsilon.decay;
  n["per"]["alpha"] = h.per.alpha;
  n["per"]["eps"] = h.per.eps;
  n["huber_delta"] = h.huber_delta;
  return n;
}

YAML::Node to_node(const RunConfig& c) {
  YAML::Node root;
  root["base"] = c.name;
  const auto& s = c.scenario;
  auto sc = root["scenario"];
  sc["fleet_size"] = s.n_aircraft;
  sc["bays"] = s.n_bays;
  sc["complexity"] = s.complexity;
  sc["failure_intensity"] = s.failure_intensity;
  sc["horizon_hours"] = s.horizon;
  sc["dt_hours"] = s.dt;
  sc["window_hours"] = s.window_hours;
  sc["shock_model"] = std::string(to_string(s.shock_model));
  sc["seed"] = s.seed;
  for (const auto& p : s.classes) {
    YAML::Node cn;
    cn["class"] = std::string(to_string(p.class_id));
    cn["mfhbf"] = p.mfhbf;
    cn["failure_prob"] = p.failure_prob;
    cn["repair_time"] = p.repair_time_mean;
    cn["repair_cost"] = p.repair_cost;
    cn["detection_delay"] = p.detection_delay;
    cn["predict_lead"] = p.predict_lead;
    sc["components"].push_back(cn);
  }
  auto m = root["missions"];
  m["per_window"] = s.missions.per_window;
  m["duration_min"] = s.missions.duration_min;
  m["duration_max"] = s.missions.duration_max;
  m["required_min"] = s.missions.required_min;
  m["required_max"] = s.missions.required_max;
  m["reward_rate"] = s.missions.reward_rate;
  m["penalty_multiplier"] = s.penalty_multiplier;
  auto l = root["logistics"];
  l["suppliers"] = s.n_suppliers;
  l["supplier_price_mult"] = s.supplier_price_mult;
  l["supplier_lead_hours"] = s.supplier_lead;
  l["labor_rate"] = s.labor_rate;
  l["repair_sigma_frac"] = s.repair_sigma_frac;
  l["min_repair_hours"] = s.min_repair_hours;
  l["capacity"] = s.stock_capacity;
  l["holding_frac"] = s.holding_frac;
  l["max_order_qty"] = s.max_order_qty;
  l["initial_stock"] = s.initial_stock;
  const auto& r = c.train.rewards;
  auto rw = root["rewards"];
  rw["alpha"] = r.alpha;
  rw["beta"] = r.beta;
  rw["gamma"] = r.gamma;
  rw["eta"] = r.eta;
  rw["tau_f"] = r.tau_f;
  rw["tau_m"] = r.tau_m;
  rw["tau_r"] = r.tau_r;
  rw["failure_multiplier"] = r.failure_multiplier;
  auto t = root["train"];
  t["epochs"] = c.train.epochs;
  t["seed"] = c.train.seed;
  t["curriculum"] = c.train.curriculum.enabled;
  t["curriculum_stage1"] = c.train.curriculum.stage1_until;
  t["curriculum_stage2"] = c.train.curriculum.stage2_until;
  t["performance_gated_epsilon"] = c.train.performance_gated_epsilon;
  t["checkpoint_every"] = c.train.checkpoint_every;
  root["agents"]["general"] = hyper_node(c.general);
  root["agents"]["tactical"] = hyper_node(c.tactical);
  root["rule"]["maintenance_threshold"] = c.rule.maintenance_threshold;
  root["rule"]["reorder_point"] = c.rule.reorder_point;
  root["rule"]["healthy_threshold"] = c.rule.healthy_threshold;
  root["eval"]["episodes"] = c.eval_episodes;
  return root;
}

// Strict map reader: every key must be consumed, conversions name their path.
class Reader {
 public:
  Reader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsMap()) throw ConfigError(where() + " must be a mapping");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(join(key) + ": cannot read value '" + dump(v) + "'");
    }
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(node_[key], join(key));
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + join(key) + "'");
    }
  }

 private:
  static std::string dump(const YAML::Node& n) {
    YAML::Emitter e;
    e << YAML::Flow << n;
    return e.c_str();
  }
  std::string where() const { return path_.empty() ? "config root" : path_; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_hyper(Reader r, AgentHyper& h) {
  r.get("hidden", h.hidden);
  r.get("batch", h.batch);
  r.get("lr", h.lr);
  r.get("gamma", h.gamma);
  r.get("tau", h.tau);
  r.get("buffer", h.buffer);
  auto e = r.child("epsilon");
  e.get("start", h.epsilon.start);
  e.get("min", h.epsilon.min);
  e.get("decay", h.epsilon.decay);
  e.finish();
  auto p = r.child("per");
  p.get("alpha", h.per.alpha);
  p.get("eps", h.per.eps);
  p.finish();
  r.get("huber_delta", h.huber_delta);
  r.finish();
}

void validate_hyper(const AgentHyper& h, const std::string& who) {
  auto bad = [&who](const std::string& what) { throw ConfigError("agents." + who + "." + what); };
  if (h.hidden.empty()) bad("hidden must list at least one layer");
  for (int w : h.hidden) {
    if (w < 1) bad("hidden sizes must be >= 1");
  }
  if (h.batch < 1) bad("batch must be >= 1");
  if (!(h.lr > 0)) bad("lr must be > 0");
  if (!(h.gamma >= 0 && h.gamma <= 1)) bad("gamma must be in [0,1]");
  if (!(h.tau > 0 && h.tau <= 1)) bad("tau must be in (0,1]");
  if (h.buffer < h.batch) bad("buffer must hold at least one batch");
  if (!(h.epsilon.min >= 0 && h.epsilon.min <= h.epsilon.start && h.epsilon.start <= 1)) bad("epsilon bounds invalid");
  if (!(h.epsilon.decay > 0 && h.epsilon.decay <= 1)) bad("epsilon.decay must be in (0,1]");
  if (!(h.per.alpha >= 0) || !(h.per.eps > 0)) bad("per.alpha must be >= 0 and per.eps > 0");
}

RunConfig from_node(const YAML::Node& root) {
  Reader r(root, "");
  std::string base = "nominal";
  r.get("base", base);
  RunConfig c = builtin_config(base);
  auto& s = c.scenario;

  auto sc = r.child("scenario");
  sc.get("fleet_size", s.n_aircraft);
  sc.get("bays", s.n_bays);
  sc.get("complexity", s.complexity);
  sc.get("failure_intensity", s.failure_intensity);
  sc.get("horizon_hours", s.horizon);
  sc.get("dt_hours", s.dt);
  sc.get("window_hours", s.window_hours);
  std::string shock(to_string(s.shock_model));
  sc.get("shock_model", shock);
  auto model = parse_shock_model(shock);
  if (!model) throw ConfigError("scenario.shock_model: unknown model '" + shock + "' (wear_shock, hazard, literal, none)");
  s.shock_model = *model;
  sc.get("seed", s.seed);
  if (auto comps = sc.raw("components")) {
    if (!comps.IsSequence()) throw ConfigError("scenario.components must be a list");
    s.classes.clear();
    for (std::size_t i = 0; i < comps.size(); ++i) {
      Reader cr(comps[i], "scenario.components[" + std::to_string(i) + "]");
      ComponentClassParams p;
      std::string name = "AVI";
      cr.get("class", name);
      auto cls = parse_component_class(name);
      if (!cls) throw ConfigError(cr.join("class") + ": unknown class '" + name + "'");
      p.class_id = *cls;
      cr.get("mfhbf", p.mfhbf);
      cr.get("failure_prob", p.failure_prob);
      cr.get("repair_time", p.repair_time_mean);
      cr.get("repair_cost", p.repair_cost);
      cr.get("detection_delay", p.detection_delay);
      cr.get("predict_lead", p.predict_lead);
      cr.finish();
      s.classes.push_back(p);
    }
  }
  sc.finish();

  auto m = r.child("missions");
  m.get("per_window", s.missions.per_window);
  m.get("duration_min", s.missions.duration_min);
  m.get("duration_max", s.missions.duration_max);
  m.get("required_min", s.missions.required_min);
  m.get("required_max", s.missions.required_max);
  m.get("reward_rate", s.missions.reward_rate);
  m.get("penalty_multiplier", s.penalty_multiplier);
  m.finish();

  auto l = r.child("logistics");
  l.get("suppliers", s.n_suppliers);
  l.get("supplier_price_mult", s.supplier_price_mult);
  l.get("supplier_lead_hours", s.supplier_lead);
  l.get("labor_rate", s.labor_rate);
  l.get("repair_sigma_frac", s.repair_sigma_frac);
  l.get("min_repair_hours", s.min_repair_hours);
  l.get("capacity", s.stock_capacity);
  l.get("holding_frac", s.holding_frac);
  l.get("max_order_qty", s.max_order_qty);
  l.get("initial_stock", s.initial_stock);
  l.finish();

  auto& rw = c.train.rewards;
  auto rr = r.child("rewards");
  rr.get("alpha", rw.alpha);
  rr.get("beta", rw.beta);
  rr.get("gamma", rw.gamma);
  rr.get("eta", rw.eta);
  rr.get("tau_f", rw.tau_f);
  rr.get("tau_m", rw.tau_m);
  rr.get("tau_r", rw.tau_r);
  rr.get("failure_multiplier", rw.failure_multiplier);
  rr.finish();

  auto t = r.child("train");
  t.get("epochs", c.train.epochs);
  t.get("seed", c.train.seed);
  t.get("curriculum", c.train.curriculum.enabled);
  t.get("curriculum_stage1", c.train.curriculum.stage1_until);
  t.get("curriculum_stage2", c.train.curriculum.stage2_until);
  t.get("performance_gated_epsilon", c.train.performance_gated_epsilon);
  t.get("checkpoint_every", c.train.checkpoint_every);
  t.finish();

  auto a = r.child("agents");
  read_hyper(a.child("general"), c.general);
  read_hyper(a.child("tactical"), c.tactical);
  a.finish();

  auto ru = r.child("rule");
  ru.get("maintenance_threshold", c.rule.maintenance_threshold);
  ru.get("reorder_point", c.rule.reorder_point);
  ru.get("healthy_threshold", c.rule.healthy_threshold);
  ru.finish();

  auto ev = r.child("eval");
  ev.get("episodes", c.eval_episodes);
  ev.finish();
  r.finish();
  c.name = base;
  return c;
}

void merge(YAML::Node dst, const YAML::Node& src) {
  for (const auto& kv : src) {
    const auto key = kv.first.as<std::string>();
    if (kv.second.IsMap() && dst[key] && dst[key].IsMap()) {
      merge(dst[key], kv.second);
    } else {
      dst[key] = YAML::Clone(kv.second);
    }
  }
}

void apply_override(YAML::Node& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + spec + "' must look like key.path=value");
  const std::string path = spec.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(spec.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("override '" + spec + "': " + e.what());
  }
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) keys.push_back(k);
  YAML::Node cur = root;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    YAML::Node next = cur[keys[i]];
    if (!next || !next.IsMap()) throw ConfigError("override '" + spec + "': '" + keys[i] + "' is not a section");
    cur.reset(next);
  }
  if (!cur[keys.back()]) throw ConfigError("unknown config key '" + path + "'");
  cur[keys.back()] = value;
}

}  // namespace

void RunConfig::validate() const {
  scenario.validate();
  train.rewards.validate();
  rule.validate();
  if (train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (train.checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
  const auto& cur = train.curriculum;
  if (!(cur.stage1_until >= 0 && cur.stage1_until <= cur.stage2_until && cur.stage2_until <= 1)) {
    throw ConfigError("train.curriculum_stage1/2 must satisfy 0 <= stage1 <= stage2 <= 1");
  }
  if (eval_episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  validate_hyper(general, "general");
  validate_hyper(tactical, "tactical");
}

bool is_builtin_config(const std::string& name) { return name == "nominal" || name == "mini"; }

RunConfig builtin_config(const std::string& name) {
  RunConfig c;
  if (name == "nominal") {
    c.scenario = ScenarioConfig::nominal();
  } else if (name == "mini") {
    c.scenario = ScenarioConfig::mini();
    c.train.epochs = 50;
  } else {
    throw ConfigError("unknown built-in config '" + name + "' (nominal, mini)");
  }
  c.name = name;
  return c;
}

RunConfig load_config(const std::string& name_or_path, const std::vector<std::string>& overrides) {
  YAML::Node root;
  if (is_builtin_config(name_or_path)) {
    root = to_node(builtin_config(name_or_path));
  } else {
    if (!std::filesystem::exists(name_or_path)) throw ConfigError("config file not found: " + name_or_path);
    YAML::Node file;
    try {
      file = YAML::LoadFile(name_or_path);
    } catch (const YAML::Exception& e) {
      throw ConfigError(name_or_path + ": " + e.what());
    }
    if (file.IsNull()) file = YAML::Node(YAML::NodeType::Map);
    if (!file.IsMap()) throw ConfigError(name_or_path + ": top level must be a mapping");
    std::string base = "nominal";
    if (file["base"]) base = file["base"].as<std::string>();
    root = to_node(builtin_config(base));
    // Component lists replace rather than merge.
    merge(root, file);
  }
  for (const auto& o : overrides) apply_override(root, o);
  RunConfig c = from_node(root);
  c.validate();
  return c;
}

std::string to_yaml(const RunConfig& cfg) {
  YAML::Emitter e;
  e << to_node(cfg);
  return std::string(e.c_str()) + "\n";
}

}  // namespace phm
