#include "phm/trainer.hpp"

#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "phm/errors.hpp"

namespace phm {

namespace {

constexpr std::array<std::string_view, 4> kMethodNames = {"hrl", "drl", "rule", "random"};
constexpr char kMagic[8] = {'P', 'H', 'M', 'C', 'K', 'P', 'T', '\0'};

std::vector<float> to_float(const Eigen::VectorXd& x) {
  std::vector<float> out(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(x[i]);
  return out;
}

// A transition waiting for its successor observation.
struct Pending {
  bool active = false;
  std::vector<float> state;
  std::vector<int> actions;
  double reward = 0.0;
  int steps = 0;
};

void finish_pending(Pending& p, CommanderAgent& agent, const std::vector<float>& next, bool terminal, double discount) {
  if (!p.active) return;
  agent.remember(Transition{std::move(p.state), std::move(p.actions), p.reward, next, terminal, discount});
  p = Pending{};
}

double beta_for(const CommanderAgent& a, const EpisodeOptions& opt, std::uint64_t steps) {
  return beta_at(opt.beta_start, opt.beta_end, steps, a.train_steps());
}

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_uint(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == EOF) throw FormatError("checkpoint truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& xs) {
  for (double x : xs) put_u64(os, std::bit_cast<std::uint64_t>(x));
}

std::vector<double> get_doubles(std::istream& is, std::size_t n) {
  std::vector<double> out(n);
  for (auto& x : out) x = std::bit_cast<double>(get_uint(is, 8));
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json read_header(std::istream& is, std::uint32_t& version) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw FormatError("not a checkpoint file (bad magic)");
  version = static_cast<std::uint32_t>(get_uint(is, 4));
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint format version " + std::to_string(version) + " is not supported (this build reads " +
                      std::to_string(kCheckpointVersion) + "); retrain or convert with a matching build");
  }
  const std::uint64_t len = get_uint(is, 8);
  if (len > (1u << 26)) throw FormatError("checkpoint header length is implausible");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError("checkpoint header truncated");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is corrupt: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(Method m) { return kMethodNames.at(static_cast<std::size_t>(m)); }

std::optional<Method> parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  }
  return std::nullopt;
}

int curriculum_stage(int epoch, int epochs, const CurriculumConfig& cfg) {
  if (!cfg.enabled || epochs <= 0) return 3;
  const double f = static_cast<double>(epoch) / epochs;
  if (f < cfg.stage1_until) return 1;
  if (f < cfg.stage2_until) return 2;
  return 3;
}

ScenarioConfig curriculum_scenario(const ScenarioConfig& target, int epoch, int epochs, const CurriculumConfig& cfg) {
  const int stage = curriculum_stage(epoch, epochs, cfg);
  ScenarioConfig s = target;
  if (stage <= 2) s.initial_stock = s.stock_capacity;
  if (stage == 1) {
    s.n_aircraft = std::max(1, target.n_aircraft / 2);
    auto& m = s.missions;
    m.duration_max = std::min(m.duration_max, m.duration_min + 2);
    m.required_max = std::max(m.required_min, std::min(m.required_max, s.n_aircraft));
  }
  return s;
}

AgentSet::AgentSet(Method method, const ScenarioConfig& target, std::uint64_t seed, std::optional<AgentHyper> general,
                   std::optional<AgentHyper> tactical)
    : method_(method),
      dims_(LayoutDims::from(target)),
      fingerprint_(scenario_fingerprint(target)),
      policy_rng_(make_stream(seed, 300)) {
  target.validate();
  if (method == Method::Hrl) {
    agents_.emplace_back(Role::General, dims_, general.value_or(general_hyper()), seed);
    for (Role r : {Role::Flight, Role::Maintenance, Role::Resource}) {
      agents_.emplace_back(r, dims_, tactical.value_or(tactical_hyper()), seed);
    }
  } else if (method == Method::Drl) {
    AgentHyper h = flat_hyper();
    if (general) {
      h = *general;
      h.hidden = flat_hyper().hidden;
    }
    agents_.emplace_back(Role::FlatJoint, dims_, h, seed);
  }
}

CommanderAgent& AgentSet::agent(Role role) {
  for (auto& a : agents_) {
    if (a.role() == role) return a;
  }
  throw ConfigError(std::string(to_string(method_)) + " has no " + std::string(to_string(role)) + " agent");
}

EpisodeResult run_episode(const ScenarioConfig& scenario, AgentSet& set, const EpisodeOptions& opt) {
  EpisodeResult res;
  res.world = make_world(scenario);
  WorldState& w = res.world;
  const LayoutDims& dims = set.dims();
  if (set.learns()) dims.check_fits(w);
  const auto& rc = opt.rewards;
  const std::size_t n_slots = static_cast<std::size_t>(dims.slots);

  std::vector<int> directive(n_slots, 0);
  Pending general_pending;
  std::vector<Pending> tactical(set.agents().size());
  res.tactical_updates.assign(set.method() == Method::Hrl ? 3 : set.agents().size(), 0);
  std::vector<std::size_t> sizes_before;
  for (auto& a : set.agents()) sizes_before.push_back(a.buffer().size());

  auto train_tactical = [&](CommanderAgent& a, std::size_t slot) {
    if (!opt.train) return;
    if (a.train_step(beta_for(a, opt, opt.tactical_beta_steps))) ++res.tactical_updates[slot];
  };

  while (!w.finished()) {
    JointActions joint;
    switch (set.method()) {
      case Method::Rule: joint = rule_policy(w, set.rule()); break;
      case Method::Random: joint = random_policy(w, set.policy_rng()); break;
      case Method::Drl: {
        auto& flat = set.agents()[0];
        std::vector<int> idx;
        Eigen::VectorXd x;
        joint = flat.act(w, {}, opt.train, &idx, &x);
        auto s = to_float(x);
        if (opt.train) {
          finish_pending(tactical[0], flat, s, false, flat.hyper().gamma);
          train_tactical(flat, 0);
        }
        tactical[0] = Pending{true, std::move(s), std::move(idx), 0.0, 0};
        break;
      }
      case Method::Hrl: {
        auto& general = set.agent(Role::General);
        if (w.at_window_start()) std::fill(directive.begin(), directive.end(), 0);
        if (w.decision_pending()) {
          auto x = general.observe(w);
          auto s = to_float(x);
          if (opt.train && general_pending.active) {
            const double discount = std::pow(general.hyper().gamma, general_pending.steps);
            res.general_window_rewards.push_back(general_pending.reward);
            finish_pending(general_pending, general, s, false, discount);
            if (general.train_step(beta_for(general, opt, opt.general_beta_steps))) ++res.general_updates;
          }
          auto idx = general.select(x, opt.train ? general.epsilon() : 0.0);
          directive = decode_action(Role::General, idx, general.segments(), dims).general;
          general_pending = Pending{true, std::move(s), std::move(idx), 0.0, 0};
          ++res.general_decisions;
        }
        std::array<Role, 3> roles{Role::Flight, Role::Maintenance, Role::Resource};
        std::array<std::vector<float>, 3> states;
        std::array<std::vector<int>, 3> chosen;
        joint.general = directive;
        for (std::size_t k = 0; k < 3; ++k) {
          auto& agent = set.agent(roles[k]);
          Upstream up{directive, joint.flight, joint.maintenance};
          Eigen::VectorXd x;
          auto part = agent.act(w, up, opt.train, &chosen[k], &x);
          states[k] = to_float(x);
          if (roles[k] == Role::Flight) joint.flight = std::move(part.flight);
          if (roles[k] == Role::Maintenance) joint.maintenance = std::move(part.maintenance);
          if (roles[k] == Role::Resource) joint.resource = std::move(part.resource);
        }
        for (std::size_t k = 0; k < 3; ++k) {
          auto& agent = set.agent(roles[k]);
          if (opt.train) {
            finish_pending(tactical[k + 1], agent, states[k], false, agent.hyper().gamma);
            train_tactical(agent, k);
          }
          tactical[k + 1] = Pending{true, std::move(states[k]), std::move(chosen[k]), 0.0, 0};
        }
        break;
      }
    }

    auto ev = step_world(w, fit_actions(std::move(joint), w));
    const auto r = step_rewards(ev, rc);
    res.rewards.general += r.general;
    res.rewards.flight += r.flight;
    res.rewards.maintenance += r.maintenance;
    res.rewards.resource += r.resource;
    if (set.method() == Method::Drl) {
      tactical[0].reward = r.general;
    } else if (set.method() == Method::Hrl) {
      tactical[1].reward = r.flight;
      tactical[2].reward = r.maintenance;
      tactical[3].reward = r.resource;
      general_pending.reward += r.general;
      ++general_pending.steps;
    }
    res.steps.push_back(std::move(ev));
  }

  if (opt.train && set.learns()) {
    for (std::size_t k = 0; k < set.agents().size(); ++k) {
      auto& agent = set.agents()[k];
      const auto terminal_state = to_float(agent.observe(w));
      if (agent.role() == Role::General) {
        if (general_pending.active) {
          res.general_window_rewards.push_back(general_pending.reward);
          finish_pending(general_pending, agent, terminal_state, true, 0.0);
          if (agent.train_step(beta_for(agent, opt, opt.general_beta_steps))) ++res.general_updates;
        }
      } else {
        finish_pending(tactical[k], agent, terminal_state, true, 0.0);
      }
    }
  }
  for (std::size_t k = 0; k < set.agents().size(); ++k) {
    res.buffer_growth.push_back(set.agents()[k].buffer().size() - sizes_before[k]);
  }
  return res;
}

std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32), 0x45504953u};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

TrainingArtifacts train(const TrainConfig& cfg, const ScenarioConfig& scenario, AgentSet& agents,
                        const EpochCallback& on_epoch) {
  if (cfg.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  cfg.rewards.validate();
  TrainingArtifacts out;
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeOptions opt;
  opt.train = agents.learns();
  opt.rewards = cfg.rewards;
  opt.tactical_beta_steps = static_cast<std::uint64_t>(cfg.epochs) * static_cast<std::uint64_t>(scenario.horizon_steps());
  opt.general_beta_steps = static_cast<std::uint64_t>(cfg.epochs) * static_cast<std::uint64_t>(scenario.window_count());

  double best = -std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ScenarioConfig sc = curriculum_scenario(scenario, epoch, cfg.epochs, cfg.curriculum);
    sc.seed = episode_seed(cfg.seed, static_cast<std::uint64_t>(epoch));
    auto res = run_episode(sc, agents, opt);

    CurveRow row;
    row.epoch = epoch;
    row.stage = curriculum_stage(epoch, cfg.epochs, cfg.curriculum);
    row.rewards = res.rewards;
    if (agents.method() == Method::Hrl) {
      row.general_epsilon = agents.agent(Role::General).epsilon();
      row.tactical_epsilon = agents.agent(Role::Flight).epsilon();
    } else if (agents.method() == Method::Drl) {
      row.general_epsilon = row.tactical_epsilon = agents.agents()[0].epsilon();
    }
    // Every learner's exploration decays once per episode.
    if (!cfg.performance_gated_epsilon || res.rewards.general >= best) {
      for (auto& a : agents.agents()) a.advance_exploration();
    }
    best = std::max(best, res.rewards.general);

    KpiRecord k = compute_kpis(res.log());
    k.method = std::string(to_string(agents.method()));
    k.scenario = "train";
    k.seed = cfg.seed;
    k.epoch = epoch;
    k.episode = epoch;
    out.kpis.push_back(k);
    out.curves.push_back(row);
    if (on_epoch) on_epoch(epoch, k, row);
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<KpiRecord> evaluate(const ScenarioConfig& scenario, AgentSet& agents, int episodes, std::uint64_t seed,
                                const RewardConfig& rewards) {
  if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
  EpisodeOptions opt;
  opt.rewards = rewards;
  std::vector<KpiRecord> out;
  for (int e = 0; e < episodes; ++e) {
    ScenarioConfig sc = scenario;
    sc.seed = episode_seed(seed, 1'000'000u + static_cast<std::uint64_t>(e));
    auto res = run_episode(sc, agents, opt);
    KpiRecord k = compute_kpis(res.log());
    k.method = std::string(to_string(agents.method()));
    k.scenario = "eval";
    k.seed = seed;
    k.episode = e;
    out.push_back(k);
  }
  return out;
}

void save_checkpoint(const std::string& path, const AgentSet& set, int epoch) {
  nlohmann::json h;
  h["method"] = std::string(to_string(set.method()));
  h["fingerprint"] = hex64(set.fingerprint());
  h["epoch"] = epoch;
  const auto& d = set.dims();
  h["dims"] = {{"slots", d.slots},         {"aircraft", d.aircraft},   {"components", d.components},
               {"bays", d.bays},           {"classes", d.classes},     {"suppliers", d.suppliers},
               {"max_order", d.max_order}, {"horizon", d.horizon},     {"window", d.window}};
  h["agents"] = nlohmann::json::array();
  for (const auto& a : set.agents()) {
    h["agents"].push_back({{"role", std::string(to_string(a.role()))},
                           {"sizes", a.policy().sizes()},
                           {"parameters", a.policy().parameter_count()},
                           {"explore_counter", a.explore_counter()},
                           {"train_steps", a.train_steps()},
                           {"adam_steps", a.policy().adam_steps()},
                           {"rng", rng_state(a.rng())}});
  }
  const std::string text = h.dump();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path);
    os.write(kMagic, 8);
    put_u32(os, kCheckpointVersion);
    put_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& a : set.agents()) {
      put_doubles(os, a.policy().parameters());
      put_doubles(os, a.target().parameters());
      put_doubles(os, a.policy().optimizer_state());
    }
    if (!os) throw std::runtime_error("failed writing checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot move checkpoint into " + path);
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  CheckpointInfo info;
  auto h = read_header(is, info.version);
  try {
    auto m = parse_method(h.at("method").get<std::string>());
    if (!m) throw FormatError("checkpoint names an unknown method");
    info.method = *m;
    info.fingerprint = std::stoull(h.at("fingerprint").get<std::string>(), nullptr, 16);
    info.epoch = h.at("epoch").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is incomplete: ") + e.what());
  }
  return info;
}

CheckpointInfo load_checkpoint(const std::string& path, AgentSet& set) {
  const CheckpointInfo info = read_checkpoint_info(path);
  if (info.method != set.method()) {
    throw ConfigError("checkpoint holds a " + std::string(to_string(info.method)) + " policy, requested " +
                      std::string(to_string(set.method())));
  }
  if (info.fingerprint != set.fingerprint()) {
    throw ConfigError("checkpoint was trained on a different scenario shape (fingerprint " + hex64(info.fingerprint) +
                      ", scenario " + hex64(set.fingerprint()) +
                      "); use the fleet, bay, component, supplier and mission-slot counts it was trained with");
  }
  std::ifstream is(path, std::ios::binary);
  std::uint32_t version = 0;
  auto h = read_header(is, version);
  const auto& agents = h.at("agents");
  if (agents.size() != set.agents().size()) throw FormatError("checkpoint agent count does not match");
  struct Loaded {
    std::vector<double> policy, target, moments;
  };
  std::vector<Loaded> loaded;
  for (std::size_t k = 0; k < set.agents().size(); ++k) {
    const auto& a = set.agents()[k];
    const auto sizes = agents[k].at("sizes").get<std::vector<int>>();
    if (sizes != a.policy().sizes()) throw ConfigError("checkpoint network shape differs for the " + std::string(to_string(a.role())) + " agent");
    const std::size_t n = a.policy().parameter_count();
    Loaded l;
    l.policy = get_doubles(is, n);
    l.target = get_doubles(is, n);
    l.moments = get_doubles(is, 2 * n);
    loaded.push_back(std::move(l));
  }
  if (is.peek() != EOF) throw FormatError("checkpoint has trailing data");
  for (std::size_t k = 0; k < set.agents().size(); ++k) {
    auto& a = set.agents()[k];
    const auto& meta = agents[k];
    a.policy().set_parameters(loaded[k].policy);
    a.target().set_parameters(loaded[k].target);
    a.policy().set_optimizer_state(loaded[k].moments, meta.at("adam_steps").get<std::uint64_t>());
    a.set_explore_counter(meta.at("explore_counter").get<std::uint64_t>());
    a.set_train_steps(meta.at("train_steps").get<std::uint64_t>());
    restore_rng_state(a.rng(), meta.at("rng").get<std::string>());
  }
  return info;
}

}  // namespace phm
