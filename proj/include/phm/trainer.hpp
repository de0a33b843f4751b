#pragma once

// Episode rollouts, the hierarchical training loop, curriculum and checkpoints.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phm/commanders.hpp"
#include "phm/env.hpp"
#include "phm/kpi.hpp"
#include "phm/sim.hpp"

namespace phm {

enum class Method : std::uint8_t { Hrl, Drl, Rule, Random };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

struct CurriculumConfig {
  bool enabled = true;
  double stage1_until = 0.2;  // fraction of epochs
  double stage2_until = 0.5;
};

int curriculum_stage(int epoch, int epochs, const CurriculumConfig& cfg);
ScenarioConfig curriculum_scenario(const ScenarioConfig& target, int epoch, int epochs, const CurriculumConfig& cfg);

// Agents and policy state for one method.
class AgentSet {
 public:
  AgentSet(Method method, const ScenarioConfig& target, std::uint64_t seed,
           std::optional<AgentHyper> general = std::nullopt, std::optional<AgentHyper> tactical = std::nullopt);

  Method method() const { return method_; }
  const LayoutDims& dims() const { return dims_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  std::vector<CommanderAgent>& agents() { return agents_; }
  const std::vector<CommanderAgent>& agents() const { return agents_; }
  CommanderAgent& agent(Role role);
  bool learns() const { return method_ == Method::Hrl || method_ == Method::Drl; }
  Rng& policy_rng() { return policy_rng_; }
  RulePolicyConfig& rule() { return rule_; }

 private:
  Method method_;
  LayoutDims dims_;
  std::uint64_t fingerprint_;
  std::vector<CommanderAgent> agents_;
  Rng policy_rng_;
  RulePolicyConfig rule_;
};

struct EpisodeOptions {
  bool train = false;
  RewardConfig rewards;
  // Steps over which PER beta anneals 0.4 -> 1.0, per update cadence.
  std::uint64_t tactical_beta_steps = 0;
  std::uint64_t general_beta_steps = 0;
  double beta_start = 0.4;
  double beta_end = 1.0;
};

struct RewardTotals {
  double general = 0.0;
  double flight = 0.0;
  double maintenance = 0.0;
  double resource = 0.0;
};

struct EpisodeResult {
  WorldState world;
  std::vector<StepEvents> steps;
  RewardTotals rewards;
  std::vector<double> general_window_rewards;  // what the General stored per decision
  int general_decisions = 0;
  int general_updates = 0;
  std::vector<int> tactical_updates;  // Flight, Maintenance, Resource (or flat)
  std::vector<std::size_t> buffer_growth;

  EpisodeLog log() const { return episode_log(world, steps); }
};

EpisodeResult run_episode(const ScenarioConfig& scenario, AgentSet& agents, const EpisodeOptions& opt);

struct TrainConfig {
  int epochs = 500;
  std::uint64_t seed = 0;
  CurriculumConfig curriculum;
  RewardConfig rewards;
  bool performance_gated_epsilon = false;
  int checkpoint_every = 0;  // epochs; 0 = only at the end
};

struct CurveRow {
  int epoch = 0;
  int stage = 3;
  RewardTotals rewards;
  double general_epsilon = 0.0;
  double tactical_epsilon = 0.0;
};

struct TrainingArtifacts {
  std::vector<KpiRecord> kpis;
  std::vector<CurveRow> curves;
  double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(int epoch, const KpiRecord&, const CurveRow&)>;

// Deterministic world seed for one (run seed, episode index) pair.
std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t episode);

TrainingArtifacts train(const TrainConfig& cfg, const ScenarioConfig& scenario, AgentSet& agents,
                        const EpochCallback& on_epoch = {});

// Greedy rollouts on seeds disjoint from training.
std::vector<KpiRecord> evaluate(const ScenarioConfig& scenario, AgentSet& agents, int episodes, std::uint64_t seed,
                                const RewardConfig& rewards = {});

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::uint32_t version = kCheckpointVersion;
  Method method = Method::Hrl;
  std::uint64_t fingerprint = 0;
  int epoch = 0;
};

void save_checkpoint(const std::string& path, const AgentSet& agents, int epoch);
// Restores networks, optimizer moments, counters and RNG states into `agents`.
// Throws FormatError on a damaged or foreign file and ConfigError when the
// checkpoint was written for a different scenario shape or method.
CheckpointInfo load_checkpoint(const std::string& path, AgentSet& agents);
CheckpointInfo read_checkpoint_info(const std::string& path);

}  // namespace phm
