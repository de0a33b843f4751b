#pragma once

// The four Smart Commander agents, the flat joint DQN baseline, and the
// scripted rule and random policies.

#include <cstdint>
#include <optional>
#include <vector>

#include "phm/env.hpp"
#include "phm/neural.hpp"
#include "phm/rl.hpp"

namespace phm {

struct AgentHyper {
  std::vector<int> hidden;
  std::size_t batch = 64;
  double lr = 1e-4;
  double gamma = 0.99;
  double tau = 0.001;
  std::size_t buffer = 100000;
  ExplorationSchedule epsilon;
  PerConfig per;
  double huber_delta = 1.0;
};

AgentHyper general_hyper();
AgentHyper tactical_hyper();
// General-commander learning settings with a wider [512, 512] body.
AgentHyper flat_hyper();
AgentHyper default_hyper(Role role);

struct TrainStats {
  double loss = 0.0;
  double grad_norm = 0.0;
  double mean_abs_td = 0.0;
};

class CommanderAgent {
 public:
  CommanderAgent(Role role, const LayoutDims& dims, AgentHyper hp, std::uint64_t seed);

  Role role() const { return role_; }
  const LayoutDims& dims() const { return obs_.dims(); }
  const ObservationLayout& observation_layout() const { return obs_; }
  const SegmentLayout& segments() const { return seg_; }
  const AgentHyper& hyper() const { return hp_; }

  QNetwork& policy() { return policy_; }
  const QNetwork& policy() const { return policy_; }
  QNetwork& target() { return target_; }
  const QNetwork& target() const { return target_; }
  PrioritizedReplay& buffer() { return buffer_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  // Exploration counter; epsilon = epsilon_at(schedule, counter).
  std::uint64_t explore_counter() const { return explore_counter_; }
  void set_explore_counter(std::uint64_t t) { explore_counter_ = t; }
  void advance_exploration() { ++explore_counter_; }
  double epsilon() const { return epsilon_at(hp_.epsilon, explore_counter_); }
  std::uint64_t train_steps() const { return train_steps_; }
  void set_train_steps(std::uint64_t n) { train_steps_ = n; }

  Eigen::VectorXd observe(const WorldState& world, const Upstream& upstream = {}) const;
  std::vector<int> select(const Eigen::VectorXd& obs, double epsilon);
  // Encodes, forwards and selects (epsilon-greedy when train_mode), then decodes.
  JointActions act(const WorldState& world, const Upstream& upstream, bool train_mode,
                   std::vector<int>* indices_out = nullptr, Eigen::VectorXd* obs_out = nullptr);

  void remember(Transition t);
  // One gradient step on a prioritized batch; empty while the buffer is warming up.
  std::optional<TrainStats> train_step(double beta);

 private:
  Role role_;
  ObservationLayout obs_;
  SegmentLayout seg_;
  AgentHyper hp_;
  QNetwork policy_;
  QNetwork target_;
  PrioritizedReplay buffer_;
  Rng rng_;
  std::uint64_t explore_counter_ = 0;
  std::uint64_t train_steps_ = 0;
};

struct RulePolicyConfig {
  double maintenance_threshold = 0.2;  // of initial life
  double reorder_point = 0.3;          // of capacity
  double healthy_threshold = 0.2;      // for acceptance and assignment

  void validate() const;
};

// Health fraction the scripted policies rank aircraft by: smallest observed
// component health, or 0 when a failure is visible.
double visible_health(const AircraftState& ac, double clock);

JointActions rule_policy(const WorldState& world, const RulePolicyConfig& cfg = {});

// Uniform over every head segment.
JointActions random_policy(const WorldState& world, Rng& rng);

struct FlatLayouts {
  ObservationLayout observation;
  SegmentLayout segments;
};

FlatLayouts flat_joint_layout(const ScenarioConfig& cfg);

}  // namespace phm
