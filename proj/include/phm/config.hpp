#pragma once

// Run configuration: built-in presets, YAML files and dotted-key overrides.

#include <string>
#include <vector>

#include "phm/commanders.hpp"
#include "phm/env.hpp"
#include "phm/sim.hpp"
#include "phm/trainer.hpp"

namespace phm {

struct RunConfig {
  std::string name = "nominal";
  ScenarioConfig scenario;
  TrainConfig train;
  AgentHyper general = general_hyper();
  AgentHyper tactical = tactical_hyper();
  RulePolicyConfig rule;
  int eval_episodes = 10;

  void validate() const;
};

// "nominal" or "mini".
RunConfig builtin_config(const std::string& name);
bool is_builtin_config(const std::string& name);

// Resolution order: built-in defaults (`base:` key, nominal by default), then
// the file, then each "dotted.key=value" override. Throws ConfigError naming
// the offending key; a missing file is reported with its path.
RunConfig load_config(const std::string& name_or_path, const std::vector<std::string>& overrides = {});

// Full resolved snapshot in the same schema load_config reads.
std::string to_yaml(const RunConfig& cfg);

}  // namespace phm
