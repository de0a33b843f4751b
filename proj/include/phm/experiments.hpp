#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phm/kpi.hpp"
#include "phm/trainer.hpp"

namespace phm {

// Sample standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> xs);

struct SummaryRow {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
  int n = 0;
};

// Mean, sample std and count for each KPI. Absent ratios are skipped, so
// their n can be smaller than the record count.
std::vector<SummaryRow> aggregate(std::span<const KpiRecord> records);

enum class SweepAxis : std::uint8_t { Complexity, FailureIntensity };

std::string_view to_string(SweepAxis a);
std::optional<SweepAxis> parse_axis(std::string_view name);
std::vector<double> default_grid(SweepAxis a);

// Scenario for one grid value: complexity sets components per aircraft,
// failure intensity scales every mfhbf.
ScenarioConfig apply_axis(ScenarioConfig base, SweepAxis axis, double value);

struct SweepConfig {
  SweepAxis axis = SweepAxis::FailureIntensity;
  std::vector<double> values;
  std::vector<Method> methods{Method::Hrl, Method::Drl, Method::Rule};
  std::vector<std::uint64_t> seeds{0};
  TrainConfig train;
  std::optional<AgentHyper> general;
  std::optional<AgentHyper> tactical;
  RulePolicyConfig rule;
  int eval_episodes = 10;
  int workers = 1;
  std::string checkpoint_dir;  // empty = no checkpoints
};

struct SweepCell {
  double value = 0.0;
  Method method = Method::Rule;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string checkpoint;
  double train_seconds = 0.0;
  std::vector<KpiRecord> eval;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // grid order: value, method, seed
  bool all_ok() const;
};

// Runs one cell: train (learning methods), then greedy evaluation.
SweepCell run_cell(const SweepConfig& cfg, const ScenarioConfig& base, double value, Method method, std::uint64_t seed);

SweepResult sweep(const SweepConfig& cfg, const ScenarioConfig& base,
                  const std::function<void(const SweepCell&)>& on_cell = {});

std::string format_value(double v);
// Raw per-episode KPI records, one JSON object per line.
void write_raw(const std::string& path, const SweepResult& r, SweepAxis axis);
// axis,value,method,metric,mean,std,n
void write_aggregate(const std::string& path, const SweepResult& r, SweepAxis axis);
inline constexpr const char* kAggregateHeader = "axis,value,method,metric,mean,std,n";

}  // namespace phm
