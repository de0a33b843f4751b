#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phm/sim.hpp"

namespace phm {

// What one finished episode leaves behind for scoring.
struct EpisodeLog {
  std::vector<StepEvents> steps;
  CostLedger ledger;
  double virtual_spend = 0.0;
  int fleet_size = 0;
  int horizon_steps = 0;
};

EpisodeLog episode_log(const WorldState& world, std::vector<StepEvents> steps);

struct KpiRecord {
  double r_ab = 0.0;  // %
  double r_ms = 0.0;  // %
  double r_ss = 0.0;  // %
  double ttc = 0.0;   // k$
  std::optional<double> r_cb;
  std::optional<double> r_vcb;
  double maintenance = 0.0;
  double procurement = 0.0;
  double inventory = 0.0;
  double penalty = 0.0;
  double virtual_cost = 0.0;
  double r_total = 0.0;
  int missions_accepted = 0;
  int missions_succeeded = 0;
  int sorties = 0;
  int sorties_succeeded = 0;

  // Labels, not computed.
  std::string method;
  std::string scenario;
  std::uint64_t seed = 0;
  int epoch = -1;
  int episode = -1;

  friend bool operator==(const KpiRecord&, const KpiRecord&) = default;
};

// Throws IntegrityError when the log does not cover every step of the horizon.
KpiRecord compute_kpis(const EpisodeLog& log);

// Ratio comparisons treat an absent r_cb / r_vcb as +infinity.
double ratio_or_inf(const std::optional<double>& r);

// One JSON object per line; absent ratios are written as null.
std::string to_json_line(const KpiRecord& k);
KpiRecord kpi_from_json_line(const std::string& line);

}  // namespace phm
