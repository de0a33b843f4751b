#pragma once

// Discrete-event world model: component health, missions, maintenance bays,
// spare-parts logistics and the fixed-step simulation loop.

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phm/event_log.hpp"
#include "phm/random.hpp"

namespace phm {

enum class ComponentClass : std::uint8_t { AVI, FCS, POW, STR, MEC };

inline constexpr std::size_t kNominalClassCount = 5;

std::string_view to_string(ComponentClass c);
std::optional<ComponentClass> parse_component_class(std::string_view name);

struct ComponentClassParams {
  ComponentClass class_id = ComponentClass::AVI;
  double mfhbf = 1.0;             // flight hours
  double failure_prob = 0.0;      // per flight hour
  double repair_time_mean = 1.0;  // hours
  double repair_cost = 0.0;       // k$, parts
  double detection_delay = 0.0;   // hours
  double predict_lead = 0.0;      // flight hours

  void validate() const;
};

// AVI, FCS, POW, STR, MEC rows of the nominal PHM table.
std::vector<ComponentClassParams> nominal_component_table();

// Multiplies every class's mfhbf by `factor`; everything else is copied.
std::vector<ComponentClassParams> scale_mfhbf(std::span<const ComponentClassParams> params,
                                              double factor);

// How the random term of the health update is realised.
//  WearShock: with probability failure_prob per flight hour an extra dt/mfhbf is lost.
//  Hazard:    full failure with probability failure_prob * dt / mfhbf per flight hour.
//  Literal:   full failure with probability failure_prob per flight hour.
//  None:      deterministic wear only.
enum class ShockModel : std::uint8_t { WearShock, Hazard, Literal, None };

std::string_view to_string(ShockModel m);
std::optional<ShockModel> parse_shock_model(std::string_view name);

struct ComponentState {
  ComponentClass class_id = ComponentClass::AVI;
  std::size_t class_index = 0;
  double health = 1.0;
  bool failed = false;
  std::optional<double> fault_time;
  std::optional<double> fault_visible_at;
  bool detected = false;
  bool predicted_failure = false;
  // Health as last seen by diagnostics; lags `health` while a fault is undetected.
  double observed_health = 1.0;

  bool fault_visible(double clock) const {
    return failed && fault_visible_at && *fault_visible_at <= clock;
  }
};

ComponentState make_component(std::size_t class_index, const ComponentClassParams& params);

// Applies `flight_hours` of exposure starting at `clock`. Throws
// std::invalid_argument on negative exposure or an already failed component.
ComponentState degrade_component(ComponentState comp, const ComponentClassParams& params,
                                 double flight_hours, double clock, ShockModel model, Rng& rng);

enum class AircraftStatus : std::uint8_t { OnMission, Standby, InMaintenance, Down };

std::string_view to_string(AircraftStatus s);

struct AircraftState {
  int id = 0;
  std::vector<ComponentState> components;
  AircraftStatus status = AircraftStatus::Standby;
  std::optional<int> assigned_mission;
  std::optional<int> bay;
  bool queued = false;

  bool any_failed() const;
  bool any_visible_failure(double clock) const;
  bool any_predicted_failure() const;
  // Smallest observed health fraction across components.
  double min_observed_health() const;
  // Remaining flight hours per component: health * mfhbf.
  std::vector<double> lifetime_vector(std::span<const ComponentClassParams> classes) const;
};

enum class MissionStatus : std::uint8_t { Candidate, Accepted, Rejected, Running, Succeeded, Failed };

std::string_view to_string(MissionStatus s);

struct MissionSpec {
  int id = 0;
  double ts = 0.0;
  double te = 0.0;
  double re = 0.0;  // k$
  int nr = 0;
  MissionStatus status = MissionStatus::Candidate;
  std::vector<int> crew;
  bool sortie_failed = false;

  double duration() const { return te - ts; }
  bool resolved() const {
    return status == MissionStatus::Succeeded || status == MissionStatus::Failed ||
           status == MissionStatus::Rejected;
  }
};

struct RepairJob {
  int aircraft = 0;
  int component = 0;
  double start_time = 0.0;
  double finish_time = 0.0;
  double duration = 0.0;
  double cost = 0.0;
  bool blocked = false;  // finished but waiting for a spare
};

struct MaintenanceBay {
  int id = 0;
  double labor_rate = 0.1;  // k$ per hour
  std::optional<RepairJob> job;

  bool busy() const { return job.has_value(); }
};

struct RepairDraw {
  double hours = 0.0;
  double cost = 0.0;
};

// Repair duration ~ Normal(mean, sigma_frac * mean) truncated at `min_hours`;
// cost = labor_rate * hours + parts cost.
RepairDraw sample_repair(const MaintenanceBay& bay, const ComponentClassParams& params,
                         double sigma_frac, double min_hours, Rng& rng);

struct SupplierOffer {
  double unit_price = 0.0;  // k$
  double lead_time = 0.0;   // hours
};

struct SupplierCatalog {
  // offers[class][supplier - 1]
  std::vector<std::vector<SupplierOffer>> offers;

  std::size_t classes() const { return offers.size(); }
  std::size_t suppliers() const { return offers.empty() ? 0 : offers.front().size(); }
  // `supplier` is 1-based.
  const SupplierOffer& offer(std::size_t cls, int supplier) const;
};

struct PendingOrder {
  std::size_t cls = 0;
  int quantity = 0;
  double order_time = 0.0;
  double arrival = 0.0;
  double unit_price = 0.0;
};

struct InventoryState {
  std::vector<int> stock;
  std::vector<int> capacity;
  std::vector<double> holding_cost;  // k$ per unit per hour
  std::vector<PendingOrder> pending;
  double virtual_spend = 0.0;        // k$ paid for units that overflowed capacity

  int pending_quantity(std::size_t cls) const;
};

struct InventoryReport {
  std::vector<int> arrivals_applied;
  std::vector<int> overflow;
  std::vector<int> demand_satisfied;
  std::vector<int> stockouts;
  std::vector<double> holding_by_class;
  std::vector<double> virtual_by_class;
  double holding = 0.0;
  double virtual_added = 0.0;
  std::vector<PendingOrder> arrived;
  std::vector<int> arrived_excess;  // per arrived order, units over capacity
};

// One inventory tick: arrivals due by `clock` (capped at capacity, excess priced
// into virtual_spend), then demand, then holding cost over `dt`.
InventoryReport update_inventory(InventoryState& inv, std::span<const int> demand, double clock,
                                 double dt);

struct MissionGenConfig {
  int per_window = 6;
  int duration_min = 2;
  int duration_max = 10;
  int required_min = 2;
  int required_max = 8;
  double reward_rate = 1.0;  // k$ per aircraft-hour
};

struct ScenarioConfig {
  int n_aircraft = 12;
  int n_bays = 6;
  int complexity = 1;              // components per aircraft = complexity * classes
  double failure_intensity = 1.0;  // mfhbf multiplier
  double horizon = 720.0;
  double dt = 1.0;
  double window_hours = 24.0;
  std::vector<ComponentClassParams> classes = nominal_component_table();
  int n_suppliers = 3;
  std::vector<double> supplier_price_mult{0.9, 1.0, 1.2};
  std::vector<double> supplier_lead{72.0, 48.0, 24.0};
  MissionGenConfig missions;
  double labor_rate = 0.1;
  double repair_sigma_frac = 0.2;
  double min_repair_hours = 1.0;
  int stock_capacity = 10;
  double holding_frac = 0.005;
  int max_order_qty = 10;
  int initial_stock = 3;
  double penalty_multiplier = 2.0;
  ShockModel shock_model = ShockModel::WearShock;
  std::uint64_t seed = 0;

  static ScenarioConfig nominal();
  // Desk-scale variant: 4 aircraft, 2 bays, 96 h.
  static ScenarioConfig mini();

  std::size_t class_count() const { return classes.size(); }
  int components_per_aircraft() const { return complexity * static_cast<int>(classes.size()); }
  int horizon_steps() const;
  int window_steps() const;
  int window_count() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
  // Class parameters after failure-intensity scaling.
  std::vector<ComponentClassParams> effective_classes() const;
  SupplierCatalog catalog() const;
};

// Candidate missions for the window starting at `window_start`; empty when the
// window lies at or beyond the horizon. Ids continue from `next_id`.
std::vector<MissionSpec> generate_missions(const ScenarioConfig& cfg, double window_start,
                                           int next_id, Rng& rng);

struct ResourceOrder {
  bool order = false;
  int supplier = 1;  // 1-based
  int quantity = 0;

  friend bool operator==(const ResourceOrder&, const ResourceOrder&) = default;
};

struct JointActions {
  std::vector<int> general;      // per mission slot, {0,1}; may be empty off-window
  std::vector<int> flight;       // per aircraft, {-1,0,1}
  std::vector<int> maintenance;  // per bay, {0,1}
  std::vector<ResourceOrder> resource;  // per component class
};

struct CostLedger {
  double maintenance = 0.0;
  double procurement = 0.0;
  double inventory = 0.0;
  double penalty = 0.0;

  double total() const { return maintenance + procurement + inventory + penalty; }
};

struct ResolvedMission {
  int id = 0;
  double reward = 0.0;
  bool success = false;
};

struct StartedJob {
  int bay = 0;
  int aircraft = 0;
  int component = 0;
  double cost = 0.0;
  double hours = 0.0;
};

struct PlacedOrder {
  std::size_t cls = 0;
  bool order = false;
  int supplier = 1;
  int quantity = 0;
  double unit_price = 0.0;
  double lead_time = 0.0;
};

// Everything the reward functions and KPI counters need from one step.
struct StepEvents {
  int step = 0;
  double clock = 0.0;  // after the step
  int fleet_size = 0;
  int available = 0;   // OnMission + Standby after the step
  std::vector<ResolvedMission> missions;
  std::vector<StartedJob> jobs_started;
  std::vector<PlacedOrder> orders;
  std::vector<int> stock;
  std::vector<double> holding_cost;
  std::vector<int> stockouts;
  int sorties_started = 0;
  int sorties_succeeded = 0;
  int sorties_failed = 0;
  int repairs_finished = 0;
  int arrivals = 0;
  int demand = 0;
};

struct WorldRngs {
  Rng missions;
  Rng health;
  Rng repair;
};

struct WorldState {
  ScenarioConfig cfg;
  std::vector<ComponentClassParams> classes;  // effective (after mfhbf scaling)
  double clock = 0.0;
  int step = 0;
  std::vector<AircraftState> fleet;
  std::vector<MaintenanceBay> bays;
  InventoryState inventory;
  SupplierCatalog catalog;
  std::vector<MissionSpec> missions;  // every mission generated so far, id == index
  std::vector<int> board;             // mission ids of the current window's slots
  std::deque<int> maintenance_queue;
  CostLedger ledger;
  EventLog log;
  WorldRngs rng;

  bool finished() const { return step >= cfg.horizon_steps(); }
  bool at_window_start() const;
  // True while the current board still holds undecided candidates.
  bool decision_pending() const;
  int window_index() const;
  int count_status(AircraftStatus s) const;
  int available() const;
};

WorldState make_world(const ScenarioConfig& cfg);

// Advances the world by one dt under `actions`. Throws std::invalid_argument
// for malformed actions and EpisodeFinished once the horizon is reached.
StepEvents step_world(WorldState& world, const JointActions& actions);

// Neutral action set: no decisions, everyone on standby.
JointActions idle_actions(const WorldState& world);

// 64-bit fingerprint over the dimensions that shape observations and actions.
std::uint64_t scenario_fingerprint(const ScenarioConfig& cfg);

}  // namespace phm
