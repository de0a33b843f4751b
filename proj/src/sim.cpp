#include "phm/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "phm/errors.hpp"

namespace phm {

namespace {

constexpr double kTimeEps = 1e-9;
constexpr double kHealthEps = 1e-9;

constexpr std::array<std::string_view, 5> kClassNames = {"AVI", "FCS", "POW", "STR", "MEC"};
constexpr std::array<std::string_view, 4> kShockNames = {"wear_shock", "hazard", "literal", "none"};

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

void recompute_status(AircraftState& ac) {
  if (ac.assigned_mission) {
    ac.status = AircraftStatus::OnMission;
  } else if (ac.bay) {
    ac.status = AircraftStatus::InMaintenance;
  } else if (ac.any_failed()) {
    ac.status = AircraftStatus::Down;
  } else if (ac.queued) {
    ac.status = AircraftStatus::InMaintenance;
  } else {
    ac.status = AircraftStatus::Standby;
  }
}

bool same_time(double a, double b) { return std::abs(a - b) <= kTimeEps * std::max(1.0, std::abs(a)); }

void emit_generated(WorldState& w, const MissionSpec& m) {
  Event e;
  e.step = w.step;
  e.kind = EventKind::MissionGenerated;
  e.mission = m.id;
  e.quantity = m.nr;
  e.amount = m.re;
  e.value = m.ts;
  w.log.push(e);
}

void open_window(WorldState& w) {
  auto next_id = static_cast<int>(w.missions.size());
  auto fresh = generate_missions(w.cfg, w.clock, next_id, w.rng.missions);
  w.board.clear();
  for (auto& m : fresh) {
    w.board.push_back(m.id);
    w.missions.push_back(std::move(m));
    emit_generated(w, w.missions.back());
  }
}

void validate_actions(const WorldState& w, const JointActions& a) {
  if (a.flight.size() != w.fleet.size()) {
    throw std::invalid_argument("flight actions: expected " + std::to_string(w.fleet.size()) +
                                " entries, got " + std::to_string(a.flight.size()));
  }
  for (int v : a.flight) {
    if (v < -1 || v > 1) throw std::invalid_argument("flight action outside {-1,0,1}");
  }
  if (a.maintenance.size() != w.bays.size()) {
    throw std::invalid_argument("maintenance actions: expected " + std::to_string(w.bays.size()) +
                                " entries, got " + std::to_string(a.maintenance.size()));
  }
  for (int v : a.maintenance) {
    if (v != 0 && v != 1) throw std::invalid_argument("maintenance action outside {0,1}");
  }
  if (a.resource.size() != w.cfg.class_count()) {
    throw std::invalid_argument("resource actions: expected " + std::to_string(w.cfg.class_count()) +
                                " entries, got " + std::to_string(a.resource.size()));
  }
  for (const auto& r : a.resource) {
    if (!r.order && r.quantity != 0) throw std::invalid_argument("order quantity set without order flag");
    if (r.supplier < 1 || r.supplier > w.cfg.n_suppliers) throw std::invalid_argument("supplier index out of range");
    if (r.quantity < 0 || r.quantity > w.cfg.max_order_qty) throw std::invalid_argument("order quantity out of range");
  }
  if (w.decision_pending() && a.general.size() < w.board.size()) {
    throw std::invalid_argument("mission decisions required for " + std::to_string(w.board.size()) + " slots");
  }
  for (int v : a.general) {
    if (v != 0 && v != 1) throw std::invalid_argument("general action outside {0,1}");
  }
}

// Lowest true health first; failed components have health 0.
int pick_repair_component(const AircraftState& ac) {
  int best = 0;
  for (std::size_t j = 1; j < ac.components.size(); ++j) {
    if (ac.components[j].health < ac.components[static_cast<std::size_t>(best)].health) best = static_cast<int>(j);
  }
  return best;
}

}  // namespace

std::string_view to_string(ComponentClass c) { return kClassNames.at(static_cast<std::size_t>(c)); }

std::optional<ComponentClass> parse_component_class(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<ComponentClass>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ShockModel m) { return kShockNames.at(static_cast<std::size_t>(m)); }

std::optional<ShockModel> parse_shock_model(std::string_view name) {
  for (std::size_t i = 0; i < kShockNames.size(); ++i) {
    if (kShockNames[i] == name) return static_cast<ShockModel>(i);
  }
  return std::nullopt;
}

std::string_view to_string(AircraftStatus s) {
  switch (s) {
    case AircraftStatus::OnMission: return "on_mission";
    case AircraftStatus::Standby: return "standby";
    case AircraftStatus::InMaintenance: return "in_maintenance";
    case AircraftStatus::Down: return "down";
  }
  return "?";
}

std::string_view to_string(MissionStatus s) {
  switch (s) {
    case MissionStatus::Candidate: return "candidate";
    case MissionStatus::Accepted: return "accepted";
    case MissionStatus::Rejected: return "rejected";
    case MissionStatus::Running: return "running";
    case MissionStatus::Succeeded: return "succeeded";
    case MissionStatus::Failed: return "failed";
  }
  return "?";
}

void ComponentClassParams::validate() const {
  auto name = std::string(to_string(class_id));
  if (!(mfhbf > 0)) throw ConfigError(name + ".mfhbf must be > 0");
  if (!(failure_prob >= 0 && failure_prob <= 1)) throw ConfigError(name + ".failure_prob must be in [0,1]");
  if (!(repair_time_mean > 0)) throw ConfigError(name + ".repair_time must be > 0");
  if (!(repair_cost >= 0)) throw ConfigError(name + ".repair_cost must be >= 0");
  if (!(detection_delay >= 0)) throw ConfigError(name + ".detection_delay must be >= 0");
  if (!(predict_lead >= 0)) throw ConfigError(name + ".predict_lead must be >= 0");
}

std::vector<ComponentClassParams> nominal_component_table() {
  using C = ComponentClass;
  return {
      {C::AVI, 120.0, 0.10, 24.0, 5.0, 2.0, 0.0},
      {C::FCS, 300.0, 0.10, 24.0, 7.0, 2.0, 0.0},
      {C::POW, 250.0, 0.20, 120.0, 20.0, 3.0, 80.0},
      {C::STR, 500.0, 0.15, 60.0, 15.0, 3.0, 100.0},
      {C::MEC, 100.0, 0.20, 36.0, 10.0, 2.0, 40.0},
  };
}

std::vector<ComponentClassParams> scale_mfhbf(std::span<const ComponentClassParams> params, double factor) {
  if (!(factor > 0)) throw std::invalid_argument("failure intensity factor must be > 0");
  std::vector<ComponentClassParams> out(params.begin(), params.end());
  for (auto& p : out) p.mfhbf *= factor;
  return out;
}

ComponentState make_component(std::size_t class_index, const ComponentClassParams& params) {
  ComponentState c;
  c.class_id = params.class_id;
  c.class_index = class_index;
  return c;
}

ComponentState degrade_component(ComponentState comp, const ComponentClassParams& params, double flight_hours,
                                 double clock, ShockModel model, Rng& rng) {
  if (flight_hours < 0) throw std::invalid_argument("flight_hours must be >= 0");
  if (comp.failed) throw std::invalid_argument("cannot degrade a failed component");
  if (flight_hours == 0) return comp;

  const double wear = flight_hours / params.mfhbf;
  double shock_wear = 0.0;
  bool abrupt = false;
  if (model != ShockModel::None && params.failure_prob > 0) {
    const double u = uniform01(rng);
    switch (model) {
      case ShockModel::WearShock:
        if (u < 1.0 - std::pow(1.0 - params.failure_prob, flight_hours)) shock_wear = wear;
        break;
      case ShockModel::Hazard:
        abrupt = u < 1.0 - std::pow(1.0 - params.failure_prob / params.mfhbf, flight_hours);
        break;
      case ShockModel::Literal:
        abrupt = u < 1.0 - std::pow(1.0 - params.failure_prob, flight_hours);
        break;
      case ShockModel::None:
        break;
    }
  }

  comp.health -= wear + shock_wear;
  if (abrupt || comp.health <= kHealthEps) {
    comp.health = 0.0;
    comp.failed = true;
    comp.predicted_failure = false;
    comp.fault_time = clock + flight_hours;
    comp.fault_visible_at = *comp.fault_time + params.detection_delay;
    return comp;
  }
  comp.health = std::clamp(comp.health, 0.0, 1.0);
  comp.observed_health = comp.health;
  comp.predicted_failure = params.predict_lead > 0 && comp.health * params.mfhbf < params.predict_lead;
  return comp;
}

bool AircraftState::any_failed() const {
  return std::any_of(components.begin(), components.end(), [](const auto& c) { return c.failed; });
}

bool AircraftState::any_visible_failure(double clock) const {
  return std::any_of(components.begin(), components.end(), [clock](const auto& c) { return c.fault_visible(clock); });
}

bool AircraftState::any_predicted_failure() const {
  return std::any_of(components.begin(), components.end(), [](const auto& c) { return c.predicted_failure; });
}

double AircraftState::min_observed_health() const {
  double m = 1.0;
  for (const auto& c : components) m = std::min(m, c.observed_health);
  return m;
}

std::vector<double> AircraftState::lifetime_vector(std::span<const ComponentClassParams> classes) const {
  std::vector<double> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.health * classes[c.class_index].mfhbf);
  return out;
}

RepairDraw sample_repair(const MaintenanceBay& bay, const ComponentClassParams& params, double sigma_frac,
                         double min_hours, Rng& rng) {
  const double mean = params.repair_time_mean;
  const double sigma = sigma_frac * mean;
  double hours = mean;
  if (sigma > 0) {
    std::normal_distribution<double> dist(mean, sigma);
    hours = dist(rng);
    for (int tries = 0; hours < min_hours && tries < 1000; ++tries) hours = dist(rng);
  }
  hours = std::max(hours, min_hours);
  return {hours, bay.labor_rate * hours + params.repair_cost};
}

const SupplierOffer& SupplierCatalog::offer(std::size_t cls, int supplier) const {
  if (cls >= offers.size()) throw std::invalid_argument("component class out of range");
  if (supplier < 1 || static_cast<std::size_t>(supplier) > offers[cls].size()) {
    throw std::invalid_argument("supplier index out of range");
  }
  return offers[cls][static_cast<std::size_t>(supplier - 1)];
}

int InventoryState::pending_quantity(std::size_t cls) const {
  int q = 0;
  for (const auto& p : pending) {
    if (p.cls == cls) q += p.quantity;
  }
  return q;
}

InventoryReport update_inventory(InventoryState& inv, std::span<const int> demand, double clock, double dt) {
  const std::size_t n = inv.stock.size();
  if (demand.size() != n) throw std::invalid_argument("demand vector size does not match class count");
  for (int d : demand) {
    if (d < 0) throw std::invalid_argument("demand must be >= 0");
  }
  InventoryReport r;
  r.arrivals_applied.assign(n, 0);
  r.overflow.assign(n, 0);
  r.demand_satisfied.assign(n, 0);
  r.stockouts.assign(n, 0);
  r.holding_by_class.assign(n, 0.0);
  r.virtual_by_class.assign(n, 0.0);

  std::vector<PendingOrder> still_pending;
  still_pending.reserve(inv.pending.size());
  for (const auto& order : inv.pending) {
    if (order.arrival > clock + kTimeEps) {
      still_pending.push_back(order);
      continue;
    }
    const std::size_t c = order.cls;
    const int room = std::max(0, inv.capacity[c] - inv.stock[c]);
    const int applied = std::min(order.quantity, room);
    const int excess = order.quantity - applied;
    inv.stock[c] += applied;
    r.arrivals_applied[c] += applied;
    if (excess > 0) {
      const double spend = excess * order.unit_price;
      r.overflow[c] += excess;
      r.virtual_by_class[c] += spend;
      r.virtual_added += spend;
      inv.virtual_spend += spend;
    }
    r.arrived.push_back(order);
    r.arrived_excess.push_back(excess);
  }
  inv.pending = std::move(still_pending);

  for (std::size_t c = 0; c < n; ++c) {
    const int satisfied = std::min(inv.stock[c], demand[c]);
    inv.stock[c] -= satisfied;
    r.demand_satisfied[c] = satisfied;
    r.stockouts[c] = demand[c] - satisfied;
  }
  for (std::size_t c = 0; c < n; ++c) {
    r.holding_by_class[c] = inv.stock[c] * inv.holding_cost[c] * dt;
    r.holding += r.holding_by_class[c];
  }
  return r;
}

ScenarioConfig ScenarioConfig::nominal() { return ScenarioConfig{}; }

ScenarioConfig ScenarioConfig::mini() {
  ScenarioConfig c;
  c.n_aircraft = 4;
  c.n_bays = 2;
  c.horizon = 96.0;
  c.missions.required_max = 4;
  return c;
}

int ScenarioConfig::horizon_steps() const { return static_cast<int>(std::llround(horizon / dt)); }

int ScenarioConfig::window_steps() const { return static_cast<int>(std::llround(window_hours / dt)); }

int ScenarioConfig::window_count() const {
  const int w = window_steps();
  return (horizon_steps() + w - 1) / w;
}

void ScenarioConfig::validate() const {
  auto whole = [](double x) { return std::abs(x - std::round(x)) < 1e-9; };
  if (n_aircraft < 1) throw ConfigError("scenario.fleet_size must be >= 1");
  if (n_bays < 1) throw ConfigError("scenario.bays must be >= 1");
  if (complexity < 1) throw ConfigError("scenario.complexity must be an integer >= 1");
  if (!(failure_intensity > 0)) throw ConfigError("scenario.failure_intensity must be > 0");
  if (!(dt > 0)) throw ConfigError("scenario.dt_hours must be > 0");
  if (!(horizon > 0) || !whole(horizon / dt)) throw ConfigError("scenario.horizon_hours must be a positive multiple of dt");
  if (!(window_hours > 0) || !whole(window_hours / dt)) {
    throw ConfigError("scenario.window_hours must be a positive multiple of dt");
  }
  if (classes.empty()) throw ConfigError("scenario.components must list at least one class");
  for (const auto& c : classes) c.validate();
  if (n_suppliers < 1) throw ConfigError("logistics.suppliers must be >= 1");
  if (supplier_price_mult.size() != static_cast<std::size_t>(n_suppliers)) {
    throw ConfigError("logistics.supplier_price_mult needs one entry per supplier");
  }
  if (supplier_lead.size() != static_cast<std::size_t>(n_suppliers)) {
    throw ConfigError("logistics.supplier_lead_hours needs one entry per supplier");
  }
  for (double m : supplier_price_mult) {
    if (!(m > 0)) throw ConfigError("logistics.supplier_price_mult entries must be > 0");
  }
  for (double l : supplier_lead) {
    if (!(l > 0)) throw ConfigError("logistics.supplier_lead_hours entries must be > 0");
  }
  const auto& m = missions;
  if (m.per_window < 1) throw ConfigError("missions.per_window must be >= 1");
  if (m.duration_min < 1 || m.duration_max < m.duration_min) throw ConfigError("missions.duration range invalid");
  if (m.required_min < 1 || m.required_max < m.required_min) throw ConfigError("missions.required range invalid");
  if (!(m.reward_rate > 0)) throw ConfigError("missions.reward_rate must be > 0");
  if (!(labor_rate >= 0)) throw ConfigError("logistics.labor_rate must be >= 0");
  if (!(repair_sigma_frac >= 0)) throw ConfigError("logistics.repair_sigma_frac must be >= 0");
  if (!(min_repair_hours > 0)) throw ConfigError("logistics.min_repair_hours must be > 0");
  if (stock_capacity < 1) throw ConfigError("logistics.capacity must be >= 1");
  if (!(holding_frac >= 0)) throw ConfigError("logistics.holding_frac must be >= 0");
  if (max_order_qty < 0) throw ConfigError("logistics.max_order_qty must be >= 0");
  if (initial_stock < 0 || initial_stock > stock_capacity) {
    throw ConfigError("logistics.initial_stock must be in [0, capacity]");
  }
  if (!(penalty_multiplier >= 0)) throw ConfigError("missions.penalty_multiplier must be >= 0");
}

std::vector<ComponentClassParams> ScenarioConfig::effective_classes() const {
  return scale_mfhbf(classes, failure_intensity);
}

SupplierCatalog ScenarioConfig::catalog() const {
  SupplierCatalog cat;
  for (const auto& c : classes) {
    std::vector<SupplierOffer> row;
    for (int v = 0; v < n_suppliers; ++v) {
      row.push_back({c.repair_cost * supplier_price_mult[static_cast<std::size_t>(v)],
                     supplier_lead[static_cast<std::size_t>(v)]});
    }
    cat.offers.push_back(std::move(row));
  }
  return cat;
}

std::vector<MissionSpec> generate_missions(const ScenarioConfig& cfg, double window_start, int next_id, Rng& rng) {
  std::vector<MissionSpec> out;
  if (window_start >= cfg.horizon - kTimeEps) return out;
  const auto& mc = cfg.missions;
  std::uniform_int_distribution<int> duration_dist(mc.duration_min, mc.duration_max);
  std::uniform_int_distribution<int> required_dist(mc.required_min, mc.required_max);
  std::uniform_int_distribution<int> offset_dist(0, cfg.window_steps() - 1);
  for (int i = 0; i < mc.per_window; ++i) {
    const int duration = duration_dist(rng);
    const int nr = required_dist(rng);
    const int offset = offset_dist(rng);
    double ts = window_start + offset * cfg.dt;
    if (ts + duration > cfg.horizon + kTimeEps) ts = std::max(window_start, cfg.horizon - duration);
    if (ts + duration > cfg.horizon + kTimeEps) continue;  // window too short for this mission
    MissionSpec m;
    m.ts = ts;
    m.te = ts + duration;
    m.nr = nr;
    m.re = std::round(mc.reward_rate * nr * duration * 10.0) / 10.0;
    out.push_back(m);
  }
  std::stable_sort(out.begin(), out.end(), [](const MissionSpec& a, const MissionSpec& b) { return a.ts < b.ts; });
  for (auto& m : out) m.id = next_id++;
  return out;
}

bool WorldState::at_window_start() const { return step % cfg.window_steps() == 0; }

bool WorldState::decision_pending() const {
  return std::any_of(board.begin(), board.end(), [this](int id) {
    return missions[static_cast<std::size_t>(id)].status == MissionStatus::Candidate;
  });
}

int WorldState::window_index() const { return step / cfg.window_steps(); }

int WorldState::count_status(AircraftStatus s) const {
  return static_cast<int>(std::count_if(fleet.begin(), fleet.end(), [s](const auto& a) { return a.status == s; }));
}

int WorldState::available() const {
  return count_status(AircraftStatus::OnMission) + count_status(AircraftStatus::Standby);
}

WorldState make_world(const ScenarioConfig& cfg) {
  cfg.validate();
  WorldState w;
  w.cfg = cfg;
  w.classes = cfg.effective_classes();
  w.rng = WorldRngs{make_stream(cfg.seed, 1), make_stream(cfg.seed, 2), make_stream(cfg.seed, 3)};

  const std::size_t n_classes = cfg.class_count();
  const int per_aircraft = cfg.components_per_aircraft();
  for (int i = 0; i < cfg.n_aircraft; ++i) {
    AircraftState ac;
    ac.id = i;
    for (int j = 0; j < per_aircraft; ++j) {
      const std::size_t cls = static_cast<std::size_t>(j) % n_classes;
      ac.components.push_back(make_component(cls, w.classes[cls]));
    }
    w.fleet.push_back(std::move(ac));
  }
  for (int b = 0; b < cfg.n_bays; ++b) w.bays.push_back(MaintenanceBay{b, cfg.labor_rate, std::nullopt});

  w.catalog = cfg.catalog();
  const std::size_t mid = static_cast<std::size_t>(cfg.n_suppliers) / 2;
  for (std::size_t c = 0; c < n_classes; ++c) {
    w.inventory.stock.push_back(cfg.initial_stock);
    w.inventory.capacity.push_back(cfg.stock_capacity);
    w.inventory.holding_cost.push_back(cfg.holding_frac * w.catalog.offers[c][mid].unit_price);
  }
  open_window(w);
  return w;
}

JointActions idle_actions(const WorldState& world) {
  JointActions a;
  a.general.assign(world.board.size(), 0);
  a.flight.assign(world.fleet.size(), 0);
  a.maintenance.assign(world.bays.size(), 0);
  a.resource.assign(world.cfg.class_count(), ResourceOrder{});
  return a;
}

StepEvents step_world(WorldState& w, const JointActions& a) {
  if (w.finished()) throw EpisodeFinished("episode finished at clock " + format_double(w.clock));
  validate_actions(w, a);

  const ScenarioConfig& cfg = w.cfg;
  const double t = w.clock;
  StepEvents ev;
  ev.step = w.step;
  ev.fleet_size = static_cast<int>(w.fleet.size());

  const int step = w.step;
  auto event = [step](EventKind kind) {
    Event e;
    e.step = step;
    e.kind = kind;
    return e;
  };
  auto fail_mission = [&](MissionSpec& m) {
    m.status = MissionStatus::Failed;
    const double penalty = cfg.penalty_multiplier * m.re;
    w.ledger.penalty += penalty;
    Event e = event(EventKind::MissionFailed);
    e.mission = m.id;
    e.amount = penalty;
    e.value = m.re;
    w.log.push(e);
    ev.missions.push_back({m.id, m.re, false});
  };

  // Strategic directives.
  if (w.decision_pending()) {
    for (std::size_t i = 0; i < w.board.size(); ++i) {
      auto& m = w.missions[static_cast<std::size_t>(w.board[i])];
      if (m.status != MissionStatus::Candidate) continue;
      m.status = a.general[i] == 1 ? MissionStatus::Accepted : MissionStatus::Rejected;
      Event e = event(a.general[i] == 1 ? EventKind::MissionAccepted : EventKind::MissionRejected);
      e.mission = m.id;
      w.log.push(e);
    }
  }

  // Flight: maintenance requests, then crews for missions starting now.
  for (std::size_t i = 0; i < w.fleet.size(); ++i) {
    auto& ac = w.fleet[i];
    if (a.flight[i] != -1 || ac.queued || ac.bay || ac.status == AircraftStatus::OnMission) continue;
    ac.queued = true;
    w.maintenance_queue.push_back(ac.id);
    recompute_status(ac);
    Event e = event(EventKind::MaintenanceQueued);
    e.aircraft = ac.id;
    w.log.push(e);
  }
  std::vector<int> volunteers;
  for (std::size_t i = 0; i < w.fleet.size(); ++i) {
    if (a.flight[i] == 1 && w.fleet[i].status == AircraftStatus::Standby) volunteers.push_back(static_cast<int>(i));
  }
  std::size_t next_volunteer = 0;
  for (int id : w.board) {
    auto& m = w.missions[static_cast<std::size_t>(id)];
    if (m.status != MissionStatus::Accepted || !same_time(m.ts, t)) continue;
    const std::size_t need = static_cast<std::size_t>(m.nr);
    if (volunteers.size() - next_volunteer < need) {
      fail_mission(m);
      continue;
    }
    m.status = MissionStatus::Running;
    Event started = event(EventKind::MissionStarted);
    started.mission = m.id;
    started.quantity = m.nr;
    w.log.push(started);
    for (std::size_t k = 0; k < need; ++k) {
      auto& ac = w.fleet[static_cast<std::size_t>(volunteers[next_volunteer++])];
      ac.assigned_mission = m.id;
      recompute_status(ac);
      m.crew.push_back(ac.id);
      Event e = event(EventKind::SortieStarted);
      e.aircraft = ac.id;
      e.mission = m.id;
      w.log.push(e);
      ++ev.sorties_started;
    }
  }

  // Maintenance: each activated idle bay pulls the queue head.
  for (std::size_t b = 0; b < w.bays.size(); ++b) {
    auto& bay = w.bays[b];
    if (a.maintenance[b] != 1 || bay.busy() || w.maintenance_queue.empty()) continue;
    const int aircraft = w.maintenance_queue.front();
    w.maintenance_queue.pop_front();
    auto& ac = w.fleet[static_cast<std::size_t>(aircraft)];
    const int comp = pick_repair_component(ac);
    const auto& params = w.classes[ac.components[static_cast<std::size_t>(comp)].class_index];
    const auto draw = sample_repair(bay, params, cfg.repair_sigma_frac, cfg.min_repair_hours, w.rng.repair);
    bay.job = RepairJob{aircraft, comp, t, t + draw.hours, draw.hours, draw.cost, false};
    ac.queued = false;
    ac.bay = bay.id;
    recompute_status(ac);
    w.ledger.maintenance += draw.cost;
    Event e = event(EventKind::RepairStarted);
    e.bay = bay.id;
    e.aircraft = aircraft;
    e.component = comp;
    e.cls = static_cast<int>(ac.components[static_cast<std::size_t>(comp)].class_index);
    e.amount = draw.cost;
    e.value = draw.hours;
    w.log.push(e);
    ev.jobs_started.push_back({bay.id, aircraft, comp, draw.cost, draw.hours});
  }

  // Procurement.
  for (std::size_t c = 0; c < a.resource.size(); ++c) {
    const auto& r = a.resource[c];
    if (!r.order) continue;
    const auto& offer = w.catalog.offer(c, r.supplier);
    const double cost = r.quantity * offer.unit_price;
    w.ledger.procurement += cost;
    if (r.quantity > 0) w.inventory.pending.push_back({c, r.quantity, t, t + offer.lead_time, offer.unit_price});
    Event e = event(EventKind::OrderPlaced);
    e.cls = static_cast<int>(c);
    e.supplier = r.supplier;
    e.quantity = r.quantity;
    e.amount = cost;
    e.value = offer.lead_time;
    w.log.push(e);
    ev.orders.push_back({c, true, r.supplier, r.quantity, offer.unit_price, offer.lead_time});
  }

  // Flying aircraft accumulate dt flight hours.
  for (auto& ac : w.fleet) {
    if (ac.status != AircraftStatus::OnMission) continue;
    bool failed_now = false;
    for (std::size_t j = 0; j < ac.components.size(); ++j) {
      auto& comp = ac.components[j];
      comp = degrade_component(comp, w.classes[comp.class_index], cfg.dt, t, cfg.shock_model, w.rng.health);
      if (comp.failed) {
        failed_now = true;
        Event e = event(EventKind::ComponentFailed);
        e.aircraft = ac.id;
        e.component = static_cast<int>(j);
        e.cls = static_cast<int>(comp.class_index);
        e.value = *comp.fault_time;
        w.log.push(e);
      }
    }
    if (failed_now) {
      auto& m = w.missions[static_cast<std::size_t>(*ac.assigned_mission)];
      m.sortie_failed = true;
      Event e = event(EventKind::SortieFailed);
      e.aircraft = ac.id;
      e.mission = m.id;
      w.log.push(e);
      ++ev.sorties_failed;
      ac.assigned_mission.reset();
      recompute_status(ac);
    }
  }

  ++w.step;
  w.clock = w.step * cfg.dt;
  const double now = w.clock;

  // Diagnostics catch up with faults whose detection delay has elapsed.
  for (auto& ac : w.fleet) {
    for (std::size_t j = 0; j < ac.components.size(); ++j) {
      auto& comp = ac.components[j];
      if (!comp.failed || comp.detected || !comp.fault_visible(now)) continue;
      comp.detected = true;
      comp.observed_health = 0.0;
      Event e = event(EventKind::FaultDetected);
      e.aircraft = ac.id;
      e.component = static_cast<int>(j);
      e.cls = static_cast<int>(comp.class_index);
      w.log.push(e);
    }
  }

  // Missions reaching their end time.
  for (auto& m : w.missions) {
    if (m.status != MissionStatus::Running || m.te > now + kTimeEps) continue;
    for (int id : m.crew) {
      auto& ac = w.fleet[static_cast<std::size_t>(id)];
      if (ac.assigned_mission != m.id) continue;
      ac.assigned_mission.reset();
      recompute_status(ac);
      Event e = event(EventKind::SortieSucceeded);
      e.aircraft = id;
      e.mission = m.id;
      w.log.push(e);
      ++ev.sorties_succeeded;
    }
    if (m.sortie_failed) {
      fail_mission(m);
    } else {
      m.status = MissionStatus::Succeeded;
      Event e = event(EventKind::MissionSucceeded);
      e.mission = m.id;
      e.amount = m.re;
      w.log.push(e);
      ev.missions.push_back({m.id, m.re, true});
    }
  }

  // Repairs due this step draw spares; arrivals land first.
  const std::size_t n_classes = cfg.class_count();
  std::vector<int> demand(n_classes, 0);
  for (const auto& bay : w.bays) {
    if (bay.job && bay.job->finish_time <= now + kTimeEps) {
      const auto& ac = w.fleet[static_cast<std::size_t>(bay.job->aircraft)];
      ++demand[ac.components[static_cast<std::size_t>(bay.job->component)].class_index];
    }
  }
  auto report = update_inventory(w.inventory, demand, now, cfg.dt);
  for (const auto& order : report.arrived) {
    Event e = event(EventKind::OrderArrived);
    e.cls = static_cast<int>(order.cls);
    e.quantity = order.quantity;
    w.log.push(e);
    ev.arrivals += order.quantity;
  }
  // One overflow record per order, in the order virtual spend accrued.
  for (std::size_t i = 0; i < report.arrived.size(); ++i) {
    const int excess = report.arrived_excess[i];
    if (excess == 0) continue;
    Event e = event(EventKind::InventoryOverflow);
    e.cls = static_cast<int>(report.arrived[i].cls);
    e.quantity = excess;
    e.amount = excess * report.arrived[i].unit_price;
    w.log.push(e);
  }
  std::vector<int> spares = report.demand_satisfied;
  for (auto& bay : w.bays) {
    if (!bay.job || bay.job->finish_time > now + kTimeEps) continue;
    auto& job = *bay.job;
    auto& ac = w.fleet[static_cast<std::size_t>(job.aircraft)];
    auto& comp = ac.components[static_cast<std::size_t>(job.component)];
    ++ev.demand;
    if (spares[comp.class_index] == 0) {
      if (!job.blocked) {
        job.blocked = true;
        Event e = event(EventKind::RepairBlocked);
        e.bay = bay.id;
        e.aircraft = job.aircraft;
        e.cls = static_cast<int>(comp.class_index);
        w.log.push(e);
      }
      continue;
    }
    --spares[comp.class_index];
    comp = make_component(comp.class_index, w.classes[comp.class_index]);
    Event e = event(EventKind::RepairFinished);
    e.bay = bay.id;
    e.aircraft = job.aircraft;
    e.component = job.component;
    e.cls = static_cast<int>(comp.class_index);
    w.log.push(e);
    ++ev.repairs_finished;
    bay.job.reset();
    ac.bay.reset();
    recompute_status(ac);
  }
  ev.stockouts = report.stockouts;

  w.ledger.inventory += report.holding;
  Event holding = event(EventKind::Holding);
  holding.amount = report.holding;
  w.log.push(holding);

  ev.clock = now;
  ev.available = w.available();
  ev.stock = w.inventory.stock;
  ev.holding_cost = w.inventory.holding_cost;
  Event ready = event(EventKind::Readiness);
  ready.value = ev.available;
  w.log.push(ready);

  if (!w.finished() && w.at_window_start()) open_window(w);
  return ev;
}

std::uint64_t scenario_fingerprint(const ScenarioConfig& cfg) {
  std::string canon = "aircraft=" + std::to_string(cfg.n_aircraft) + ";bays=" + std::to_string(cfg.n_bays) +
                      ";components=" + std::to_string(cfg.components_per_aircraft()) +
                      ";classes=" + std::to_string(cfg.class_count()) + ";suppliers=" + std::to_string(cfg.n_suppliers) +
                      ";slots=" + std::to_string(cfg.missions.per_window) +
                      ";max_order=" + std::to_string(cfg.max_order_qty);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace phm
