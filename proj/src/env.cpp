#include "phm/env.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "phm/errors.hpp"

namespace phm {

namespace {

constexpr double kMoneyScale = 100.0;
constexpr double kDurationScale = 10.0;
constexpr double kRequiredScale = 8.0;

constexpr std::array<std::string_view, 5> kRoleNames = {"general", "flight", "maintenance", "resource", "flat"};

void check_index(int index, int width, std::size_t segment) {
  if (index < 0 || index >= width) {
    throw std::invalid_argument("action index " + std::to_string(index) + " outside segment " +
                                std::to_string(segment) + " of width " + std::to_string(width));
  }
}

}  // namespace

std::string_view to_string(Role r) { return kRoleNames.at(static_cast<std::size_t>(r)); }

std::optional<Role> parse_role(std::string_view name) {
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (kRoleNames[i] == name) return static_cast<Role>(i);
  }
  return std::nullopt;
}

LayoutDims LayoutDims::from(const ScenarioConfig& cfg) {
  LayoutDims d;
  d.slots = cfg.missions.per_window;
  d.aircraft = cfg.n_aircraft;
  d.components = cfg.components_per_aircraft();
  d.bays = cfg.n_bays;
  d.classes = static_cast<int>(cfg.class_count());
  d.suppliers = cfg.n_suppliers;
  d.max_order = cfg.max_order_qty;
  d.horizon = cfg.horizon;
  d.window = cfg.window_hours;
  return d;
}

void LayoutDims::check_fits(const WorldState& w) const {
  auto fail = [](const std::string& what, int world, int layout) {
    throw ConfigError(what + ": world has " + std::to_string(world) + ", layout allows " + std::to_string(layout));
  };
  const auto& cfg = w.cfg;
  if (cfg.missions.per_window > slots) fail("mission slots", cfg.missions.per_window, slots);
  if (cfg.n_aircraft > aircraft) fail("aircraft", cfg.n_aircraft, aircraft);
  if (cfg.components_per_aircraft() != components) fail("components per aircraft", cfg.components_per_aircraft(), components);
  if (cfg.n_bays > bays) fail("bays", cfg.n_bays, bays);
  if (static_cast<int>(cfg.class_count()) != classes) fail("component classes", static_cast<int>(cfg.class_count()), classes);
  if (cfg.n_suppliers != suppliers) fail("suppliers", cfg.n_suppliers, suppliers);
  if (cfg.max_order_qty != max_order) fail("max order quantity", cfg.max_order_qty, max_order);
}

void ObservationLayout::add(std::string name, std::size_t length) {
  blocks_.push_back({std::move(name), dim_, length});
  dim_ += length;
}

ObservationLayout ObservationLayout::make(Role role, const LayoutDims& d) {
  ObservationLayout l;
  l.role_ = role;
  l.dims_ = d;
  const auto slots = static_cast<std::size_t>(d.slots);
  const auto missions = slots * 5;
  const auto fleet = static_cast<std::size_t>(d.aircraft * (d.components + 4));
  const auto bays = static_cast<std::size_t>(d.bays * 3);
  const auto suppliers = static_cast<std::size_t>(d.classes * d.suppliers * 2);
  const auto inventory = static_cast<std::size_t>(d.classes * 4);
  switch (role) {
    case Role::General:
    case Role::FlatJoint:
      l.add("missions", missions);
      l.add("fleet", fleet);
      l.add("bays", bays);
      l.add("suppliers", suppliers);
      l.add("inventory", inventory);
      l.add("time", 1);
      break;
    case Role::Flight:
      l.add("missions", missions);
      l.add("fleet", fleet);
      l.add("directive", slots);
      break;
    case Role::Maintenance:
      l.add("missions", missions);
      l.add("bays", bays);
      l.add("queue", 1);
      l.add("flight_actions", static_cast<std::size_t>(d.aircraft));
      l.add("directive", slots);
      break;
    case Role::Resource:
      l.add("missions", missions);
      l.add("suppliers", suppliers);
      l.add("inventory", inventory);
      l.add("maintenance_actions", static_cast<std::size_t>(d.bays));
      l.add("directive", slots);
      break;
  }
  return l;
}

bool ObservationLayout::has(std::string_view name) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [name](const auto& b) { return b.name == name; });
}

const FeatureBlock& ObservationLayout::block(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw std::invalid_argument("layout for " + std::string(to_string(role_)) + " has no block '" + std::string(name) + "'");
}

double mission_status_code(MissionStatus s) { return (static_cast<double>(s) + 1.0) / 6.0; }

Eigen::VectorXd encode_observation(const ObservationLayout& layout, const WorldState& w, const Upstream& up) {
  const LayoutDims& d = layout.dims();
  d.check_fits(w);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.dim()));
  const double clock = w.clock;

  for (const auto& b : layout.blocks()) {
    auto at = [&x, &b](std::size_t i) -> double& { return x[static_cast<Eigen::Index>(b.offset + i)]; };
    if (b.name == "missions") {
      for (std::size_t s = 0; s < w.board.size(); ++s) {
        const auto& m = w.missions[static_cast<std::size_t>(w.board[s])];
        at(s * 5 + 0) = std::clamp((m.ts - clock) / d.window, -1.0, 1.0);
        at(s * 5 + 1) = m.duration() / kDurationScale;
        at(s * 5 + 2) = m.re / kMoneyScale;
        at(s * 5 + 3) = m.nr / kRequiredScale;
        at(s * 5 + 4) = mission_status_code(m.status);
      }
    } else if (b.name == "fleet") {
      const std::size_t stride = static_cast<std::size_t>(d.components) + 4;
      for (std::size_t i = 0; i < w.fleet.size(); ++i) {
        const auto& ac = w.fleet[i];
        const std::size_t base = i * stride;
        for (std::size_t j = 0; j < ac.components.size(); ++j) at(base + j) = ac.components[j].observed_health;
        const std::size_t flags = base + static_cast<std::size_t>(d.components);
        at(flags + 0) = ac.status == AircraftStatus::OnMission ? 1.0 : 0.0;
        at(flags + 1) = (ac.bay || ac.queued) ? 1.0 : 0.0;
        at(flags + 2) = (!ac.bay && !ac.queued && ac.any_visible_failure(clock)) ? 1.0 : 0.0;
        at(flags + 3) = ac.any_predicted_failure() ? 1.0 : 0.0;
      }
    } else if (b.name == "bays") {
      for (std::size_t i = 0; i < w.bays.size(); ++i) {
        const auto& bay = w.bays[i];
        if (!bay.job) continue;
        at(i * 3 + 0) = 1.0;
        at(i * 3 + 1) = std::max(0.0, bay.job->finish_time - clock) / d.horizon;
        at(i * 3 + 2) = bay.job->cost / kMoneyScale;
      }
    } else if (b.name == "suppliers") {
      for (std::size_t c = 0; c < w.catalog.offers.size(); ++c) {
        for (std::size_t v = 0; v < w.catalog.offers[c].size(); ++v) {
          const auto& o = w.catalog.offers[c][v];
          const std::size_t base = (c * static_cast<std::size_t>(d.suppliers) + v) * 2;
          at(base + 0) = o.unit_price / kMoneyScale;
          at(base + 1) = o.lead_time / d.horizon;
        }
      }
    } else if (b.name == "inventory") {
      std::vector<int> blocked(w.inventory.stock.size(), 0);
      for (const auto& bay : w.bays) {
        if (bay.job && bay.job->blocked) {
          const auto& comp = w.fleet[static_cast<std::size_t>(bay.job->aircraft)]
                                 .components[static_cast<std::size_t>(bay.job->component)];
          ++blocked[comp.class_index];
        }
      }
      for (std::size_t c = 0; c < w.inventory.stock.size(); ++c) {
        const double cap = w.inventory.capacity[c];
        at(c * 4 + 0) = w.inventory.stock[c] / cap;
        at(c * 4 + 1) = w.inventory.pending_quantity(c) / cap;
        at(c * 4 + 2) = w.inventory.holding_cost[c];
        at(c * 4 + 3) = static_cast<double>(blocked[c]) / d.bays;
      }
    } else if (b.name == "time") {
      at(0) = clock / d.horizon;
    } else if (b.name == "queue") {
      at(0) = static_cast<double>(w.maintenance_queue.size()) / d.aircraft;
    } else if (b.name == "directive") {
      for (std::size_t s = 0; s < std::min(up.directive.size(), b.length); ++s) at(s) = up.directive[s];
    } else if (b.name == "flight_actions") {
      for (std::size_t i = 0; i < std::min(up.flight.size(), b.length); ++i) at(i) = (up.flight[i] + 1) / 2.0;
    } else if (b.name == "maintenance_actions") {
      for (std::size_t i = 0; i < std::min(up.maintenance.size(), b.length); ++i) at(i) = up.maintenance[i];
    }
  }
  return x;
}

SegmentLayout::SegmentLayout(std::vector<int> widths) : widths_(std::move(widths)) {
  for (int wd : widths_) {
    if (wd < 1) throw std::invalid_argument("segment width must be >= 1");
    offsets_.push_back(total_);
    total_ += wd;
  }
}

SegmentLayout SegmentLayout::make(Role role, const LayoutDims& d) {
  std::vector<int> w;
  auto append = [&w](int n, int width) { w.insert(w.end(), static_cast<std::size_t>(n), width); };
  switch (role) {
    case Role::General: append(d.slots, 2); break;
    case Role::Flight: append(d.aircraft, 3); break;
    case Role::Maintenance: append(d.bays, 2); break;
    case Role::Resource: append(d.classes, d.resource_width()); break;
    case Role::FlatJoint:
      append(d.slots, 2);
      append(d.aircraft, 3);
      append(d.bays, 2);
      append(d.classes, d.resource_width());
      break;
  }
  return SegmentLayout(std::move(w));
}

ResourceOrder decode_resource_index(int index, int suppliers, int max_order) {
  const int width = 1 + suppliers * (max_order + 1);
  check_index(index, width, 0);
  if (index == 0) return ResourceOrder{};
  const int k = index - 1;
  return ResourceOrder{true, k / (max_order + 1) + 1, k % (max_order + 1)};
}

int encode_resource_order(const ResourceOrder& o, int suppliers, int max_order) {
  if (!o.order) return 0;
  if (o.supplier < 1 || o.supplier > suppliers || o.quantity < 0 || o.quantity > max_order) {
    throw std::invalid_argument("order outside the resource head's range");
  }
  return 1 + (o.supplier - 1) * (max_order + 1) + o.quantity;
}

JointActions decode_action(Role role, std::span<const int> idx, const SegmentLayout& layout, const LayoutDims& d) {
  if (idx.size() != layout.count()) {
    throw std::invalid_argument("expected " + std::to_string(layout.count()) + " segment indices, got " +
                                std::to_string(idx.size()));
  }
  for (std::size_t k = 0; k < idx.size(); ++k) check_index(idx[k], layout.width(k), k);

  JointActions a;
  std::size_t k = 0;
  auto take = [&](int n, auto&& fn) {
    for (int i = 0; i < n; ++i, ++k) fn(idx[k]);
  };
  const bool flat = role == Role::FlatJoint;
  if (role == Role::General || flat) take(d.slots, [&](int v) { a.general.push_back(v); });
  if (role == Role::Flight || flat) take(d.aircraft, [&](int v) { a.flight.push_back(v - 1); });
  if (role == Role::Maintenance || flat) take(d.bays, [&](int v) { a.maintenance.push_back(v); });
  if (role == Role::Resource || flat) {
    take(d.classes, [&](int v) { a.resource.push_back(decode_resource_index(v, d.suppliers, d.max_order)); });
  }
  return a;
}

std::vector<int> encode_action(Role role, const JointActions& a, const LayoutDims& d) {
  std::vector<int> out;
  const bool flat = role == Role::FlatJoint;
  auto put = [&out](std::size_t n, std::size_t have, auto&& fn, int pad) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i < have ? fn(i) : pad);
  };
  if (role == Role::General || flat) {
    put(static_cast<std::size_t>(d.slots), a.general.size(), [&](std::size_t i) { return a.general[i]; }, 0);
  }
  if (role == Role::Flight || flat) {
    put(static_cast<std::size_t>(d.aircraft), a.flight.size(), [&](std::size_t i) { return a.flight[i] + 1; }, 1);
  }
  if (role == Role::Maintenance || flat) {
    put(static_cast<std::size_t>(d.bays), a.maintenance.size(), [&](std::size_t i) { return a.maintenance[i]; }, 0);
  }
  if (role == Role::Resource || flat) {
    put(static_cast<std::size_t>(d.classes), a.resource.size(),
        [&](std::size_t i) { return encode_resource_order(a.resource[i], d.suppliers, d.max_order); }, 0);
  }
  return out;
}

JointActions fit_actions(JointActions a, const WorldState& w) {
  auto fit = [](auto& v, std::size_t n, auto pad) { v.resize(n, pad); };
  fit(a.general, w.board.size(), 0);
  fit(a.flight, w.fleet.size(), 0);
  fit(a.maintenance, w.bays.size(), 0);
  fit(a.resource, w.cfg.class_count(), ResourceOrder{});
  return a;
}

void RewardConfig::validate() const {
  for (double v : {alpha, beta, gamma, eta, tau_f, tau_m, tau_r, failure_multiplier}) {
    if (!(v >= 0)) throw ConfigError("reward weights must be >= 0");
  }
}

double reward_flight(std::span<const StepEvents> events, const RewardConfig& cfg) {
  double r = 0.0;
  for (const auto& ev : events) {
    for (const auto& m : ev.missions) r += (m.success ? 1.0 : -cfg.failure_multiplier) * m.reward;
    if (ev.fleet_size > 0) r += cfg.alpha * ev.available / static_cast<double>(ev.fleet_size);
  }
  return r;
}

double reward_maintenance(std::span<const StepEvents> events, const RewardConfig& cfg) {
  double r = 0.0;
  for (const auto& ev : events) {
    for (const auto& j : ev.jobs_started) r -= j.cost + cfg.beta * j.hours;
  }
  return r;
}

double reward_resource(std::span<const StepEvents> events, const RewardConfig& cfg) {
  double cost = 0.0;
  for (const auto& ev : events) {
    for (const auto& o : ev.orders) {
      if (o.order) cost += o.quantity * o.unit_price + cfg.gamma * o.lead_time;
    }
    for (std::size_t c = 0; c < ev.stock.size(); ++c) cost += cfg.eta * ev.stock[c] * ev.holding_cost[c];
  }
  return -cost;
}

double reward_general(double rf, double rm, double rr, const RewardConfig& cfg) {
  return cfg.tau_f * rf + cfg.tau_m * rm + cfg.tau_r * rr;
}

StepRewards step_rewards(const StepEvents& ev, const RewardConfig& cfg) {
  std::span<const StepEvents> one(&ev, 1);
  StepRewards r;
  r.flight = reward_flight(one, cfg);
  r.maintenance = reward_maintenance(one, cfg);
  r.resource = reward_resource(one, cfg);
  r.general = reward_general(r.flight, r.maintenance, r.resource, cfg);
  return r;
}

}  // namespace phm
