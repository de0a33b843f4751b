#include "phm/commanders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "phm/errors.hpp"

namespace phm {

AgentHyper general_hyper() {
  AgentHyper h;
  h.hidden = {256, 256};
  h.batch = 64;
  h.lr = 1e-4;
  h.gamma = 0.99;
  h.tau = 0.001;
  h.buffer = 100000;
  return h;
}

AgentHyper tactical_hyper() {
  AgentHyper h;
  h.hidden = {128, 128};
  h.batch = 128;
  h.lr = 1e-3;
  h.gamma = 0.95;
  h.tau = 0.005;
  h.buffer = 1000000;
  return h;
}

AgentHyper flat_hyper() {
  AgentHyper h = general_hyper();
  h.hidden = {512, 512};
  return h;
}

AgentHyper default_hyper(Role role) {
  switch (role) {
    case Role::General: return general_hyper();
    case Role::FlatJoint: return flat_hyper();
    default: return tactical_hyper();
  }
}

CommanderAgent::CommanderAgent(Role role, const LayoutDims& dims, AgentHyper hp, std::uint64_t seed)
    : role_(role),
      obs_(ObservationLayout::make(role, dims)),
      seg_(SegmentLayout::make(role, dims)),
      hp_(std::move(hp)),
      buffer_(hp_.buffer, hp_.per),
      rng_(make_stream(seed, 100 + static_cast<std::uint64_t>(role))) {
  std::vector<int> sizes{static_cast<int>(obs_.dim())};
  sizes.insert(sizes.end(), hp_.hidden.begin(), hp_.hidden.end());
  sizes.push_back(seg_.total());
  Rng init = make_stream(seed, 200 + static_cast<std::uint64_t>(role));
  policy_ = QNetwork::init(sizes, init);
  target_ = policy_;
}

Eigen::VectorXd CommanderAgent::observe(const WorldState& world, const Upstream& upstream) const {
  return encode_observation(obs_, world, upstream);
}

std::vector<int> CommanderAgent::select(const Eigen::VectorXd& obs, double epsilon) {
  return select_action(policy_.forward(obs), seg_, epsilon, rng_);
}

JointActions CommanderAgent::act(const WorldState& world, const Upstream& upstream, bool train_mode,
                                 std::vector<int>* indices_out, Eigen::VectorXd* obs_out) {
  Eigen::VectorXd x = observe(world, upstream);
  auto idx = select(x, train_mode ? epsilon() : 0.0);
  JointActions a = decode_action(role_, idx, seg_, obs_.dims());
  if (indices_out) *indices_out = std::move(idx);
  if (obs_out) *obs_out = std::move(x);
  return a;
}

void CommanderAgent::remember(Transition t) {
  if (t.state.size() != obs_.dim() || t.next_state.size() != obs_.dim() || t.actions.size() != seg_.count()) {
    throw std::invalid_argument("transition shape does not match the " + std::string(to_string(role_)) + " agent");
  }
  buffer_.push(std::move(t));
}

std::optional<TrainStats> CommanderAgent::train_step(double beta) {
  auto batch = buffer_.sample(hp_.batch, beta, rng_);
  if (!batch) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(batch->items.size());
  const auto d = static_cast<Eigen::Index>(obs_.dim());
  Matrix x(d, n);
  Matrix xn(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch->items[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      x(j, i) = t.state[static_cast<std::size_t>(j)];
      xn(j, i) = t.next_state[static_cast<std::size_t>(j)];
    }
  }
  QNetwork::Cache cache;
  const Matrix q = policy_.forward(x, cache);
  const Matrix qp_next = policy_.forward(xn);
  const Matrix qt_next = target_.forward(xn);

  Matrix d_out = Matrix::Zero(q.rows(), n);
  std::vector<double> td(static_cast<std::size_t>(n));
  TrainStats stats;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Transition& t = *batch->items[ui];
    const Eigen::VectorXd qi = q.col(i);
    const double y = double_dqn_target(t.reward, qp_next.col(i), qt_next.col(i), t.terminal, t.discount, seg_);
    const double delta = segmented_value(qi, seg_, t.actions) - y;
    const auto h = huber(delta, hp_.huber_delta);
    const double w = batch->weights[ui];
    stats.loss += w * h.loss / static_cast<double>(n);
    stats.mean_abs_td += std::abs(delta) / static_cast<double>(n);
    const double g = w * h.grad / static_cast<double>(n);
    for (std::size_t k = 0; k < seg_.count(); ++k) d_out(seg_.offset(k) + t.actions[k], i) += g;
    td[ui] = delta;
  }
  stats.grad_norm = policy_.backward_and_step(cache, d_out, hp_.lr);
  target_.soft_update(policy_, hp_.tau);
  buffer_.update_priorities(batch->indices, td);
  ++train_steps_;
  return stats;
}

void RulePolicyConfig::validate() const {
  for (double v : {maintenance_threshold, reorder_point, healthy_threshold}) {
    if (!(v > 0 && v < 1)) throw ConfigError("rule thresholds must lie in (0,1)");
  }
}

double visible_health(const AircraftState& ac, double clock) {
  return ac.any_visible_failure(clock) ? 0.0 : ac.min_observed_health();
}

JointActions rule_policy(const WorldState& w, const RulePolicyConfig& cfg) {
  JointActions a = idle_actions(w);
  const double clock = w.clock;

  std::vector<int> healthy;  // standby aircraft fit to fly, healthiest first
  for (std::size_t i = 0; i < w.fleet.size(); ++i) {
    const auto& ac = w.fleet[i];
    const double h = visible_health(ac, clock);
    const bool looks_standby = !ac.assigned_mission && !ac.bay && !ac.queued;
    if (!looks_standby) continue;
    if (h < cfg.maintenance_threshold) {
      a.flight[i] = -1;
    } else if (h >= cfg.healthy_threshold) {
      healthy.push_back(static_cast<int>(i));
    }
  }
  std::stable_sort(healthy.begin(), healthy.end(), [&](int x, int y) {
    return visible_health(w.fleet[static_cast<std::size_t>(x)], clock) >
           visible_health(w.fleet[static_cast<std::size_t>(y)], clock);
  });

  if (w.decision_pending()) {
    for (std::size_t s = 0; s < w.board.size(); ++s) {
      const auto& m = w.missions[static_cast<std::size_t>(w.board[s])];
      a.general[s] = static_cast<int>(healthy.size()) >= m.nr ? 1 : 0;
    }
  }

  // Crew for missions that start this step (accepted now or earlier).
  int needed = 0;
  for (std::size_t s = 0; s < w.board.size(); ++s) {
    const auto& m = w.missions[static_cast<std::size_t>(w.board[s])];
    const bool accepted = m.status == MissionStatus::Accepted ||
                          (m.status == MissionStatus::Candidate && !a.general.empty() && a.general[s] == 1);
    if (accepted && std::abs(m.ts - clock) < 1e-9) needed += m.nr;
  }
  for (int k = 0; k < std::min(needed, static_cast<int>(healthy.size())); ++k) {
    a.flight[static_cast<std::size_t>(healthy[static_cast<std::size_t>(k)])] = 1;
  }

  const bool demand = !w.maintenance_queue.empty() ||
                      std::any_of(a.flight.begin(), a.flight.end(), [](int f) { return f == -1; });
  for (std::size_t b = 0; b < w.bays.size(); ++b) a.maintenance[b] = (demand && !w.bays[b].busy()) ? 1 : 0;

  const int mid = w.cfg.n_suppliers / 2 + 1;
  for (std::size_t c = 0; c < w.inventory.stock.size(); ++c) {
    const int cap = w.inventory.capacity[c];
    const int position = w.inventory.stock[c] + w.inventory.pending_quantity(c);
    if (position < cfg.reorder_point * cap) {
      a.resource[c] = ResourceOrder{true, mid, std::min(cap - position, w.cfg.max_order_qty)};
    }
  }
  return a;
}

JointActions random_policy(const WorldState& w, Rng& rng) {
  JointActions a = idle_actions(w);
  auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (auto& g : a.general) g = pick(0, 1);
  for (auto& f : a.flight) f = pick(-1, 1);
  for (auto& m : a.maintenance) m = pick(0, 1);
  const int width = 1 + w.cfg.n_suppliers * (w.cfg.max_order_qty + 1);
  for (auto& r : a.resource) r = decode_resource_index(pick(0, width - 1), w.cfg.n_suppliers, w.cfg.max_order_qty);
  return a;
}

FlatLayouts flat_joint_layout(const ScenarioConfig& cfg) {
  const auto dims = LayoutDims::from(cfg);
  return {ObservationLayout::make(Role::FlatJoint, dims), SegmentLayout::make(Role::FlatJoint, dims)};
}

}  // namespace phm
