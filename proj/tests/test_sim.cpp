#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "phm/errors.hpp"
#include "phm/sim.hpp"

using namespace phm;

namespace {

ComponentClassParams params_for(ComponentClass c) {
  for (const auto& p : nominal_component_table()) {
    if (p.class_id == c) return p;
  }
  throw std::logic_error("no such class");
}

// Flies a fresh component one hour at a time until it fails.
int hours_to_failure(const ComponentClassParams& p, ShockModel model, Rng& rng) {
  auto c = make_component(0, p);
  int h = 0;
  while (!c.failed) {
    c = degrade_component(c, p, 1.0, h, model, rng);
    ++h;
  }
  return h;
}

ScenarioConfig trace_config() {
  ScenarioConfig cfg;
  cfg.n_aircraft = 1;
  cfg.n_bays = 1;
  cfg.horizon = 10;
  cfg.window_hours = 10;
  cfg.classes = {{ComponentClass::AVI, 10.0, 0.0, 3.0, 5.0, 1.0, 0.0}};
  cfg.n_suppliers = 1;
  cfg.supplier_price_mult = {1.0};
  cfg.supplier_lead = {2.0};
  cfg.initial_stock = 0;
  cfg.holding_frac = 0.01;
  cfg.repair_sigma_frac = 0.0;
  cfg.missions.per_window = 1;
  cfg.missions.required_min = 1;
  cfg.missions.duration_max = 4;
  cfg.shock_model = ShockModel::None;
  return cfg;
}

}  // namespace

TEST(Degrade, ZeroExposureIsIdentity) {
  Rng rng(1);
  auto p = params_for(ComponentClass::POW);
  auto c = make_component(2, p);
  c.health = 0.4;
  Rng before = rng;
  auto out = degrade_component(c, p, 0.0, 5.0, ShockModel::WearShock, rng);
  EXPECT_EQ(out.health, 0.4);
  EXPECT_FALSE(out.failed);
  EXPECT_EQ(rng, before);
}

TEST(Degrade, OneHourOfAvionicsWear) {
  Rng rng(1);
  auto p = params_for(ComponentClass::AVI);
  auto out = degrade_component(make_component(0, p), p, 1.0, 0.0, ShockModel::None, rng);
  EXPECT_NEAR(out.health, 1.0 - 1.0 / 120.0, 1e-15);
  EXPECT_EQ(out.observed_health, out.health);
}

TEST(Degrade, RejectsBadInput) {
  Rng rng(1);
  auto p = params_for(ComponentClass::AVI);
  auto c = make_component(0, p);
  EXPECT_THROW(degrade_component(c, p, -1.0, 0.0, ShockModel::None, rng), std::invalid_argument);
  c.failed = true;
  c.health = 0.0;
  EXPECT_THROW(degrade_component(c, p, 1.0, 0.0, ShockModel::None, rng), std::invalid_argument);
}

TEST(Degrade, ShockFreeLifeIsCeilOfMfhbf) {
  Rng rng(3);
  for (const auto& p : nominal_component_table()) {
    EXPECT_EQ(hours_to_failure(p, ShockModel::None, rng), static_cast<int>(std::ceil(p.mfhbf)));
  }
  auto odd = params_for(ComponentClass::MEC);
  odd.mfhbf = 100.5;
  EXPECT_EQ(hours_to_failure(odd, ShockModel::None, rng), 101);
}

TEST(Degrade, FailureStampsFaultAndDelaysObservation) {
  Rng rng(3);
  auto p = params_for(ComponentClass::POW);
  auto c = make_component(0, p);
  c.health = 0.5 / p.mfhbf;
  c.observed_health = c.health;
  auto out = degrade_component(c, p, 1.0, 40.0, ShockModel::None, rng);
  ASSERT_TRUE(out.failed);
  EXPECT_EQ(out.health, 0.0);
  EXPECT_EQ(*out.fault_time, 41.0);
  EXPECT_EQ(*out.fault_visible_at, 44.0);
  EXPECT_EQ(out.observed_health, c.observed_health);
  EXPECT_FALSE(out.fault_visible(43.0));
  EXPECT_TRUE(out.fault_visible(44.0));
}

TEST(Degrade, PredictionFlagsWithinLead) {
  Rng rng(3);
  auto p = params_for(ComponentClass::STR);  // lead 100 of 500
  auto c = make_component(0, p);
  c.health = 101.5 / 500.0;
  c = degrade_component(c, p, 1.0, 0.0, ShockModel::None, rng);
  EXPECT_FALSE(c.predicted_failure);
  c = degrade_component(c, p, 1.0, 1.0, ShockModel::None, rng);
  EXPECT_TRUE(c.predicted_failure);
  auto avi = params_for(ComponentClass::AVI);
  auto a = make_component(0, avi);
  a.health = 0.01;
  EXPECT_FALSE(degrade_component(a, avi, 0.5, 0.0, ShockModel::None, rng).predicted_failure);
}

TEST(Degrade, WearShockMeanLifeMatchesRenewalEstimate) {
  Rng rng(11);
  auto p = params_for(ComponentClass::POW);
  const int trials = 20000;
  double sum = 0;
  for (int i = 0; i < trials; ++i) sum += hours_to_failure(p, ShockModel::WearShock, rng);
  EXPECT_NEAR(sum / trials, 250.0 / 1.2, 0.02 * 250.0 / 1.2);
}

TEST(ScaleMfhbf, MultipliesOnlyMfhbf) {
  auto table = nominal_component_table();
  auto same = scale_mfhbf(table, 1.0);
  for (std::size_t i = 0; i < table.size(); ++i) EXPECT_EQ(same[i].mfhbf, table[i].mfhbf);
  auto half = scale_mfhbf(table, 0.5);
  EXPECT_EQ(half[3].mfhbf, 250.0);
  EXPECT_EQ(half[3].repair_cost, table[3].repair_cost);
  EXPECT_EQ(scale_mfhbf(table, 2.0)[4].mfhbf, 200.0);
  EXPECT_THROW(scale_mfhbf(table, 0.0), std::invalid_argument);
  EXPECT_THROW(scale_mfhbf(table, -1.0), std::invalid_argument);
}

TEST(Repair, DegenerateAndCost) {
  Rng rng(5);
  MaintenanceBay bay;
  auto pow = params_for(ComponentClass::POW);
  auto d = sample_repair(bay, pow, 0.0, 1.0, rng);
  EXPECT_EQ(d.hours, 120.0);
  auto avi = params_for(ComponentClass::AVI);
  auto a = sample_repair(bay, avi, 0.0, 1.0, rng);
  EXPECT_EQ(a.hours, 24.0);
  EXPECT_NEAR(a.cost, 7.4, 1e-12);
}

TEST(Repair, SampleMeanAndTruncation) {
  Rng rng(5);
  MaintenanceBay bay;
  auto pow = params_for(ComponentClass::POW);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto d = sample_repair(bay, pow, 0.2, 1.0, rng);
    ASSERT_GE(d.hours, 1.0);
    ASSERT_NEAR(d.cost, 0.1 * d.hours + 20.0, 1e-12);
    sum += d.hours;
  }
  EXPECT_GE(sum / n, 118.8);
  EXPECT_LE(sum / n, 121.2);
  auto wide = pow;
  wide.repair_time_mean = 1.0;
  for (int i = 0; i < 1000; ++i) ASSERT_GE(sample_repair(bay, wide, 2.0, 1.0, rng).hours, 1.0);
}

TEST(Inventory, BalanceAndOverflow) {
  InventoryState inv;
  inv.stock = {5, 9};
  inv.capacity = {10, 10};
  inv.holding_cost = {0.1, 0.0};
  inv.pending = {{0, 1, 0.0, 3.0, 5.0}, {1, 3, 0.0, 3.0, 20.0}, {1, 4, 0.0, 9.0, 20.0}};
  std::vector<int> demand{2, 0};
  auto r = update_inventory(inv, demand, 3.0, 1.0);
  EXPECT_EQ(inv.stock[0], 4);
  EXPECT_EQ(inv.stock[1], 10);
  EXPECT_EQ(r.overflow[1], 2);
  EXPECT_DOUBLE_EQ(inv.virtual_spend, 40.0);
  EXPECT_DOUBLE_EQ(r.holding, 0.4);
  ASSERT_EQ(inv.pending.size(), 1u);
  EXPECT_EQ(inv.pending[0].quantity, 4);
  EXPECT_EQ(inv.pending_quantity(1), 4);
}

TEST(Inventory, IdleAccruesHoldingAndReportsStockout) {
  InventoryState inv;
  inv.stock = {3};
  inv.capacity = {10};
  inv.holding_cost = {0.05};
  std::vector<int> zero{0};
  auto r = update_inventory(inv, zero, 1.0, 1.0);
  EXPECT_EQ(inv.stock[0], 3);
  EXPECT_DOUBLE_EQ(r.holding, 0.15000000000000002);
  std::vector<int> big{5};
  r = update_inventory(inv, big, 2.0, 1.0);
  EXPECT_EQ(inv.stock[0], 0);
  EXPECT_EQ(r.demand_satisfied[0], 3);
  EXPECT_EQ(r.stockouts[0], 2);
  std::vector<int> neg{-1};
  EXPECT_THROW(update_inventory(inv, neg, 3.0, 1.0), std::invalid_argument);
}

TEST(Missions, CountRangesAndMoments) {
  auto cfg = ScenarioConfig::nominal();
  Rng rng(9);
  EXPECT_TRUE(generate_missions(cfg, cfg.horizon, 0, rng).empty());
  auto one = generate_missions(cfg, 0.0, 0, rng);
  EXPECT_EQ(one.size(), 6u);
  double dsum = 0, nsum = 0;
  int n = 0;
  for (int w = 0; w < 2000; ++w) {
    auto ms = generate_missions(cfg, 24.0 * (w % 29), n, rng);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const auto& m = ms[i];
      ASSERT_EQ(m.id, n);
      ASSERT_LT(m.ts, m.te);
      ASSERT_LE(m.te, cfg.horizon);
      ASSERT_GE(m.duration(), 2);
      ASSERT_LE(m.duration(), 10);
      ASSERT_GE(m.nr, 2);
      ASSERT_LE(m.nr, 8);
      ASSERT_NEAR(m.re, std::round(m.nr * m.duration() * 10) / 10, 1e-12);
      if (i > 0) ASSERT_LE(ms[i - 1].ts, m.ts);
      dsum += m.duration();
      nsum += m.nr;
      ++n;
    }
  }
  EXPECT_GE(dsum / n, 5.9);
  EXPECT_LE(dsum / n, 6.1);
  EXPECT_GE(nsum / n, 4.9);
  EXPECT_LE(nsum / n, 5.1);
}

TEST(Config, ValidationNamesField) {
  auto cfg = ScenarioConfig::nominal();
  cfg.failure_intensity = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("failure_intensity"), std::string::npos);
  }
  cfg = ScenarioConfig::nominal();
  cfg.complexity = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(ScenarioConfig::mini().validate());
}

TEST(World, NominalShape) {
  auto w = make_world(ScenarioConfig::nominal());
  EXPECT_EQ(w.fleet.size(), 12u);
  EXPECT_EQ(w.bays.size(), 6u);
  EXPECT_EQ(w.fleet[0].components.size(), 5u);
  EXPECT_EQ(w.board.size(), 6u);
  EXPECT_EQ(w.cfg.horizon_steps(), 720);
  EXPECT_EQ(w.cfg.window_count(), 30);
  EXPECT_NEAR(w.inventory.holding_cost[2], 0.005 * 20.0, 1e-15);
  auto cfg = ScenarioConfig::nominal();
  cfg.complexity = 2;
  EXPECT_EQ(make_world(cfg).fleet[0].components.size(), 10u);
}

TEST(World, IdleStepOnlyAdvancesClockAndHolding) {
  auto cfg = ScenarioConfig::nominal();
  auto w = make_world(cfg);
  auto a = idle_actions(w);
  step_world(w, a);  // rejects the board
  w.board.clear();
  auto before_ledger = w.ledger;
  auto ev = step_world(w, idle_actions(w));
  EXPECT_EQ(w.clock, 2.0);
  EXPECT_EQ(ev.available, 12);
  EXPECT_TRUE(ev.missions.empty());
  EXPECT_EQ(w.ledger.maintenance, before_ledger.maintenance);
  EXPECT_EQ(w.ledger.procurement, before_ledger.procurement);
  EXPECT_NEAR(w.ledger.inventory - before_ledger.inventory, 3 * 0.005 * (5.0 + 7.0 + 20.0 + 15.0 + 10.0), 1e-12);
}

TEST(World, RejectsMalformedActionsAndFinishedEpisodes) {
  auto cfg = ScenarioConfig::mini();
  auto w = make_world(cfg);
  auto a = idle_actions(w);
  a.flight.pop_back();
  EXPECT_THROW(step_world(w, a), std::invalid_argument);
  a = idle_actions(w);
  a.resource[0].quantity = 3;
  EXPECT_THROW(step_world(w, a), std::invalid_argument);
  a = idle_actions(w);
  a.general.clear();
  EXPECT_THROW(step_world(w, a), std::invalid_argument);
  while (!w.finished()) {
    a = idle_actions(w);
    step_world(w, a);
  }
  EXPECT_EQ(w.step, 96);
  EXPECT_THROW(step_world(w, idle_actions(w)), EpisodeFinished);
}

TEST(World, HandTracedScenario) {
  auto w = make_world(trace_config());
  ASSERT_EQ(w.board.size(), 1u);
  auto& m = w.missions[0];
  m.ts = 1;
  m.te = 5;
  m.nr = 1;
  m.re = 4;
  w.fleet[0].components[0].health = 0.25;
  w.fleet[0].components[0].observed_health = 0.25;

  auto act = [&](std::vector<int> general, int flight, int maint, int qty) {
    JointActions a = idle_actions(w);
    a.general = std::move(general);
    a.flight = {flight};
    a.maintenance = {maint};
    if (qty > 0) a.resource[0] = {true, 1, qty};
    return step_world(w, a);
  };

  act({1}, 0, 0, 1);
  EXPECT_EQ(w.missions[0].status, MissionStatus::Accepted);
  EXPECT_DOUBLE_EQ(w.ledger.procurement, 5.0);
  act({}, 1, 0, 0);
  EXPECT_EQ(w.fleet[0].status, AircraftStatus::OnMission);
  EXPECT_EQ(w.inventory.stock[0], 1);
  act({}, 1, 0, 0);
  auto ev = act({}, 1, 0, 0);
  EXPECT_EQ(ev.sorties_failed, 1);
  EXPECT_EQ(w.fleet[0].status, AircraftStatus::Down);
  EXPECT_EQ(w.fleet[0].components[0].observed_health, (0.25 - 0.1) - 0.1);
  ev = act({}, 0, 0, 0);
  ASSERT_EQ(ev.missions.size(), 1u);
  EXPECT_FALSE(ev.missions[0].success);
  EXPECT_EQ(w.fleet[0].components[0].observed_health, 0.0);
  EXPECT_DOUBLE_EQ(w.ledger.penalty, 8.0);
  act({}, -1, 1, 0);
  EXPECT_EQ(w.fleet[0].status, AircraftStatus::InMaintenance);
  EXPECT_NEAR(w.ledger.maintenance, 5.3, 1e-12);
  act({}, 0, 0, 0);
  ev = act({}, 0, 0, 0);
  EXPECT_EQ(ev.repairs_finished, 1);
  EXPECT_EQ(w.fleet[0].status, AircraftStatus::Standby);
  EXPECT_EQ(w.fleet[0].components[0].health, 1.0);
  EXPECT_EQ(w.inventory.stock[0], 0);
  act({}, 0, 0, 0);
  act({}, 0, 0, 0);
  EXPECT_TRUE(w.finished());
  EXPECT_NEAR(w.ledger.inventory, 0.3, 1e-12);
  EXPECT_NEAR(w.ledger.total(), 5.0 + 5.3 + 0.3 + 8.0, 1e-12);
}

TEST(World, SameSeedSameLog) {
  auto run = [](std::uint64_t seed) {
    auto cfg = ScenarioConfig::mini();
    cfg.seed = seed;
    auto w = make_world(cfg);
    Rng policy(seed);
    while (!w.finished()) {
      auto a = idle_actions(w);
      for (auto& g : a.general) g = static_cast<int>(policy() % 2);
      for (auto& f : a.flight) f = static_cast<int>(policy() % 3) - 1;
      for (auto& b : a.maintenance) b = static_cast<int>(policy() % 2);
      step_world(w, a);
    }
    std::ostringstream os;
    w.log.write(os);
    return os.str();
  };
  EXPECT_EQ(run(4), run(4));
  EXPECT_NE(run(4), run(5));
}
