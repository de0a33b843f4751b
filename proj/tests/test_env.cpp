#include <gtest/gtest.h>

#include <vector>

#include "phm/env.hpp"
#include "phm/errors.hpp"

using namespace phm;

namespace {

StepEvents empty_step(int fleet = 12, int available = 0) {
  StepEvents ev;
  ev.fleet_size = fleet;
  ev.available = available;
  return ev;
}

}  // namespace

TEST(Layout, FlightDimensionOnNominal) {
  const auto dims = LayoutDims::from(ScenarioConfig::nominal());
  const auto flight = ObservationLayout::make(Role::Flight, dims);
  EXPECT_EQ(flight.block("missions").length, 30u);
  EXPECT_EQ(flight.block("fleet").length, 108u);
  EXPECT_EQ(flight.block("directive").length, 6u);
  EXPECT_EQ(flight.dim(), 144u);
}

TEST(Layout, EveryRoleSeesTheBoard) {
  const auto dims = LayoutDims::from(ScenarioConfig::nominal());
  for (Role r : {Role::General, Role::Flight, Role::Maintenance, Role::Resource, Role::FlatJoint}) {
    const auto l = ObservationLayout::make(r, dims);
    EXPECT_TRUE(l.has("missions")) << to_string(r);
    std::size_t sum = 0;
    for (const auto& b : l.blocks()) {
      EXPECT_EQ(b.offset, sum);
      sum += b.length;
    }
    EXPECT_EQ(sum, l.dim());
  }
  EXPECT_FALSE(ObservationLayout::make(Role::General, dims).has("directive"));
  EXPECT_THROW(ObservationLayout::make(Role::General, dims).block("queue"), std::invalid_argument);
}

TEST(Layout, ComplexityGrowsFleetBlock) {
  auto cfg = ScenarioConfig::nominal();
  cfg.complexity = 2;
  const auto l = ObservationLayout::make(Role::Flight, LayoutDims::from(cfg));
  EXPECT_EQ(l.block("fleet").length, 12u * (10 + 4));
  EXPECT_EQ(l.dim(), 30u + 168u + 6u);
}

TEST(Layout, SegmentsPerRole) {
  const auto dims = LayoutDims::from(ScenarioConfig::nominal());
  EXPECT_EQ(dims.resource_width(), 34);
  const auto g = SegmentLayout::make(Role::General, dims);
  EXPECT_EQ(g.count(), 6u);
  EXPECT_EQ(g.total(), 12);
  const auto f = SegmentLayout::make(Role::Flight, dims);
  EXPECT_EQ(f.count(), 12u);
  EXPECT_EQ(f.total(), 36);
  const auto m = SegmentLayout::make(Role::Maintenance, dims);
  EXPECT_EQ(m.count(), 6u);
  const auto r = SegmentLayout::make(Role::Resource, dims);
  EXPECT_EQ(r.count(), 5u);
  EXPECT_EQ(r.total(), 5 * 34);
  const auto flat = SegmentLayout::make(Role::FlatJoint, dims);
  EXPECT_EQ(flat.count(), 6u + 12u + 6u + 5u);
  EXPECT_EQ(flat.total(), 12 + 36 + 12 + 170);
  EXPECT_EQ(flat.offset(6), 12);
}

TEST(Observation, FreshWorldHasFullHealth) {
  const auto cfg = ScenarioConfig::nominal();
  const auto world = make_world(cfg);
  const auto dims = LayoutDims::from(cfg);
  const auto l = ObservationLayout::make(Role::General, dims);
  const auto obs = encode_observation(l, world);
  ASSERT_EQ(static_cast<std::size_t>(obs.size()), l.dim());
  const auto fleet = l.block("fleet");
  for (int a = 0; a < 12; ++a) {
    for (int c = 0; c < 5; ++c) EXPECT_DOUBLE_EQ(obs(fleet.offset + a * 9 + c), 1.0);
    for (int f = 5; f < 9; ++f) EXPECT_DOUBLE_EQ(obs(fleet.offset + a * 9 + f), 0.0);
  }
  const auto time = l.block("time");
  EXPECT_DOUBLE_EQ(obs(time.offset), 0.0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(obs.size()); ++i) {
    EXPECT_GE(obs(i), -1.0);
    EXPECT_LE(obs(i), 1.0);
  }
}

TEST(Observation, UndetectedFaultKeepsLastObservedHealth) {
  auto cfg = ScenarioConfig::mini();
  auto world = make_world(cfg);
  auto& comp = world.fleet[1].components[2];
  comp.health = 0.0;
  comp.failed = true;
  comp.fault_time = 0.0;
  comp.fault_visible_at = 3.0;
  comp.observed_health = 0.4;
  const auto l = ObservationLayout::make(Role::Flight, LayoutDims::from(cfg));
  const auto obs = encode_observation(l, world);
  const auto base = l.block("fleet").offset + 1 * 9;
  EXPECT_DOUBLE_EQ(obs(base + 2), 0.4);
  EXPECT_DOUBLE_EQ(obs(base + 5 + 2), 0.0);  // failure flag hidden too
}

TEST(Observation, PaddedWorldAndOversizedWorld) {
  const auto dims = LayoutDims::from(ScenarioConfig::nominal());
  auto small = ScenarioConfig::nominal();
  small.n_aircraft = 6;
  auto world = make_world(small);
  EXPECT_NO_THROW(dims.check_fits(world));
  const auto l = ObservationLayout::make(Role::Flight, dims);
  const auto obs = encode_observation(l, world);
  const auto fleet = l.block("fleet");
  EXPECT_DOUBLE_EQ(obs(fleet.offset + 7 * 9), 0.0);
  auto big = ScenarioConfig::nominal();
  big.n_aircraft = 13;
  EXPECT_THROW(dims.check_fits(make_world(big)), ConfigError);
}

TEST(Actions, NeutralAndDirectMappings) {
  const auto dims = LayoutDims::from(ScenarioConfig::nominal());
  const auto fl = SegmentLayout::make(Role::Flight, dims);
  std::vector<int> ones(12, 1);
  const auto fa = decode_action(Role::Flight, ones, fl, dims);
  EXPECT_EQ(fa.flight, std::vector<int>(12, 0));

  const auto gl = SegmentLayout::make(Role::General, dims);
  const std::vector<int> mask{1, 0, 0, 1, 0, 0};
  EXPECT_EQ(decode_action(Role::General, mask, gl, dims).general, mask);

  const auto o = decode_resource_index(0, 3, 10);
  EXPECT_FALSE(o.order);
  EXPECT_EQ(o.supplier, 1);
  EXPECT_EQ(o.quantity, 0);
}

TEST(Actions, ResourceIndexRoundTrip) {
  for (int i = 0; i < 34; ++i) {
    const auto o = decode_resource_index(i, 3, 10);
    EXPECT_EQ(encode_resource_order(o, 3, 10), i);
    if (i > 0) {
      EXPECT_TRUE(o.order);
      EXPECT_GE(o.supplier, 1);
      EXPECT_LE(o.supplier, 3);
      EXPECT_GE(o.quantity, 0);
      EXPECT_LE(o.quantity, 10);
    }
  }
  EXPECT_THROW(decode_resource_index(34, 3, 10), std::invalid_argument);
}

TEST(Actions, EncodeInvertsDecode) {
  const auto dims = LayoutDims::from(ScenarioConfig::nominal());
  const auto seg = SegmentLayout::make(Role::FlatJoint, dims);
  std::vector<int> idx;
  for (std::size_t k = 0; k < seg.count(); ++k) idx.push_back(static_cast<int>((k * 7 + 3) % seg.width(k)));
  const auto a = decode_action(Role::FlatJoint, idx, seg, dims);
  EXPECT_EQ(encode_action(Role::FlatJoint, a, dims), idx);
  idx[0] = 2;
  EXPECT_THROW(decode_action(Role::FlatJoint, idx, seg, dims), std::invalid_argument);
  idx.pop_back();
  EXPECT_THROW(decode_action(Role::FlatJoint, idx, seg, dims), std::invalid_argument);
}

TEST(Actions, FitTrimsPaddingAndFillsMissingRoles) {
  auto cfg = ScenarioConfig::mini();
  auto world = make_world(cfg);
  JointActions a;
  a.flight.assign(12, 0);
  a.maintenance.assign(6, 1);
  const auto fit = fit_actions(a, world);
  EXPECT_EQ(fit.flight.size(), 4u);
  EXPECT_EQ(fit.maintenance.size(), 2u);
  EXPECT_EQ(fit.resource.size(), 5u);
  EXPECT_NO_THROW(step_world(world, fit));
}

TEST(Rewards, Flight) {
  RewardConfig cfg;
  EXPECT_DOUBLE_EQ(reward_flight(std::vector<StepEvents>{empty_step()}, cfg), 0.0);
  std::vector<StepEvents> ok{empty_step(12, 12), empty_step(12, 12)};
  ok[1].missions.push_back({0, 10.0, true});
  EXPECT_DOUBLE_EQ(reward_flight(ok, cfg), 14.0);
  std::vector<StepEvents> bad{empty_step()};
  bad[0].missions.push_back({0, 10.0, false});
  EXPECT_DOUBLE_EQ(reward_flight(bad, cfg), -20.0);
}

TEST(Rewards, Maintenance) {
  RewardConfig cfg;
  EXPECT_DOUBLE_EQ(reward_maintenance(std::vector<StepEvents>{empty_step()}, cfg), 0.0);
  std::vector<StepEvents> ev{empty_step()};
  ev[0].jobs_started.push_back({0, 0, 0, 5.0, 24.0});
  EXPECT_NEAR(reward_maintenance(ev, cfg), -9.8, 1e-12);
  ev[0].jobs_started.push_back({1, 1, 0, 5.0, 24.0});
  EXPECT_NEAR(reward_maintenance(ev, cfg), -19.6, 1e-12);
}

TEST(Rewards, Resource) {
  RewardConfig cfg;
  std::vector<StepEvents> ev{empty_step()};
  EXPECT_DOUBLE_EQ(reward_resource(ev, cfg), 0.0);
  ev[0].orders.push_back({0, true, 1, 2, 5.0, 10.0});
  ev[0].stock = {3};
  ev[0].holding_cost = {0.1};
  EXPECT_NEAR(reward_resource(ev, cfg), -15.3, 1e-12);
  std::vector<StepEvents> gated{empty_step()};
  gated[0].orders.push_back({0, false, 2, 7, 5.0, 10.0});
  EXPECT_DOUBLE_EQ(reward_resource(gated, cfg), 0.0);
}

TEST(Rewards, GeneralCombination) {
  RewardConfig cfg;
  EXPECT_DOUBLE_EQ(reward_general(0, 0, 0, cfg), 0.0);
  EXPECT_NEAR(reward_general(14.0, -9.8, -15.3, cfg), 4.08, 1e-12);
  cfg.tau_m = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Rewards, StepRewardsAddUp) {
  RewardConfig cfg;
  StepEvents ev = empty_step(4, 3);
  ev.missions.push_back({2, 8.0, true});
  ev.jobs_started.push_back({0, 1, 1, 7.0, 24.0});
  ev.stock = {2, 0};
  ev.holding_cost = {0.5, 0.25};
  const auto r = step_rewards(ev, cfg);
  EXPECT_DOUBLE_EQ(r.flight, 8.0 + 2.0 * 0.75);
  EXPECT_DOUBLE_EQ(r.maintenance, -(7.0 + 0.2 * 24.0));
  EXPECT_DOUBLE_EQ(r.resource, -1.0);
  EXPECT_DOUBLE_EQ(r.general, r.flight + 0.7 * r.maintenance + 0.2 * r.resource);
}
