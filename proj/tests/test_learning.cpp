#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "phm/commanders.hpp"
#include "phm/errors.hpp"
#include "phm/neural.hpp"
#include "phm/rl.hpp"

using namespace phm;

namespace {

// Loss L = sum(c .* Q(x)); returns analytic and central-difference gradients.
std::pair<std::vector<double>, std::vector<double>> grad_pair(QNetwork net, const Matrix& x, const Matrix& c) {
  QNetwork::Cache cache;
  net.forward(x, cache);
  const auto analytic = flatten(net.gradients(cache, c));
  auto p = net.parameters();
  std::vector<double> numeric(p.size());
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    net.set_parameters(p);
    const double up = (net.forward(x).array() * c.array()).sum();
    p[i] = keep - h;
    net.set_parameters(p);
    const double down = (net.forward(x).array() * c.array()).sum();
    p[i] = keep;
    numeric[i] = (up - down) / (2 * h);
  }
  return {analytic, numeric};
}

Transition blank(std::size_t dim, std::size_t segs) {
  Transition t;
  t.state.assign(dim, 0.0f);
  t.next_state.assign(dim, 0.0f);
  t.actions.assign(segs, 0);
  return t;
}

}  // namespace

TEST(Huber, Branches) {
  EXPECT_DOUBLE_EQ(huber(0.0).loss, 0.0);
  EXPECT_DOUBLE_EQ(huber(0.0).grad, 0.0);
  EXPECT_DOUBLE_EQ(huber(0.5).loss, 0.125);
  EXPECT_DOUBLE_EQ(huber(0.5).grad, 0.5);
  EXPECT_DOUBLE_EQ(huber(2.0).loss, 1.5);
  EXPECT_DOUBLE_EQ(huber(2.0).grad, 1.0);
  EXPECT_DOUBLE_EQ(huber(-2.0).grad, -1.0);
}

TEST(Network, OrthogonalInit) {
  Rng rng(3);
  const Matrix w = orthogonal(8, 5, 2.0, rng);
  const Matrix gram = w.transpose() * w;
  EXPECT_TRUE(gram.isApprox(4.0 * Matrix::Identity(5, 5), 1e-10));
  const Matrix wide = orthogonal(3, 7, 1.0, rng);
  EXPECT_TRUE((wide * wide.transpose()).isApprox(Matrix::Identity(3, 3), 1e-10));
}

TEST(Network, ZeroGainCollapsesToOutputBias) {
  Rng rng(1);
  auto net = QNetwork::init({6, 8, 4}, rng);
  for (auto& l : net.layers()) {
    if (!l.norm) continue;
    l.gain.setZero();
    l.shift.setZero();
  }
  net.layers().back().b = Vector::LinSpaced(4, -1.0, 2.0);
  const Vector x = Vector::Random(6);
  EXPECT_TRUE(net.forward(x).isApprox(net.layers().back().b));
}

TEST(Network, GradientsMatchFiniteDifferences) {
  Rng rng(11);
  auto net = QNetwork::init({6, 8, 4}, rng);
  for (auto& l : net.layers()) {
    if (l.norm) {
      l.gain = Vector::Random(l.gain.size()).array() + 1.5;
      l.shift = Vector::Random(l.shift.size()) * 0.3;
    }
  }
  const Matrix x = Matrix::Random(6, 3);
  const Matrix c = Matrix::Random(4, 3);
  const auto [a, n] = grad_pair(net, x, c);
  ASSERT_EQ(a.size(), n.size());
  ASSERT_EQ(a.size(), net.parameter_count());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], n[i], 1e-6 * std::max(1.0, std::abs(n[i]))) << i;
}

TEST(Network, StaleCacheIsRejected) {
  Rng rng(2);
  auto net = QNetwork::init({3, 4, 2}, rng);
  QNetwork::Cache cache;
  const Matrix x = Matrix::Random(3, 2);
  net.forward(x, cache);
  const Matrix d = Matrix::Ones(2, 2);
  net.backward_and_step(cache, d, 1e-3);
  EXPECT_THROW(net.gradients(cache, d), StateError);
}

TEST(Network, ZeroGradientLeavesFreshNetUnchanged) {
  Rng rng(5);
  auto net = QNetwork::init({3, 4, 2}, rng);
  const auto before = net.parameters();
  auto grads = net.gradients([&] {
    QNetwork::Cache c;
    net.forward(Matrix::Random(3, 1), c);
    return c;
  }(), Matrix::Zero(2, 1));
  EXPECT_DOUBLE_EQ(net.apply(grads, 1e-3), 0.0);
  EXPECT_EQ(net.parameters(), before);
  for (double m : net.optimizer_state()) EXPECT_EQ(m, 0.0);
  EXPECT_EQ(net.adam_steps(), 1u);
}

TEST(Network, GradientClippedElementwise) {
  Rng rng(5);
  auto net = QNetwork::init({2, 3, 1}, rng);
  std::vector<LayerGrad> g;
  for (const auto& l : net.layers()) {
    LayerGrad lg;
    lg.dW = Matrix::Constant(l.W.rows(), l.W.cols(), 5.0);
    lg.db = Vector::Constant(l.b.size(), -5.0);
    if (l.norm) {
      lg.dgain = Vector::Constant(l.gain.size(), 0.5);
      lg.dshift = Vector::Zero(l.shift.size());
    }
    g.push_back(lg);
  }
  const double norm = net.apply(g, 1e-3);
  EXPECT_GT(norm, 5.0);
  const auto st = net.optimizer_state();
  const std::size_t n = net.parameter_count();
  ASSERT_EQ(st.size(), 2 * n);
  const auto flat = flatten(g);
  for (std::size_t i = 0; i < n; ++i) {
    const double clipped = std::clamp(flat[i], -1.0, 1.0);
    EXPECT_NEAR(st[i], 0.1 * clipped, 1e-15);
    EXPECT_NEAR(st[n + i], 0.001 * clipped * clipped, 1e-15);
  }
}

TEST(Network, SoftUpdate) {
  Rng rng(9);
  auto src = QNetwork::init({2, 3, 2}, rng);
  auto dst = src;
  src.set_parameters(std::vector<double>(src.parameter_count(), 1.0));
  dst.set_parameters(std::vector<double>(dst.parameter_count(), 0.0));
  dst.soft_update(src, 0.001);
  for (double p : dst.parameters()) EXPECT_NEAR(p, 0.001, 1e-15);
  dst.soft_update(src, 1.0);
  EXPECT_EQ(dst.parameters(), src.parameters());
}

TEST(SumTree, TotalsAndFind) {
  SumTree t(5);
  const double v[] = {1, 2, 3, 4, 5};
  for (std::size_t i = 0; i < 5; ++i) t.set(i, v[i]);
  EXPECT_DOUBLE_EQ(t.total(), 15.0);
  EXPECT_EQ(t.find(0.0), 0u);
  EXPECT_EQ(t.find(0.999), 0u);
  EXPECT_EQ(t.find(1.0), 1u);
  EXPECT_EQ(t.find(14.99), 4u);
  EXPECT_EQ(t.find(100.0), 4u);
  t.set(4, 0.0);
  EXPECT_DOUBLE_EQ(t.total(), 10.0);
  EXPECT_EQ(t.find(9.99), 3u);
}

TEST(Replay, BootstrapPriorityAndEviction) {
  PrioritizedReplay buf(2);
  auto t = blank(1, 1);
  t.reward = 1;
  buf.push(t);
  EXPECT_DOUBLE_EQ(buf.priority(0), 1.0);
  t.reward = 2;
  buf.push(t);
  t.reward = 3;
  buf.push(t);
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_DOUBLE_EQ(buf.at(0).reward, 3.0);
  EXPECT_DOUBLE_EQ(buf.at(1).reward, 2.0);
}

TEST(Replay, ProportionalProbability) {
  PrioritizedReplay buf(4);
  buf.push(blank(1, 1), 1.0);
  buf.push(blank(1, 1), 0.0);
  const double a = std::pow(1.01, 0.6);
  const double b = std::pow(0.01, 0.6);
  EXPECT_NEAR(buf.probability(0), a / (a + b), 1e-12);
  EXPECT_NEAR(buf.probability(0), 0.941, 5e-4);
}

TEST(Replay, EqualPrioritiesSampleUniformly) {
  PrioritizedReplay buf(4);
  for (int i = 0; i < 4; ++i) buf.push(blank(1, 1));
  Rng rng(4);
  std::vector<int> hits(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto s = buf.sample(1, 0.4, rng);
    ASSERT_TRUE(s);
    ++hits[s->indices[0]];
    EXPECT_DOUBLE_EQ(s->weights[0], 1.0);
  }
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int h : hits) EXPECT_NEAR(h, n / 4.0, 3 * sigma);
}

TEST(Replay, ImportanceWeightsAndUpdates) {
  PrioritizedReplay buf(8);
  for (int i = 0; i < 8; ++i) buf.push(blank(1, 1), i + 1.0);
  Rng rng(1);
  EXPECT_FALSE(buf.sample(9, 0.5, rng));
  auto s = buf.sample(8, 0.5, rng);
  ASSERT_TRUE(s);
  double maxw = 0;
  for (std::size_t k = 0; k < 8; ++k) {
    const double expect = std::pow(8 * buf.probability(s->indices[k]), -0.5);
    maxw = std::max(maxw, expect);
  }
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_NEAR(s->weights[k], std::pow(8 * buf.probability(s->indices[k]), -0.5) / maxw, 1e-12);
  }
  const std::vector<std::size_t> idx{2};
  const std::vector<double> td{-0.5};
  buf.update_priorities(idx, td);
  EXPECT_DOUBLE_EQ(buf.priority(2), std::pow(0.51, 0.6));
}

TEST(Bellman, DoubleDqnTarget) {
  const SegmentLayout seg({2, 2});
  Eigen::VectorXd q(4);
  q << 1, 3, 2, 0;
  EXPECT_NEAR(double_dqn_target(1.0, q, q, false, 0.95, seg), 5.75, 1e-12);
  EXPECT_DOUBLE_EQ(double_dqn_target(1.0, q, q, false, 0.0, seg), 1.0);
  EXPECT_DOUBLE_EQ(double_dqn_target(1.0, q, q * 100, true, 0.95, seg), 1.0);
  // Policy picks, target evaluates.
  Eigen::VectorXd qt(4);
  qt << 10, -1, -2, 20;
  EXPECT_NEAR(double_dqn_target(0.0, q, qt, false, 1.0, seg), -1 - 2, 1e-12);
  const std::vector<int> a{1, 0};
  EXPECT_DOUBLE_EQ(segmented_value(q, seg, a), 5.0);
}

TEST(Exploration, EpsilonSchedule) {
  ExplorationSchedule s;
  EXPECT_DOUBLE_EQ(epsilon_at(s, 0), 1.0);
  EXPECT_DOUBLE_EQ(epsilon_at(s, 1), 0.995);
  EXPECT_DOUBLE_EQ(epsilon_at(s, 100000), 0.01);
  EXPECT_DOUBLE_EQ(beta_at(0.4, 1.0, 100, 0), 0.4);
  EXPECT_DOUBLE_EQ(beta_at(0.4, 1.0, 100, 50), 0.7);
  EXPECT_DOUBLE_EQ(beta_at(0.4, 1.0, 100, 500), 1.0);
}

TEST(Exploration, SelectAction) {
  const SegmentLayout seg({3, 2});
  Eigen::VectorXd q(5);
  q << 0, 2, 2, -1, 4;
  Rng rng(7);
  EXPECT_EQ(select_action(q, seg, 0.0, rng), (std::vector<int>{1, 1}));
  std::vector<int> c0(3, 0);
  std::vector<int> c1(2, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto a = select_action(q, seg, 1.0, rng);
    ++c0[a[0]];
    ++c1[a[1]];
  }
  for (int h : c0) EXPECT_NEAR(h, n / 3.0, 3 * std::sqrt(n * (1 / 3.0) * (2 / 3.0)));
  for (int h : c1) EXPECT_NEAR(h, n / 2.0, 3 * std::sqrt(n * 0.25));
}

TEST(Agent, HandSetNetworkChoosesStandby) {
  const auto cfg = ScenarioConfig::nominal();
  const auto dims = LayoutDims::from(cfg);
  CommanderAgent agent(Role::Flight, dims, tactical_hyper(), 3);
  auto& out = agent.policy().layers().back();
  out.W.setZero();
  out.b.setZero();
  for (std::size_t k = 0; k < agent.segments().count(); ++k) out.b(agent.segments().offset(k) + 1) = 1.0;
  const auto world = make_world(cfg);
  std::vector<int> dir(6, 0);
  const auto a = agent.act(world, Upstream{dir, {}, {}}, false);
  EXPECT_EQ(a.flight, std::vector<int>(12, 0));
}

TEST(Agent, TrainStepAfterWarmup) {
  auto hp = tactical_hyper();
  hp.batch = 4;
  hp.buffer = 64;
  LayoutDims dims = LayoutDims::from(ScenarioConfig::mini());
  CommanderAgent agent(Role::Maintenance, dims, hp, 1);
  const auto dim = agent.observation_layout().dim();
  const auto segs = agent.segments().count();
  EXPECT_THROW(agent.remember(blank(dim + 1, segs)), std::invalid_argument);
  EXPECT_FALSE(agent.train_step(0.4));
  const auto target_before = agent.target().parameters();
  for (int i = 0; i < 6; ++i) {
    auto t = blank(dim, segs);
    t.state[i % dim] = 1.0f;
    t.reward = i;
    agent.remember(t);
  }
  const auto stats = agent.train_step(0.4);
  ASSERT_TRUE(stats);
  EXPECT_GT(stats->loss, 0.0);
  EXPECT_EQ(agent.train_steps(), 1u);
  EXPECT_NE(agent.target().parameters(), target_before);
}

TEST(Agent, SeededAgentsAreIdentical) {
  LayoutDims dims = LayoutDims::from(ScenarioConfig::mini());
  CommanderAgent a(Role::General, dims, general_hyper(), 5);
  CommanderAgent b(Role::General, dims, general_hyper(), 5);
  CommanderAgent c(Role::General, dims, general_hyper(), 6);
  EXPECT_EQ(a.policy().parameters(), b.policy().parameters());
  EXPECT_NE(a.policy().parameters(), c.policy().parameters());
  EXPECT_EQ(a.policy().parameters(), a.target().parameters());
}

TEST(RulePolicy, HealthyFleetIdles) {
  auto cfg = ScenarioConfig::mini();
  cfg.initial_stock = 10;
  auto w = make_world(cfg);
  w.board.clear();
  const auto a = rule_policy(w);
  EXPECT_EQ(a.flight, std::vector<int>(4, 0));
  EXPECT_EQ(a.maintenance, std::vector<int>(2, 0));
  for (const auto& o : a.resource) EXPECT_FALSE(o.order);
}

TEST(RulePolicy, ThresholdSendsWornAircraftToMaintenance) {
  auto cfg = ScenarioConfig::mini();
  cfg.n_aircraft = 2;
  cfg.initial_stock = 10;
  auto w = make_world(cfg);
  w.board.clear();
  for (auto& c : w.fleet[0].components) c.health = c.observed_health = 0.5;
  for (auto& c : w.fleet[1].components) c.health = c.observed_health = 0.1;
  const auto a = rule_policy(w);
  EXPECT_EQ(a.flight, (std::vector<int>{0, -1}));
  EXPECT_EQ(a.maintenance, (std::vector<int>{1, 1}));
}

TEST(RulePolicy, ReordersFromMidSupplier) {
  auto cfg = ScenarioConfig::nominal();
  cfg.initial_stock = 10;
  auto w = make_world(cfg);
  w.inventory.stock[2] = 2;
  const auto a = rule_policy(w);
  EXPECT_TRUE(a.resource[2].order);
  EXPECT_EQ(a.resource[2].supplier, 2);
  EXPECT_EQ(a.resource[2].quantity, 8);
  EXPECT_FALSE(a.resource[0].order);
}

TEST(RulePolicy, AcceptsWhenEnoughHealthyAircraft) {
  auto cfg = ScenarioConfig::mini();
  auto w = make_world(cfg);
  ASSERT_TRUE(w.decision_pending());
  const auto a = rule_policy(w);
  ASSERT_EQ(a.general.size(), w.board.size());
  for (std::size_t s = 0; s < w.board.size(); ++s) {
    EXPECT_EQ(a.general[s], w.missions[w.board[s]].nr <= 4 ? 1 : 0);
  }
}

TEST(RandomPolicy, ProducesValidActions) {
  auto w = make_world(ScenarioConfig::mini());
  Rng rng(3);
  for (int i = 0; i < 20 && !w.finished(); ++i) EXPECT_NO_THROW(step_world(w, random_policy(w, rng)));
}
