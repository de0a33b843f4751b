#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "phm/env.hpp"
#include "phm/random.hpp"

namespace phm {

struct Transition {
  std::vector<float> state;
  std::vector<int> actions;  // one index per segment
  double reward = 0.0;
  std::vector<float> next_state;
  bool terminal = false;
  double discount = 0.99;  // applied to the bootstrap term
};

// Binary sum tree over leaf priorities; parents are recomputed from children
// so sums never drift.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity = 1);

  std::size_t capacity() const { return capacity_; }
  void set(std::size_t leaf, double value);
  double get(std::size_t leaf) const { return tree_[base_ + leaf]; }
  double total() const { return tree_[1]; }
  // Leaf whose cumulative range contains `prefix` (clamped into [0, total)).
  std::size_t find(double prefix) const;

 private:
  std::size_t capacity_;
  std::size_t base_;
  std::vector<double> tree_;
};

struct PerConfig {
  double alpha = 0.6;
  double eps = 0.01;
};

struct SampledBatch {
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // importance weights, max-normalized
  std::vector<const Transition*> items;
};

class PrioritizedReplay {
 public:
  PrioritizedReplay(std::size_t capacity, PerConfig cfg = {});

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return tree_.capacity(); }
  const PerConfig& config() const { return cfg_; }

  // Without a TD error the transition gets the current max priority (1 when empty).
  void push(Transition t, std::optional<double> td_error = std::nullopt);
  // Stratified proportional sampling. Empty when fewer than `batch` items.
  std::optional<SampledBatch> sample(std::size_t batch, double beta, Rng& rng) const;
  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

  double priority(std::size_t index) const { return tree_.get(index); }
  double probability(std::size_t index) const { return tree_.get(index) / tree_.total(); }
  double priority_for(double td_error) const;
  const Transition& at(std::size_t index) const { return items_[index]; }

 private:
  PerConfig cfg_;
  SumTree tree_;
  std::vector<Transition> items_;
  std::size_t next_ = 0;
  double max_priority_ = 1.0;
};

struct ExplorationSchedule {
  double start = 1.0;
  double min = 0.01;
  double decay = 0.995;
};

double epsilon_at(const ExplorationSchedule& s, std::uint64_t t);

// Linear anneal from `start` to `end` over `steps`, then held at `end`.
double beta_at(double start, double end, std::uint64_t steps, std::uint64_t t);

// Per segment: uniform with probability epsilon, otherwise argmax (lowest index on ties).
std::vector<int> select_action(const Eigen::VectorXd& q, const SegmentLayout& layout, double epsilon, Rng& rng);

std::vector<int> greedy_indices(const Eigen::VectorXd& q, const SegmentLayout& layout);

// Sum over segments of q at the given indices.
double segmented_value(const Eigen::VectorXd& q, const SegmentLayout& layout, std::span<const int> indices);

// r + discount * sum_k q_target(s', argmax_k q_policy(s')); r when terminal.
double double_dqn_target(double reward, const Eigen::VectorXd& q_policy_next, const Eigen::VectorXd& q_target_next,
                         bool terminal, double discount, const SegmentLayout& layout);

}  // namespace phm
