#include "phm/rl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phm {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("sum tree capacity must be >= 1");
  base_ = 1;
  while (base_ < capacity) base_ <<= 1;
  tree_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double value) {
  if (leaf >= capacity_) throw std::out_of_range("sum tree leaf out of range");
  std::size_t i = base_ + leaf;
  tree_[i] = value;
  for (i >>= 1; i >= 1; i >>= 1) tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
}

std::size_t SumTree::find(double prefix) const {
  prefix = std::clamp(prefix, 0.0, std::nextafter(total(), 0.0));
  std::size_t i = 1;
  while (i < base_) {
    const double left = tree_[2 * i];
    if (prefix < left || tree_[2 * i + 1] <= 0.0) {
      i = 2 * i;
    } else {
      prefix -= left;
      i = 2 * i + 1;
    }
  }
  return std::min(i - base_, capacity_ - 1);
}

PrioritizedReplay::PrioritizedReplay(std::size_t capacity, PerConfig cfg) : cfg_(cfg), tree_(capacity) {}

double PrioritizedReplay::priority_for(double td_error) const {
  return std::pow(std::abs(td_error) + cfg_.eps, cfg_.alpha);
}

void PrioritizedReplay::push(Transition t, std::optional<double> td_error) {
  const double p = td_error ? priority_for(*td_error) : max_priority_;
  std::size_t slot;
  if (items_.size() < tree_.capacity()) {
    slot = items_.size();
    items_.push_back(std::move(t));
  } else {
    slot = next_;
    items_[slot] = std::move(t);
  }
  next_ = (slot + 1) % tree_.capacity();
  tree_.set(slot, p);
  max_priority_ = std::max(max_priority_, p);
}

std::optional<SampledBatch> PrioritizedReplay::sample(std::size_t batch, double beta, Rng& rng) const {
  if (batch == 0 || items_.size() < batch) return std::nullopt;
  SampledBatch out;
  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch);
  const double n = static_cast<double>(items_.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double max_w = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double prefix = segment * (static_cast<double>(i) + u(rng));
    const std::size_t idx = tree_.find(prefix);
    const double prob = tree_.get(idx) / total;
    const double w = std::pow(n * prob, -beta);
    max_w = std::max(max_w, w);
    out.indices.push_back(idx);
    out.weights.push_back(w);
    out.items.push_back(&items_[idx]);
  }
  for (auto& w : out.weights) w /= max_w;
  return out;
}

void PrioritizedReplay::update_priorities(std::span<const std::size_t> indices, std::span<const double> td) {
  if (indices.size() != td.size()) throw std::invalid_argument("indices and TD errors differ in length");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double p = priority_for(td[i]);
    tree_.set(indices[i], p);
    max_priority_ = std::max(max_priority_, p);
  }
}

double epsilon_at(const ExplorationSchedule& s, std::uint64_t t) {
  return std::max(s.min, s.start * std::pow(s.decay, static_cast<double>(t)));
}

double beta_at(double start, double end, std::uint64_t steps, std::uint64_t t) {
  if (steps == 0 || t >= steps) return end;
  return start + (end - start) * static_cast<double>(t) / static_cast<double>(steps);
}

std::vector<int> greedy_indices(const Eigen::VectorXd& q, const SegmentLayout& layout) {
  std::vector<int> out(layout.count());
  for (std::size_t k = 0; k < layout.count(); ++k) {
    const int off = layout.offset(k);
    int best = 0;
    for (int j = 1; j < layout.width(k); ++j) {
      if (q[off + j] > q[off + best]) best = j;
    }
    out[k] = best;
  }
  return out;
}

std::vector<int> select_action(const Eigen::VectorXd& q, const SegmentLayout& layout, double epsilon, Rng& rng) {
  if (q.size() != layout.total()) throw std::invalid_argument("Q vector width does not match segment layout");
  auto out = greedy_indices(q, layout);
  if (epsilon <= 0.0) return out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < layout.count(); ++k) {
    if (u(rng) < epsilon) out[k] = std::uniform_int_distribution<int>(0, layout.width(k) - 1)(rng);
  }
  return out;
}

double segmented_value(const Eigen::VectorXd& q, const SegmentLayout& layout, std::span<const int> indices) {
  double v = 0.0;
  for (std::size_t k = 0; k < layout.count(); ++k) v += q[layout.offset(k) + indices[k]];
  return v;
}

double double_dqn_target(double reward, const Eigen::VectorXd& q_policy_next, const Eigen::VectorXd& q_target_next,
                         bool terminal, double discount, const SegmentLayout& layout) {
  if (terminal) return reward;
  const auto a = greedy_indices(q_policy_next, layout);
  return reward + discount * segmented_value(q_target_next, layout, a);
}

}  // namespace phm
