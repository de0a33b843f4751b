#include "phm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "phm/errors.hpp"

namespace phm {

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<SummaryRow> aggregate(std::span<const KpiRecord> records) {
  struct Metric {
    const char* name;
    std::optional<double> (*get)(const KpiRecord&);
  };
  static const Metric metrics[] = {
      {"r_ab", [](const KpiRecord& k) -> std::optional<double> { return k.r_ab; }},
      {"r_ms", [](const KpiRecord& k) -> std::optional<double> { return k.r_ms; }},
      {"r_ss", [](const KpiRecord& k) -> std::optional<double> { return k.r_ss; }},
      {"ttc", [](const KpiRecord& k) -> std::optional<double> { return k.ttc; }},
      {"r_cb", [](const KpiRecord& k) { return k.r_cb; }},
      {"r_vcb", [](const KpiRecord& k) { return k.r_vcb; }},
      {"r_total", [](const KpiRecord& k) -> std::optional<double> { return k.r_total; }},
      {"virtual", [](const KpiRecord& k) -> std::optional<double> { return k.virtual_cost; }},
  };
  std::vector<SummaryRow> out;
  for (const auto& m : metrics) {
    std::vector<double> xs;
    for (const auto& r : records) {
      if (auto v = m.get(r)) xs.push_back(*v);
    }
    SummaryRow row;
    row.metric = m.name;
    row.n = static_cast<int>(xs.size());
    if (!xs.empty()) {
      double s = 0.0;
      for (double x : xs) s += x;
      row.mean = s / static_cast<double>(xs.size());
      row.std = sample_std(xs);
    }
    out.push_back(row);
  }
  return out;
}

std::string_view to_string(SweepAxis a) { return a == SweepAxis::Complexity ? "complexity" : "failure"; }

std::optional<SweepAxis> parse_axis(std::string_view name) {
  if (name == "complexity") return SweepAxis::Complexity;
  if (name == "failure" || name == "failure_intensity") return SweepAxis::FailureIntensity;
  return std::nullopt;
}

std::vector<double> default_grid(SweepAxis a) {
  if (a == SweepAxis::Complexity) return {1, 2, 5, 10};
  return {0.5, 0.8, 1.0, 2.0};
}

ScenarioConfig apply_axis(ScenarioConfig base, SweepAxis axis, double value) {
  if (axis == SweepAxis::Complexity) {
    if (value < 1 || std::abs(value - std::round(value)) > 1e-12) {
      throw ConfigError("complexity grid values must be integers >= 1, got " + format_value(value));
    }
    base.complexity = static_cast<int>(std::lround(value));
  } else {
    if (!(value > 0)) throw ConfigError("failure-intensity grid values must be > 0, got " + format_value(value));
    base.failure_intensity = value;
  }
  base.validate();
  return base;
}

bool SweepResult::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const SweepCell& c) { return c.ok; });
}

std::string format_value(double v) { return format_double(v); }

SweepCell run_cell(const SweepConfig& cfg, const ScenarioConfig& base, double value, Method method,
                   std::uint64_t seed) {
  SweepCell cell;
  cell.value = value;
  cell.method = method;
  cell.seed = seed;
  try {
    ScenarioConfig sc = apply_axis(base, cfg.axis, value);
    AgentSet agents(method, sc, seed, cfg.general, cfg.tactical);
    agents.rule() = cfg.rule;
    if (agents.learns()) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      train(tc, sc, agents);
      cell.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!cfg.checkpoint_dir.empty()) {
        cell.checkpoint = cfg.checkpoint_dir + "/" + std::string(to_string(cfg.axis)) + "-" + format_value(value) +
                          "-" + std::string(to_string(method)) + "-s" + std::to_string(seed) + ".ckpt";
        save_checkpoint(cell.checkpoint, agents, tc.epochs);
      }
    }
    cell.eval = evaluate(sc, agents, cfg.eval_episodes, seed, cfg.train.rewards);
    for (auto& k : cell.eval) k.scenario = std::string(to_string(cfg.axis)) + "=" + format_value(value);
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

SweepResult sweep(const SweepConfig& cfg, const ScenarioConfig& base,
                  const std::function<void(const SweepCell&)>& on_cell) {
  if (cfg.values.empty()) throw ConfigError("sweep grid is empty");
  if (cfg.methods.empty()) throw ConfigError("sweep needs at least one method");
  if (cfg.seeds.empty()) throw ConfigError("sweep needs at least one seed");
  struct Job {
    double value;
    Method method;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double v : cfg.values) {
    for (Method m : cfg.methods) {
      for (auto s : cfg.seeds) jobs.push_back({v, m, s});
    }
  }
  SweepResult result;
  result.cells.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      result.cells[i] = run_cell(cfg, base, jobs[i].value, jobs[i].method, jobs[i].seed);
      if (on_cell) {
        std::lock_guard lock(report);
        on_cell(result.cells[i]);
      }
    }
  };
  const int n = std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

void write_raw(const std::string& path, const SweepResult& r, SweepAxis axis) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& c : r.cells) {
    for (const auto& k : c.eval) {
      auto j = nlohmann::json::parse(to_json_line(k));
      j["axis"] = std::string(to_string(axis));
      j["value"] = c.value;
      os << j.dump() << '\n';
    }
  }
}

void write_aggregate(const std::string& path, const SweepResult& r, SweepAxis axis) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << kAggregateHeader << '\n';
  // Seeds of one (value, method) pair are pooled into a single row set.
  for (std::size_t i = 0; i < r.cells.size();) {
    std::size_t j = i;
    std::vector<KpiRecord> pooled;
    while (j < r.cells.size() && r.cells[j].value == r.cells[i].value && r.cells[j].method == r.cells[i].method) {
      pooled.insert(pooled.end(), r.cells[j].eval.begin(), r.cells[j].eval.end());
      ++j;
    }
    for (const auto& row : aggregate(pooled)) {
      os << to_string(axis) << ',' << format_value(r.cells[i].value) << ',' << to_string(r.cells[i].method) << ','
         << row.metric << ',' << format_value(row.mean) << ',' << format_value(row.std) << ',' << row.n << '\n';
    }
    i = j;
  }
}

}  // namespace phm
