// phm: train, evaluate, sweep and export for the fleet PHM decision lab.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "phm/config.hpp"
#include "phm/errors.hpp"
#include "phm/experiments.hpp"
#include "phm/trainer.hpp"

#ifndef PHM_BUILD_TAG
#define PHM_BUILD_TAG "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Written before work starts, rewritten on every artifact and on exit.
class Manifest {
 public:
  Manifest(std::string command, fs::path dir) : dir_(std::move(dir)) {
    j_["command"] = std::move(command);
    j_["build"] = PHM_BUILD_TAG;
    j_["output_dir"] = dir_.string();
    j_["started"] = now_iso();
    j_["finished"] = nullptr;
    j_["exit_status"] = nullptr;
    j_["artifacts"] = json::array();
    j_["seeds"] = json::array();
  }

  json& operator[](const char* key) { return j_[key]; }

  void artifact(const fs::path& p) {
    j_["artifacts"].push_back(p.string());
    flush();
  }

  void flush() const {
    fs::create_directories(dir_);
    const auto tmp = dir_ / "manifest.json.tmp";
    {
      std::ofstream os(tmp, std::ios::trunc);
      os << j_.dump(2) << '\n';
    }
    fs::rename(tmp, dir_ / "manifest.json");
  }

  int finish(int status, const std::string& error = {}) {
    j_["finished"] = now_iso();
    j_["exit_status"] = status;
    if (!error.empty()) j_["error"] = error;
    try {
      flush();
    } catch (const std::exception& e) {
      std::cerr << "phm: cannot write manifest: " << e.what() << '\n';
      return status == kOk ? kRuntime : status;
    }
    return status;
  }

 private:
  fs::path dir_;
  json j_;
};

struct Common {
  std::string config = "nominal";
  std::vector<std::string> overrides;
  std::string output;
  std::string method = "hrl";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int epochs = -1;
};

fs::path output_dir(const Common& c, const std::string& command, const std::string& tag) {
  if (!c.output.empty()) return c.output;
  fs::path root = "runs";
  if (const char* env = std::getenv("PHM_OUTPUT_ROOT"); env && *env) root = env;
  const std::string cfg = fs::path(c.config).stem().string();
  return root / (command + "-" + cfg + "-" + tag);
}

phm::RunConfig resolve(const Common& c) {
  auto cfg = phm::load_config(c.config, c.overrides);
  if (c.seed_given) cfg.train.seed = c.seed;
  if (c.epochs >= 0) cfg.train.epochs = c.epochs;
  cfg.validate();
  return cfg;
}

phm::Method method_of(const std::string& name) {
  auto m = phm::parse_method(name);
  if (!m) throw phm::ConfigError("unknown method '" + name + "' (hrl, drl, rule, random)");
  return *m;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

void print_summary(const std::vector<phm::KpiRecord>& records) {
  std::cout << std::left << std::setw(10) << "metric" << std::right << std::setw(14) << "mean" << std::setw(14)
            << "std" << std::setw(6) << "n" << '\n';
  for (const auto& row : phm::aggregate(records)) {
    std::cout << std::left << std::setw(10) << row.metric << std::right << std::setw(14) << std::fixed
              << std::setprecision(4) << row.mean << std::setw(14) << row.std << std::setw(6) << row.n << '\n';
  }
  std::cout.unsetf(std::ios::floatfield);
}

void write_summary(const fs::path& p, const std::vector<phm::KpiRecord>& records, const std::string& method) {
  std::ostringstream os;
  os << "method,metric,mean,std,n\n";
  for (const auto& row : phm::aggregate(records)) {
    os << method << ',' << row.metric << ',' << phm::format_value(row.mean) << ',' << phm::format_value(row.std)
       << ',' << row.n << '\n';
  }
  write_text(p, os.str());
}

// Runs `body`, mapping exceptions onto exit codes and finalizing the manifest.
template <typename F>
int guarded(Manifest* manifest, F&& body) {
  try {
    const int rc = body();
    return manifest ? manifest->finish(rc) : rc;
  } catch (const phm::ConfigError& e) {
    std::cerr << "phm: configuration error: " << e.what() << '\n';
    return manifest ? manifest->finish(kUsage, e.what()) : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "phm: error: " << e.what() << '\n';
    return manifest ? manifest->finish(kRuntime, e.what()) : kRuntime;
  }
}

int cmd_train(const Common& c) {
  phm::RunConfig cfg;
  phm::Method method{};
  try {
    cfg = resolve(c);
    method = method_of(c.method);
  } catch (const phm::ConfigError& e) {
    std::cerr << "phm: configuration error: " << e.what() << '\n';
    return kUsage;
  }
  if (method == phm::Method::Rule || method == phm::Method::Random) {
    std::cerr << "phm: method '" << c.method << "' has nothing to train; use eval\n";
    return kUsage;
  }
  const fs::path dir = output_dir(c, "train", std::string(phm::to_string(method)) + "-s" + std::to_string(cfg.train.seed));
  Manifest manifest("train", dir);
  return guarded(&manifest, [&] {
    manifest["method"] = std::string(phm::to_string(method));
    manifest["seeds"].push_back(cfg.train.seed);
    manifest["config"] = phm::to_yaml(cfg);
    manifest.flush();
    write_text(dir / "config.yaml", phm::to_yaml(cfg));
    manifest.artifact(dir / "config.yaml");

    phm::AgentSet agents(method, cfg.scenario, cfg.train.seed, cfg.general, cfg.tactical);
    agents.rule() = cfg.rule;

    std::ofstream kpis(dir / "kpis.jsonl", std::ios::trunc);
    std::ofstream curves(dir / "curves.csv", std::ios::trunc);
    if (!kpis || !curves) throw std::runtime_error("cannot open output files in " + dir.string());
    curves << "epoch,stage,r_general,r_flight,r_maintenance,r_resource,eps_general,eps_tactical\n";
    const int every = cfg.train.checkpoint_every;
    auto on_epoch = [&](int epoch, const phm::KpiRecord& k, const phm::CurveRow& row) {
      kpis << phm::to_json_line(k) << '\n';
      curves << row.epoch << ',' << row.stage << ',' << phm::format_value(row.rewards.general) << ','
             << phm::format_value(row.rewards.flight) << ',' << phm::format_value(row.rewards.maintenance) << ','
             << phm::format_value(row.rewards.resource) << ',' << phm::format_value(row.general_epsilon) << ','
             << phm::format_value(row.tactical_epsilon) << '\n';
      if (every > 0 && (epoch + 1) % every == 0 && epoch + 1 < cfg.train.epochs) {
        const auto p = dir / ("checkpoint-" + std::to_string(epoch + 1) + ".ckpt");
        phm::save_checkpoint(p.string(), agents, epoch + 1);
        manifest.artifact(p);
      }
      std::cerr << "epoch " << epoch + 1 << "/" << cfg.train.epochs << " stage " << row.stage
                << " R^G " << phm::format_value(row.rewards.general) << " r_ms " << phm::format_value(k.r_ms) << '\n';
    };
    const auto art = phm::train(cfg.train, cfg.scenario, agents, on_epoch);
    kpis.close();
    curves.close();
    if (!kpis || !curves) throw std::runtime_error("write failed in " + dir.string());
    manifest.artifact(dir / "kpis.jsonl");
    manifest.artifact(dir / "curves.csv");
    const auto ckpt = dir / "final.ckpt";
    phm::save_checkpoint(ckpt.string(), agents, cfg.train.epochs);
    manifest.artifact(ckpt);
    manifest["wall_seconds"] = art.wall_seconds;
    std::cout << "trained " << phm::to_string(method) << " for " << cfg.train.epochs << " epochs in "
              << std::fixed << std::setprecision(1) << art.wall_seconds << " s; artifacts in " << dir.string()
              << '\n';
    return kOk;
  });
}

int cmd_eval(const Common& c, const std::string& checkpoint, int episodes) {
  phm::RunConfig cfg;
  phm::Method method{};
  try {
    cfg = resolve(c);
    if (episodes > 0) cfg.eval_episodes = episodes;
    cfg.validate();
    method = checkpoint.empty() ? method_of(c.method) : phm::read_checkpoint_info(checkpoint).method;
  } catch (const phm::ConfigError& e) {
    std::cerr << "phm: configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "phm: error: " << e.what() << '\n';
    return kRuntime;
  }
  const fs::path dir = output_dir(c, "eval", std::string(phm::to_string(method)) + "-s" + std::to_string(cfg.train.seed));
  Manifest manifest("eval", dir);
  return guarded(&manifest, [&] {
    manifest["method"] = std::string(phm::to_string(method));
    manifest["seeds"].push_back(cfg.train.seed);
    manifest["episodes"] = cfg.eval_episodes;
    manifest["checkpoint"] = checkpoint;
    manifest["config"] = phm::to_yaml(cfg);
    manifest.flush();

    phm::AgentSet agents(method, cfg.scenario, cfg.train.seed, cfg.general, cfg.tactical);
    agents.rule() = cfg.rule;
    if (agents.learns()) {
      if (checkpoint.empty()) throw phm::ConfigError("method '" + c.method + "' needs --checkpoint");
      const auto info = phm::load_checkpoint(checkpoint, agents);
      manifest["checkpoint_epoch"] = info.epoch;
    }
    auto records = phm::evaluate(cfg.scenario, agents, cfg.eval_episodes, cfg.train.seed, cfg.train.rewards);
    std::ostringstream os;
    for (auto& k : records) {
      k.scenario = cfg.name;
      os << phm::to_json_line(k) << '\n';
    }
    write_text(dir / "kpis.jsonl", os.str());
    manifest.artifact(dir / "kpis.jsonl");
    write_summary(dir / "summary.csv", records, std::string(phm::to_string(method)));
    manifest.artifact(dir / "summary.csv");
    print_summary(records);
    return kOk;
  });
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw phm::ConfigError(std::string(what) + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  return out;
}

struct SweepArgs {
  std::string axis = "failure";
  std::string grid;
  bool grid_given = false;
  std::string methods = "hrl,drl,rule";
  std::string seeds = "0";
  int workers = 1;
  int episodes = 0;
  bool checkpoints = false;
};

int cmd_sweep(const Common& c, const SweepArgs& a) {
  phm::RunConfig cfg;
  phm::SweepConfig sc;
  try {
    cfg = resolve(c);
    auto axis = phm::parse_axis(a.axis);
    if (!axis) throw phm::ConfigError("--axis must be complexity or failure, got '" + a.axis + "'");
    sc.axis = *axis;
    sc.values = a.grid_given ? parse_list<double>(a.grid, "--grid") : phm::default_grid(sc.axis);
    if (sc.values.empty()) throw phm::ConfigError("--grid is empty");
    for (double v : sc.values) phm::apply_axis(cfg.scenario, sc.axis, v);
    sc.methods.clear();
    std::stringstream ms(a.methods);
    for (std::string m; std::getline(ms, m, ',');) {
      if (!m.empty()) sc.methods.push_back(method_of(m));
    }
    if (sc.methods.empty()) throw phm::ConfigError("--methods is empty");
    sc.seeds = parse_list<std::uint64_t>(a.seeds, "--seeds");
    if (sc.seeds.empty()) throw phm::ConfigError("--seeds is empty");
    if (a.workers < 1) throw phm::ConfigError("--workers must be >= 1");
    sc.workers = a.workers;
    sc.train = cfg.train;
    sc.general = cfg.general;
    sc.tactical = cfg.tactical;
    sc.rule = cfg.rule;
    sc.eval_episodes = a.episodes > 0 ? a.episodes : cfg.eval_episodes;
  } catch (const phm::ConfigError& e) {
    std::cerr << "phm: configuration error: " << e.what() << '\n';
    return kUsage;
  }
  const fs::path dir = output_dir(c, "sweep", std::string(phm::to_string(sc.axis)));
  Manifest manifest("sweep", dir);
  return guarded(&manifest, [&] {
    manifest["axis"] = std::string(phm::to_string(sc.axis));
    manifest["grid"] = sc.values;
    for (auto s : sc.seeds) manifest["seeds"].push_back(s);
    json methods = json::array();
    for (auto m : sc.methods) methods.push_back(std::string(phm::to_string(m)));
    manifest["methods"] = methods;
    manifest["workers"] = sc.workers;
    manifest["eval_episodes"] = sc.eval_episodes;
    manifest["config"] = phm::to_yaml(cfg);
    manifest["cells"] = json::array();
    manifest.flush();
    if (a.checkpoints) {
      sc.checkpoint_dir = (dir / "checkpoints").string();
      fs::create_directories(sc.checkpoint_dir);
    }
    const auto result = phm::sweep(sc, cfg.scenario, [](const phm::SweepCell& cell) {
      std::cerr << phm::format_value(cell.value) << ' ' << phm::to_string(cell.method) << " seed " << cell.seed
                << (cell.ok ? " ok" : " FAILED: " + cell.error) << '\n';
    });
    for (const auto& cell : result.cells) {
      json jc{{"value", cell.value},
              {"method", std::string(phm::to_string(cell.method))},
              {"seed", cell.seed},
              {"ok", cell.ok},
              {"train_seconds", cell.train_seconds}};
      if (!cell.checkpoint.empty()) jc["checkpoint"] = cell.checkpoint;
      if (!cell.ok) jc["error"] = cell.error;
      manifest["cells"].push_back(jc);
    }
    phm::write_raw((dir / "raw.jsonl").string(), result, sc.axis);
    manifest.artifact(dir / "raw.jsonl");
    phm::write_aggregate((dir / "summary.csv").string(), result, sc.axis);
    manifest.artifact(dir / "summary.csv");
    if (!result.all_ok()) {
      std::cerr << "phm: some sweep cells failed; see manifest.json\n";
      return kRuntime;
    }
    std::cout << "sweep finished: " << result.cells.size() << " cells; results in " << dir.string() << '\n';
    return kOk;
  });
}

// Re-aggregates KPI record files into one CSV grouped by method and scenario.
int cmd_export(const std::vector<std::string>& inputs, const std::string& out) {
  return guarded(nullptr, [&] {
    std::map<std::pair<std::string, std::string>, std::vector<phm::KpiRecord>> groups;
    for (const auto& in : inputs) {
      std::ifstream is(in);
      if (!is) throw phm::ConfigError("cannot read " + in);
      std::string line;
      int n = 0;
      while (std::getline(is, line)) {
        ++n;
        if (line.empty()) continue;
        try {
          auto k = phm::kpi_from_json_line(line);
          groups[{k.method, k.scenario}].push_back(std::move(k));
        } catch (const std::exception& e) {
          throw phm::FormatError(in + ":" + std::to_string(n) + ": " + e.what());
        }
      }
    }
    std::ostringstream os;
    os << "method,scenario,metric,mean,std,n\n";
    for (const auto& [key, records] : groups) {
      for (const auto& row : phm::aggregate(records)) {
        os << key.first << ',' << key.second << ',' << row.metric << ',' << phm::format_value(row.mean) << ','
           << phm::format_value(row.std) << ',' << row.n << '\n';
      }
    }
    if (out.empty() || out == "-") {
      std::cout << os.str();
    } else {
      write_text(out, os.str());
    }
    return kOk;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fleet PHM decision lab: hierarchical DQN commander, baselines and sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PHM_BUILD_TAG);

  Common common;
  auto add_common = [&common](CLI::App* sub, bool with_method) {
    sub->add_option("-c,--config", common.config, "built-in name (nominal, mini) or YAML path")
        ->capture_default_str();
    sub->add_option("--set", common.overrides, "override a config key, e.g. --set train.epochs=20");
    sub->add_option("-o,--output", common.output, "output directory (default $PHM_OUTPUT_ROOT/<command>-...)");
    auto* seed = sub->add_option("-s,--seed", common.seed, "run seed (overrides train.seed)");
    seed->each([&common](const std::string&) { common.seed_given = true; });
    if (with_method) {
      sub->add_option("-m,--method", common.method, "hrl, drl, rule or random")->capture_default_str();
    }
  };

  auto* train = app.add_subcommand("train", "train HRL or flat DRL agents");
  add_common(train, true);
  train->add_option("--epochs", common.epochs, "override train.epochs");

  std::string checkpoint;
  int episodes = 0;
  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint or a scripted policy");
  add_common(eval, true);
  eval->add_option("--checkpoint", checkpoint, "checkpoint from train (required for hrl/drl)");
  eval->add_option("--episodes", episodes, "evaluation episodes (default eval.episodes = 10)");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "train and evaluate methods across a scenario grid");
  add_common(sweep, false);
  sweep->add_option("--axis", sweep_args.axis, "complexity or failure")->capture_default_str();
  sweep->add_option("--grid", sweep_args.grid, "comma-separated values (default 1,2,5,10 or 0.5,0.8,1,2)")
      ->each([&sweep_args](const std::string&) { sweep_args.grid_given = true; });
  sweep->add_option("--methods", sweep_args.methods, "comma-separated methods")->capture_default_str();
  sweep->add_option("--seeds", sweep_args.seeds, "comma-separated seeds")->capture_default_str();
  sweep->add_option("--workers", sweep_args.workers, "parallel cells")->capture_default_str();
  sweep->add_option("--episodes", sweep_args.episodes, "evaluation episodes per cell (default eval.episodes)");
  sweep->add_option("--epochs", common.epochs, "override train.epochs");
  sweep->add_flag("--checkpoints", sweep_args.checkpoints, "keep a checkpoint per learning cell");

  std::vector<std::string> inputs;
  std::string export_out;
  auto* exp = app.add_subcommand("export", "aggregate KPI record files into a CSV table");
  exp->add_option("inputs", inputs, "kpis.jsonl / raw.jsonl files")->required();
  exp->add_option("-o,--output", export_out, "CSV path, '-' for stdout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (*train) return cmd_train(common);
  if (*eval) return cmd_eval(common, checkpoint, episodes);
  if (*sweep) return cmd_sweep(common, sweep_args);
  if (*exp) return cmd_export(inputs, export_out);
  return kUsage;
}
