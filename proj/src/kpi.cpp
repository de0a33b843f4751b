#include "phm/kpi.hpp"

#include <json.hpp>
#include <limits>

#include "phm/errors.hpp"

namespace phm {

using nlohmann::json;

EpisodeLog episode_log(const WorldState& world, std::vector<StepEvents> steps) {
  EpisodeLog log;
  log.steps = std::move(steps);
  log.ledger = world.ledger;
  log.virtual_spend = world.inventory.virtual_spend;
  log.fleet_size = static_cast<int>(world.fleet.size());
  log.horizon_steps = world.cfg.horizon_steps();
  return log;
}

KpiRecord compute_kpis(const EpisodeLog& log) {
  if (log.fleet_size <= 0) throw IntegrityError("episode log has no fleet size");
  if (static_cast<int>(log.steps.size()) != log.horizon_steps) {
    throw IntegrityError("episode log holds " + std::to_string(log.steps.size()) + " steps, expected " +
                         std::to_string(log.horizon_steps));
  }
  KpiRecord k;
  double ready = 0.0;
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const auto& s = log.steps[i];
    if (s.step != static_cast<int>(i)) throw IntegrityError("episode log is missing step " + std::to_string(i));
    ready += static_cast<double>(s.available) / log.fleet_size;
    for (const auto& m : s.missions) {
      ++k.missions_accepted;
      if (m.success) {
        ++k.missions_succeeded;
        k.r_total += m.reward;
      }
    }
    k.sorties += s.sorties_started;
    k.sorties_succeeded += s.sorties_succeeded;
  }
  k.r_ab = ready / static_cast<double>(log.steps.size()) * 100.0;
  k.r_ms = k.missions_accepted > 0 ? 100.0 * k.missions_succeeded / k.missions_accepted : 0.0;
  k.r_ss = k.sorties > 0 ? 100.0 * k.sorties_succeeded / k.sorties : 0.0;
  k.maintenance = log.ledger.maintenance;
  k.procurement = log.ledger.procurement;
  k.inventory = log.ledger.inventory;
  k.penalty = log.ledger.penalty;
  k.virtual_cost = log.virtual_spend;
  k.ttc = log.ledger.total();
  if (k.r_total > 0) {
    k.r_cb = k.ttc / k.r_total;
    k.r_vcb = (k.ttc + k.virtual_cost) / k.r_total;
  }
  return k;
}

double ratio_or_inf(const std::optional<double>& r) { return r ? *r : std::numeric_limits<double>::infinity(); }

std::string to_json_line(const KpiRecord& k) {
  json j;
  j["method"] = k.method;
  j["scenario"] = k.scenario;
  j["seed"] = k.seed;
  j["epoch"] = k.epoch;
  j["episode"] = k.episode;
  j["r_ab"] = k.r_ab;
  j["r_ms"] = k.r_ms;
  j["r_ss"] = k.r_ss;
  j["ttc"] = k.ttc;
  j["r_cb"] = k.r_cb ? json(*k.r_cb) : json(nullptr);
  j["r_vcb"] = k.r_vcb ? json(*k.r_vcb) : json(nullptr);
  j["maintenance"] = k.maintenance;
  j["procurement"] = k.procurement;
  j["inventory"] = k.inventory;
  j["penalty"] = k.penalty;
  j["virtual"] = k.virtual_cost;
  j["r_total"] = k.r_total;
  j["missions_accepted"] = k.missions_accepted;
  j["missions_succeeded"] = k.missions_succeeded;
  j["sorties"] = k.sorties;
  j["sorties_succeeded"] = k.sorties_succeeded;
  return j.dump();
}

KpiRecord kpi_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    KpiRecord k;
    k.method = j.at("method").get<std::string>();
    k.scenario = j.at("scenario").get<std::string>();
    k.seed = j.at("seed").get<std::uint64_t>();
    k.epoch = j.at("epoch").get<int>();
    k.episode = j.at("episode").get<int>();
    k.r_ab = j.at("r_ab").get<double>();
    k.r_ms = j.at("r_ms").get<double>();
    k.r_ss = j.at("r_ss").get<double>();
    k.ttc = j.at("ttc").get<double>();
    if (!j.at("r_cb").is_null()) k.r_cb = j.at("r_cb").get<double>();
    if (!j.at("r_vcb").is_null()) k.r_vcb = j.at("r_vcb").get<double>();
    k.maintenance = j.at("maintenance").get<double>();
    k.procurement = j.at("procurement").get<double>();
    k.inventory = j.at("inventory").get<double>();
    k.penalty = j.at("penalty").get<double>();
    k.virtual_cost = j.at("virtual").get<double>();
    k.r_total = j.at("r_total").get<double>();
    k.missions_accepted = j.at("missions_accepted").get<int>();
    k.missions_succeeded = j.at("missions_succeeded").get<int>();
    k.sorties = j.at("sorties").get<int>();
    k.sorties_succeeded = j.at("sorties_succeeded").get<int>();
    return k;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad KPI record: ") + e.what());
  }
}

}  // namespace phm
