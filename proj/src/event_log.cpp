#include "phm/event_log.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "phm/errors.hpp"

namespace phm {

namespace {

constexpr std::array<std::string_view, 20> kKindNames = {
    "mission_generated", "mission_accepted", "mission_rejected", "mission_started",
    "mission_succeeded", "mission_failed",   "sortie_started",   "sortie_succeeded",
    "sortie_failed",     "component_failed", "fault_detected",   "maintenance_queued",
    "repair_started",    "repair_blocked",   "repair_finished",  "order_placed",
    "order_arrived",     "inventory_overflow", "holding",        "readiness",
};

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError("bad integer in event record: '" + std::string(s) + "'");
  }
  return v;
}

double parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError("bad number in event record: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(EventKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

bool operator==(const Event& a, const Event& b) {
  return a.step == b.step && a.kind == b.kind && a.aircraft == b.aircraft &&
         a.component == b.component && a.mission == b.mission && a.bay == b.bay &&
         a.cls == b.cls && a.supplier == b.supplier && a.quantity == b.quantity && a.amount == b.amount && a.value == b.value;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return std::string(buf.data(), ptr);
}

std::string format_event(const Event& e) {
  std::string out = std::to_string(e.step);
  out += ' ';
  out += to_string(e.kind);
  auto put = [&out](std::string_view key, const std::string& v) {
    out += ' ';
    out += key;
    out += '=';
    out += v;
  };
  if (e.aircraft >= 0) put("aircraft", std::to_string(e.aircraft));
  if (e.component >= 0) put("component", std::to_string(e.component));
  if (e.mission >= 0) put("mission", std::to_string(e.mission));
  if (e.bay >= 0) put("bay", std::to_string(e.bay));
  if (e.cls >= 0) put("class", std::to_string(e.cls));
  if (e.supplier >= 0) put("supplier", std::to_string(e.supplier));
  if (e.quantity >= 0) put("qty", std::to_string(e.quantity));
  if (e.amount) put("amount", format_double(*e.amount));
  if (e.value) put("value", format_double(*e.value));
  return out;
}

Event parse_event(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    if (end > pos) tokens.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  if (tokens.size() < 2) throw FormatError("event record needs step and kind: '" + std::string(line) + "'");
  Event e;
  e.step = parse_int(tokens[0]);
  auto kind = parse_event_kind(tokens[1]);
  if (!kind) throw FormatError("unknown event kind '" + std::string(tokens[1]) + "'");
  e.kind = *kind;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos) throw FormatError("bad payload token '" + std::string(tokens[i]) + "'");
    auto key = tokens[i].substr(0, eq);
    auto val = tokens[i].substr(eq + 1);
    if (key == "aircraft") e.aircraft = parse_int(val);
    else if (key == "component") e.component = parse_int(val);
    else if (key == "mission") e.mission = parse_int(val);
    else if (key == "bay") e.bay = parse_int(val);
    else if (key == "class") e.cls = parse_int(val);
    else if (key == "supplier") e.supplier = parse_int(val);
    else if (key == "qty") e.quantity = parse_int(val);
    else if (key == "amount") e.amount = parse_double(val);
    else if (key == "value") e.value = parse_double(val);
    else throw FormatError("unknown payload key '" + std::string(key) + "'");
  }
  return e;
}

void EventLog::write(std::ostream& os) const {
  for (const auto& e : events_) os << format_event(e) << '\n';
}

EventLog EventLog::read(std::istream& is) {
  EventLog log;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    log.push(parse_event(line));
  }
  return log;
}

}  // namespace phm
