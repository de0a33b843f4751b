#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phm {

enum class EventKind : std::uint8_t {
  MissionGenerated,
  MissionAccepted,
  MissionRejected,
  MissionStarted,
  MissionSucceeded,
  MissionFailed,
  SortieStarted,
  SortieSucceeded,
  SortieFailed,
  ComponentFailed,
  FaultDetected,
  MaintenanceQueued,
  RepairStarted,
  RepairBlocked,
  RepairFinished,
  OrderPlaced,
  OrderArrived,
  InventoryOverflow,
  Holding,
  Readiness,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view name);

// One simulator event. Unused payload fields keep their sentinel values and
// are omitted from the text form.
struct Event {
  int step = 0;
  EventKind kind = EventKind::Readiness;
  int aircraft = -1;
  int component = -1;
  int mission = -1;
  int bay = -1;
  int cls = -1;
  int supplier = -1;
  int quantity = -1;
  std::optional<double> amount;  // money, k$
  std::optional<double> value;   // kind-specific scalar (hours, counts)
};

bool operator==(const Event& a, const Event& b);

// Text form: "<step> <kind> key=value ...", doubles in shortest round-trip form.
std::string format_event(const Event& e);
Event parse_event(std::string_view line);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

class EventLog {
 public:
  void push(const Event& e) { events_.push_back(e); }
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  void clear() { events_.clear(); }

  void write(std::ostream& os) const;
  static EventLog read(std::istream& is);

 private:
  std::vector<Event> events_;
};

}  // namespace phm
