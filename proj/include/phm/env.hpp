#pragma once

// Observation encoding, action decoding and reward signals for the four
// commanders and the flat joint baseline.

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phm/sim.hpp"

namespace phm {

enum class Role : std::uint8_t { General, Flight, Maintenance, Resource, FlatJoint };

std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view name);

// Sizes that fix observation and action shapes. Built from the target
// scenario; smaller curriculum worlds are zero-padded up to these.
struct LayoutDims {
  int slots = 6;
  int aircraft = 12;
  int components = 5;  // per aircraft
  int bays = 6;
  int classes = 5;
  int suppliers = 3;
  int max_order = 10;
  double horizon = 720.0;
  double window = 24.0;

  static LayoutDims from(const ScenarioConfig& cfg);
  // Throws ConfigError when the world exceeds these dimensions.
  void check_fits(const WorldState& world) const;
  int resource_width() const { return 1 + suppliers * (max_order + 1); }

  friend bool operator==(const LayoutDims&, const LayoutDims&) = default;
};

struct FeatureBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

class ObservationLayout {
 public:
  static ObservationLayout make(Role role, const LayoutDims& dims);

  Role role() const { return role_; }
  const LayoutDims& dims() const { return dims_; }
  const std::vector<FeatureBlock>& blocks() const { return blocks_; }
  std::size_t dim() const { return dim_; }
  bool has(std::string_view name) const;
  const FeatureBlock& block(std::string_view name) const;

 private:
  void add(std::string name, std::size_t length);

  Role role_ = Role::General;
  LayoutDims dims_;
  std::vector<FeatureBlock> blocks_;
  std::size_t dim_ = 0;
};

// Upstream decisions visible to tactical commanders.
struct Upstream {
  std::span<const int> directive;    // General's accept bits for the current board
  std::span<const int> flight;       // this step's flight actions
  std::span<const int> maintenance;  // this step's bay activations
};

Eigen::VectorXd encode_observation(const ObservationLayout& layout, const WorldState& world,
                                   const Upstream& upstream = {});

// Mission status code in the slot block; 0 marks an empty slot.
double mission_status_code(MissionStatus s);

class SegmentLayout {
 public:
  SegmentLayout() = default;
  explicit SegmentLayout(std::vector<int> widths);
  static SegmentLayout make(Role role, const LayoutDims& dims);

  std::size_t count() const { return widths_.size(); }
  int width(std::size_t k) const { return widths_[k]; }
  int offset(std::size_t k) const { return offsets_[k]; }
  int total() const { return total_; }
  const std::vector<int>& widths() const { return widths_; }

  friend bool operator==(const SegmentLayout& a, const SegmentLayout& b) { return a.widths_ == b.widths_; }

 private:
  std::vector<int> widths_;
  std::vector<int> offsets_;
  int total_ = 0;
};

// Resource head index <-> order. Index 0 is "no order".
ResourceOrder decode_resource_index(int index, int suppliers, int max_order);
int encode_resource_order(const ResourceOrder& order, int suppliers, int max_order);

// Maps one index per segment to the role's slice of JointActions; fields of
// other roles are left empty. Throws std::invalid_argument on bad indices.
JointActions decode_action(Role role, std::span<const int> indices, const SegmentLayout& layout,
                           const LayoutDims& dims);

// Inverse of decode_action for the role's own fields (used to store expert or
// externally chosen actions as head indices).
std::vector<int> encode_action(Role role, const JointActions& actions, const LayoutDims& dims);

// Trims padded action vectors to the world's actual sizes and fills any
// missing role with its neutral action.
JointActions fit_actions(JointActions actions, const WorldState& world);

struct RewardConfig {
  double alpha = 2.0;  // availability weight
  double beta = 0.2;   // repair-time weight
  double gamma = 0.5;  // lead-time weight
  double eta = 1.0;    // holding weight
  double tau_f = 1.0;
  double tau_m = 0.7;
  double tau_r = 0.2;
  double failure_multiplier = 2.0;

  void validate() const;
};

double reward_flight(std::span<const StepEvents> events, const RewardConfig& cfg);
double reward_maintenance(std::span<const StepEvents> events, const RewardConfig& cfg);
double reward_resource(std::span<const StepEvents> events, const RewardConfig& cfg);
double reward_general(double rf, double rm, double rr, const RewardConfig& cfg);

struct StepRewards {
  double flight = 0.0;
  double maintenance = 0.0;
  double resource = 0.0;
  double general = 0.0;
};

StepRewards step_rewards(const StepEvents& ev, const RewardConfig& cfg);

}  // namespace phm
