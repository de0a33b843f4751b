#pragma once

#include <stdexcept>
#include <string>

namespace phm {

// Misconfigured scenario, agent/layout mismatch, bad config file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation invoked on an object in the wrong state (stale cache, finished episode).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class EpisodeFinished : public StateError {
 public:
  explicit EpisodeFinished(const std::string& what) : StateError(what) {}
};

// Malformed or incompatible persisted data (checkpoints, record files).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Event log missing records or internally inconsistent.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phm
