#pragma once

#include <stdexcept>
#include <string>

namespace modrl {

// Inconsistent shapes, unknown names, invalid hyperparameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke an operation's precondition at runtime (e.g. an action
// outside the action space, stepping a finished episode).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN or Inf where a finite value is required.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corrupt or truncated persisted state.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A message channel was closed while a worker was waiting on it.
class ChannelClosed : public std::runtime_error {
 public:
  ChannelClosed() : std::runtime_error("channel closed") {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace modrl
