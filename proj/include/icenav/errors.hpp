#pragma once

#include <stdexcept>
#include <string>

namespace icenav {

struct DegenerateInput : std::runtime_error {
  explicit DegenerateInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PackingFailure : std::runtime_error {
  explicit PackingFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoPathFound : std::runtime_error {
  explicit NoPathFound(const std::string& msg) : std::runtime_error(msg) {}
};

struct InfeasibleWarmStart : std::runtime_error {
  explicit InfeasibleWarmStart(const std::string& msg) : std::runtime_error(msg) {}
};

struct PlanningFailure : std::runtime_error {
  explicit PlanningFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrialTimeout : std::runtime_error {
  explicit TrialTimeout(const std::string& msg) : std::runtime_error(msg) {}
};

struct CalibrationError : std::runtime_error {
  explicit CalibrationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace icenav
