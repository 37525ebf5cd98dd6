#pragma once

#include <stdexcept>
#include <string>

namespace svirgo {

enum class ErrorCode {
  InvalidConfig,
  UnknownCluster,
  UnknownScope,
  NoCandidate,
  EmptyGoalSet,
  RegionDead,
  DomainError,
  Disconnected,
  UnknownTarget,
  ScenarioInvalid,
  DecodeError,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace svirgo
