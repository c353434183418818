#pragma once

#include <stdexcept>
#include <string>

namespace posevit {

// Violated precondition or invariant on an in-process call.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed external input: PPM bytes, JSON documents, manifests.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inconsistent model or geometry configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class CheckpointFault {
  BadMagic,
  BadVersion,
  BadCrc,
  BadShape,
  Truncated,
};

struct CheckpointError : std::runtime_error {
  CheckpointError(CheckpointFault fault, const std::string& message)
      : std::runtime_error(message), fault(fault) {}
  CheckpointFault fault;
};

}  // namespace posevit
