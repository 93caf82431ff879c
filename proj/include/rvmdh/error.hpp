#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rvmdh {

enum class ErrorKind {
  Parse,             // malformed input text
  Validation,        // well-formed but violates a domain invariant
  EmptyInput,        // nothing usable left after ingestion/filtering
  Config,            // bad configuration or usage
  MissingDay,        // a day lacks the data needed for the requested quantity
  EmptySeries,       // no usable days for a series
  Degenerate,        // statistic undefined on this data (zero variance etc.)
  Alignment,         // inputs cover different day sets
  Domain,            // argument outside the mathematical domain
  Rank,              // singular linear system
  InsufficientData,  // too few observations
  Lookup,            // unknown day / label
  Diverged,          // simulation left the representable range
  Io,                // file system failure
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::MissingDay: return "missing day";
    case ErrorKind::EmptySeries: return "empty series";
    case ErrorKind::Degenerate: return "degenerate input";
    case ErrorKind::Alignment: return "alignment error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Rank: return "rank error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Diverged: return "simulation diverged";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  // what() without the kind prefix
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace rvmdh
