#pragma once

#include <stdexcept>
#include <string>

namespace sinkasym {

enum class ErrorKind {
  input,
  dimension,
  divergent,
  unsupported_spectrum,
  unsupported_shape,
  non_diagonalizable,
  not_a_sink,
  regime,
  no_resonance,
  normalization,
  consistency,
  overflow,
  escape,
  stiffness,
  domain,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::input: return "input";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::divergent: return "divergent-integral";
    case ErrorKind::unsupported_spectrum: return "unsupported-spectrum";
    case ErrorKind::unsupported_shape: return "unsupported-shape";
    case ErrorKind::non_diagonalizable: return "non-diagonalizable";
    case ErrorKind::not_a_sink: return "not-a-sink";
    case ErrorKind::regime: return "regime";
    case ErrorKind::no_resonance: return "no-resonance";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::consistency: return "internal-consistency";
    case ErrorKind::overflow: return "term-overflow";
    case ErrorKind::escape: return "escape";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::domain: return "domain";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Escape from the validity ball carries the exit time.
class EscapeError : public Error {
 public:
  EscapeError(double t, const std::string& what)
      : Error(ErrorKind::escape, what), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace sinkasym
