#include "rim/error.hpp"

namespace rim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidShape: return "invalid-shape";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Config: return "config";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

ParseError::ParseError(const std::string& what, std::size_t byte_offset)
    : Error(ErrorKind::Parse, what + " (at byte " + std::to_string(byte_offset) + ")"),
      offset_(byte_offset) {}

void throw_error(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace rim
