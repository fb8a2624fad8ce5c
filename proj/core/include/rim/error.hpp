#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rim {

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
  InvalidShape,
  Contract,
  Parse,
  Config,
  Numerical,
  Infeasible,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset);
  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

[[noreturn]] void throw_error(ErrorKind kind, const std::string& what);

}  // namespace rim
