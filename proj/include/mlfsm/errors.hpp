#pragma once

#include <stdexcept>
#include <string>

namespace mlfsm {

/// Base of every error raised by the toolchain.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure (missing input, unwritable output directory).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Points at an element of a loaded JSON document.
struct SourceLocation {
  std::string file;
  std::string json_pointer;

  std::string to_string() const;
  friend bool operator==(const SourceLocation&, const SourceLocation&) = default;
};

/// Escapes one reference token for use inside a JSON pointer.
std::string escape_pointer_token(const std::string& token);

}  // namespace mlfsm
