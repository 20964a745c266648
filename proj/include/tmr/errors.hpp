#pragma once

#include <stdexcept>
#include <string>

namespace tmr {

enum class ErrorKind {
  Decode,
  UnsupportedFormat,
  InvalidParam,
  ImageTooSmall,
  InsufficientEdges,
  TooFewSamples,
  DimMismatch,
  DuplicateDoc,
  UniverseMismatch,
  GroupTooSmall,
  Format,
  Io,
};

const char* to_string(ErrorKind kind);

// Every recoverable failure in the library surfaces as this exception type;
// the kind lets callers (and the CLI exit-code mapping) branch without
// string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tmr
