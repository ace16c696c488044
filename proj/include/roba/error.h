#pragma once

#include <stdexcept>
#include <string>

namespace roba {

enum class ErrorKind {
  kInvalidArgument,
  kInsufficientObservations,
  kAmbiguousDirection,
  kParse,
  kInvalidGraph,
  kDisconnectedGraph,
  kGeneration,
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace roba
