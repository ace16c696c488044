#include "roba/error.h"

namespace roba {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kInsufficientObservations:
      return "insufficient-observations";
    case ErrorKind::kAmbiguousDirection:
      return "ambiguous-direction";
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kInvalidGraph:
      return "invalid-graph";
    case ErrorKind::kDisconnectedGraph:
      return "disconnected-graph";
    case ErrorKind::kGeneration:
      return "generation";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace roba
