#include "markovpca/error.hpp"

namespace markovpca {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return "invalid argument";
    case ErrorCode::Ergodicity:
      return "chain is not ergodic";
    case ErrorCode::Reversibility:
      return "chain is not reversible";
    case ErrorCode::DegenerateGap:
      return "degenerate eigengap";
    case ErrorCode::NumericalCollapse:
      return "numerical collapse";
    case ErrorCode::EmptyTrace:
      return "empty trace";
    case ErrorCode::Config:
      return "configuration error";
    case ErrorCode::Io:
      return "I/O error";
  }
  return "unknown error";
}

}  // namespace markovpca
