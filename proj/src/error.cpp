#include "seqfed/error.hpp"

#include <sstream>

namespace seqfed {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kEmptyInput: return "empty_input";
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kIdxMagicMismatch: return "idx_magic_mismatch";
    case ErrorKind::kIdxTruncated: return "idx_truncated";
    case ErrorKind::kIdxCountMismatch: return "idx_count_mismatch";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void throw_dimension_mismatch(std::string_view axis, std::size_t expected, std::size_t actual) {
  std::ostringstream os;
  os << "dimension mismatch on " << axis << ": expected " << expected << ", got " << actual;
  throw Error(ErrorKind::kDimensionMismatch, os.str());
}

}  // namespace seqfed
