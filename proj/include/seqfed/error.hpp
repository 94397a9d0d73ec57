#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqfed {

enum class ErrorKind {
  kDimensionMismatch,
  kEmptyInput,
  kInvalidArgument,
  kIdxMagicMismatch,
  kIdxTruncated,
  kIdxCountMismatch,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the CLI's
// machine-readable error line) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_dimension_mismatch(std::string_view axis, std::size_t expected,
                                           std::size_t actual);

}  // namespace seqfed
