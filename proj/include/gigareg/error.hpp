#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gigareg {

enum class ErrorKind {
  InsufficientMatches,
  DegenerateConfiguration,
  AdapterFailure,
  ShapeMismatch,
  UnreadableInput,
  CorruptPyramidManifest,
  OutputWriteFailure,
  MalformedCsv,
  MissingSpacing,
  LandmarkMismatch,
  EmptyInput,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// All recoverable failures raised by the library. Callers that fold failures
// into reports (candidate search, batch CLI) switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gigareg
