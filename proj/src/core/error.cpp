#include "gigareg/error.hpp"

namespace gigareg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InsufficientMatches: return "InsufficientMatches";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::AdapterFailure: return "AdapterFailure";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UnreadableInput: return "UnreadableInput";
    case ErrorKind::CorruptPyramidManifest: return "CorruptPyramidManifest";
    case ErrorKind::OutputWriteFailure: return "OutputWriteFailure";
    case ErrorKind::MalformedCsv: return "MalformedCsv";
    case ErrorKind::MissingSpacing: return "MissingSpacing";
    case ErrorKind::LandmarkMismatch: return "LandmarkMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace gigareg
