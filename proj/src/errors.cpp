#include "tmr/errors.hpp"

namespace tmr {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Decode: return "DecodeError";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::ImageTooSmall: return "ImageTooSmall";
    case ErrorKind::InsufficientEdges: return "InsufficientEdges";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::DuplicateDoc: return "DuplicateDoc";
    case ErrorKind::UniverseMismatch: return "UniverseMismatch";
    case ErrorKind::GroupTooSmall: return "GroupTooSmall";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

}  // namespace tmr
