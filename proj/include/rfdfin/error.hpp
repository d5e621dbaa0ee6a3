#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rfdfin {

enum class ErrorCode {
  InvalidArgument,
  EmptySignal,
  NotBinary,
  BranchPoint,
  OutOfBounds,
  NoRidges,
  DimMismatch,
  EmptyCorpus,
  EmptyBatch,
  EmptyDictionary,
  TooSmall,
  NoTape,
  Divergence,
  Io,
  Corrupt,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::BranchPoint: return "BranchPoint";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NoRidges: return "NoRidges";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyDictionary: return "EmptyDictionary";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::NoTape: return "NoTape";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Corrupt: return "Corrupt";
  }
  return "Unknown";
}

}  // namespace rfdfin
