#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace setopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ErrorCode {
  EmptyMatrix,
  RankDeficient,
  NotInterior,
  DimensionMismatch,
  EmptyInput,
  LexError,
  ParseError,
  UnknownIdentifier,
  VariableOutOfRange,
  DomainError,
  UnknownProblem,
  IoError,
  FormatError,
  NumericalBreakdown,
  SingularSystem,
  MaxInnerIterations,
  LineSearchFailure,
  BracketFailure,
  GridTooLarge,
  InvalidConfig,
};

const char* to_string(ErrorCode code);

/// 1-based source location; line 0 means "not attached to a file".
struct SourcePos {
  int line = 0;
  int column = 0;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, SourcePos pos = {})
      : std::runtime_error(format(code, message, pos)), code_(code), pos_(pos), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  SourcePos pos() const noexcept { return pos_; }
  /// The message without the code and position prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string format(ErrorCode code, const std::string& message, SourcePos pos) {
    std::string out = to_string(code);
    if (pos.line > 0) {
      out += " at " + std::to_string(pos.line) + ":" + std::to_string(pos.column);
    }
    return out + ": " + message;
  }

  ErrorCode code_;
  SourcePos pos_;
  std::string message_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotInterior: return "NotInterior";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LexError: return "LexError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::VariableOutOfRange: return "VariableOutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::UnknownProblem: return "UnknownProblem";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::MaxInnerIterations: return "MaxInnerIterations";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace setopt
