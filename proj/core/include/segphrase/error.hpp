#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace segphrase {

enum class ErrorKind {
  kInvalidArgument,
  kIo,
  // image files
  kMalformedHeader,
  kTruncatedData,
  kUnsupportedMagic,
  // numeric / model
  kDimensionMismatch,
  kSubmodularity,
  kProblemTooLarge,
  kTooFewSamples,
  kDegenerateBox,
  kCollapse,
  kNumerical,
  // phrase table persistence
  kValidation,
  kVersionMismatch,
  kChecksumFailure,
  kTruncation,
  // embeddings and phrases
  kRaggedRow,
  kNonNumeric,
  kDuplicateWord,
  kOutOfVocabulary,
  kUndefinedCosine,
  kUnknownPhrase,
  kEmptyInput,
};

std::string_view to_string(ErrorKind kind);

// Library-wide exception. Every failure path throws this with a distinct
// kind so callers (and the CLI's exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace segphrase
