#include "segphrase/error.hpp"

namespace segphrase {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kMalformedHeader: return "malformed-header";
    case ErrorKind::kTruncatedData: return "truncated-data";
    case ErrorKind::kUnsupportedMagic: return "unsupported-magic";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kSubmodularity: return "submodularity";
    case ErrorKind::kProblemTooLarge: return "problem-too-large";
    case ErrorKind::kTooFewSamples: return "too-few-samples";
    case ErrorKind::kDegenerateBox: return "degenerate-box";
    case ErrorKind::kCollapse: return "collapse";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kVersionMismatch: return "version-mismatch";
    case ErrorKind::kChecksumFailure: return "checksum-failure";
    case ErrorKind::kTruncation: return "truncation";
    case ErrorKind::kRaggedRow: return "ragged-row";
    case ErrorKind::kNonNumeric: return "non-numeric";
    case ErrorKind::kDuplicateWord: return "duplicate-word";
    case ErrorKind::kOutOfVocabulary: return "out-of-vocabulary";
    case ErrorKind::kUndefinedCosine: return "undefined-cosine";
    case ErrorKind::kUnknownPhrase: return "unknown-phrase";
    case ErrorKind::kEmptyInput: return "empty-input";
  }
  return "unknown";
}

}  // namespace segphrase
