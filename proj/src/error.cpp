#include "toxseq/error.hpp"

namespace toxseq {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::EmptyString: return "EmptyString";
    case ErrorKind::IndexOutOfVocabulary: return "IndexOutOfVocabulary";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonPositiveScale: return "NonPositiveScale";
    case ErrorKind::TokenOutOfRange: return "TokenOutOfRange";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::MalformedModel: return "MalformedModel";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::RateOutOfRange: return "RateOutOfRange";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::KindMismatch: return "KindMismatch";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::TooFewRecords: return "TooFewRecords";
    case ErrorKind::InvalidSchema: return "InvalidSchema";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::NothingEvaluable: return "NothingEvaluable";
  }
  return "Unknown";
}

}  // namespace toxseq
