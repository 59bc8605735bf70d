#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toxseq {

enum class ErrorKind {
  // codec
  EmptyCorpus,
  EmptyString,
  IndexOutOfVocabulary,
  // tensor / model
  DimensionMismatch,
  NonPositiveScale,
  TokenOutOfRange,
  EmptyInput,
  // model file
  IoError,
  FormatVersionMismatch,
  ChecksumMismatch,
  MalformedModel,
  // training
  EmptyBatch,
  NonFiniteLoss,
  ShapeMismatch,
  RateOutOfRange,
  InvalidArgument,
  EmptyDataset,
  // data
  MissingColumn,
  MalformedRow,
  KindMismatch,
  SingleClass,
  TooFewRecords,
  InvalidSchema,
  // metrics
  LengthMismatch,
  Empty,
  NothingEvaluable,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace toxseq
