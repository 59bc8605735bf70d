#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "toxseq/data_io.hpp"
#include "toxseq/model.hpp"

namespace toxseq {

// Probability that a random positive outranks a random negative, ties
// counted half. Computed from mid-ranks with an exact integer numerator, so
// the result equals the pairwise count bit for bit.
// Throws LengthMismatch, SingleClass.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Throws LengthMismatch, Empty.
double rmse(std::span<const double> preds, std::span<const double> targets);

// Fraction with (score >= threshold) == label. Throws LengthMismatch, Empty.
double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

struct TaskMetric {
  std::string name;
  std::string metric;  // "roc_auc" or "rmse"
  double value = 0.0;
  double accuracy = -1.0;  // classification only; not serialized into the mean
  bool operator==(const TaskMetric&) const = default;
};

struct EvalReport {
  std::vector<TaskMetric> per_task;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n_records = 0;
  std::vector<std::string> skipped;  // single-class tasks

  std::string to_json() const;
  std::string to_csv() const;
  static EvalReport from_json(std::string_view text);  // throws InvalidArgument
  void save(const std::filesystem::path& json_path, const std::filesystem::path& csv_path) const;
};

// Mean and population standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

// Model outputs for each record, in order.
std::vector<Vector> predict_records(const BilstmModel& model, std::span<const DatasetRecord> records);

// Per-task metrics computed from precomputed outputs; only unmasked labels count.
// Throws NothingEvaluable.
EvalReport evaluate_outputs(std::span<const Vector> outputs, std::span<const DatasetRecord> records,
                            const TaskSchema& schema);

// Throws NothingEvaluable, InvalidArgument when the model and schema disagree.
EvalReport evaluate(const BilstmModel& model, std::span<const DatasetRecord> records,
                    const TaskSchema& schema);

}  // namespace toxseq
