#include "toxseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "numfmt.hpp"
#include "toxseq/error.hpp"

namespace toxseq {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorKind::LengthMismatch, std::to_string(scores.size()) + " scores vs " +
                                               std::to_string(labels.size()) + " labels");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the mid-rank of each tie group is (first + last + 2) with 0-based
  // positions, an integer.
  std::uint64_t twice_rank_sum_pos = 0;
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const std::uint64_t twice_rank = i + j + 2;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] != 0) {
        twice_rank_sum_pos += twice_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::SingleClass, "roc_auc needs both classes");
  // 2U = 2 R_pos - n_pos (n_pos + 1); AUC = 2U / (2 n_pos n_neg).
  const std::uint64_t twice_u = twice_rank_sum_pos - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * n_pos * n_neg);
}

double rmse(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size())
    throw Error(ErrorKind::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                               std::to_string(targets.size()) + " targets");
  if (preds.empty()) throw Error(ErrorKind::Empty, "rmse of an empty list");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(preds.size()));
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size())
    throw Error(ErrorKind::LengthMismatch, std::to_string(scores.size()) + " scores vs " +
                                               std::to_string(labels.size()) + " labels");
  if (scores.empty()) throw Error(ErrorKind::Empty, "accuracy of an empty list");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    hits += static_cast<int>(scores[i] >= threshold) == static_cast<int>(labels[i] != 0);
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

std::vector<Vector> predict_records(const BilstmModel& model, std::span<const DatasetRecord> records) {
  std::vector<Vector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(predict(model, r.smiles));
  return out;
}

EvalReport evaluate_outputs(std::span<const Vector> outputs, std::span<const DatasetRecord> records,
                            const TaskSchema& schema) {
  if (outputs.size() != records.size())
    throw Error(ErrorKind::LengthMismatch, "outputs and records differ in length");
  EvalReport report;
  report.n_records = records.size();
  std::vector<double> values;
  for (std::size_t t = 0; t < schema.n_tasks(); ++t) {
    std::vector<double> scores, targets;
    std::vector<int> labels;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].mask.at(t)) continue;
      scores.push_back(outputs[i].at(t));
      targets.push_back(records[i].labels[t]);
      labels.push_back(records[i].labels[t] != 0.0 ? 1 : 0);
    }
    const auto& task = schema.tasks[t];
    if (task.kind == TaskKind::Regression) {
      if (scores.empty()) {
        report.skipped.push_back(task.name);
        continue;
      }
      report.per_task.push_back({task.name, "rmse", rmse(scores, targets), -1.0});
    } else {
      const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
      if (n_pos == 0 || n_pos == labels.size()) {
        report.skipped.push_back(task.name);
        continue;
      }
      report.per_task.push_back({task.name, "roc_auc", roc_auc(scores, labels), accuracy(scores, labels)});
    }
    values.push_back(report.per_task.back().value);
  }
  if (report.per_task.empty())
    throw Error(ErrorKind::NothingEvaluable, "no task has evaluable labels");
  std::tie(report.mean, report.std) = mean_std(values);
  return report;
}

EvalReport evaluate(const BilstmModel& model, std::span<const DatasetRecord> records,
                    const TaskSchema& schema) {
  if (records.empty()) throw Error(ErrorKind::NothingEvaluable, "no records to evaluate");
  if (schema.n_tasks() != model.n_tasks() || schema.kind() != model.task_kind)
    throw Error(ErrorKind::InvalidArgument,
                "model has " + std::to_string(model.n_tasks()) + " " +
                    std::string(to_string(model.task_kind)) + " tasks, dataset schema has " +
                    std::to_string(schema.n_tasks()) + " " + std::string(to_string(schema.kind())));
  const auto outputs = predict_records(model, records);
  return evaluate_outputs(outputs, records, schema);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : per_task) j["tasks"].push_back({{"name", t.name}, {"metric", t.metric}, {"value", t.value}});
  j["mean"] = mean;
  j["std"] = std;
  j["n_records"] = n_records;
  j["skipped"] = skipped;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "task,metric,value\n";
  for (const auto& t : per_task) os << t.name << ',' << t.metric << ',' << detail::format_full(t.value) << '\n';
  const std::string metric = per_task.empty() ? "" : per_task.front().metric;
  os << "__mean__," << metric << ',' << detail::format_full(mean) << '\n';
  os << "__std__," << metric << ',' << detail::format_full(std) << '\n';
  return os.str();
}

EvalReport EvalReport::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    for (const auto& t : j.at("tasks"))
      r.per_task.push_back({t.at("name").get<std::string>(), t.at("metric").get<std::string>(),
                            t.at("value").get<double>(), -1.0});
    r.mean = j.at("mean").get<double>();
    r.std = j.at("std").get<double>();
    r.n_records = j.at("n_records").get<std::size_t>();
    r.skipped = j.at("skipped").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed report: ") + e.what());
  }
}

void EvalReport::save(const std::filesystem::path& json_path, const std::filesystem::path& csv_path) const {
  for (const auto& [path, text] : {std::pair{json_path, to_json()}, std::pair{csv_path, to_csv()}}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    os << text;
  }
}

}  // namespace toxseq
