#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace toxseq {

enum class TaskKind { Classification, Regression };

std::string_view to_string(TaskKind kind) noexcept;
// Throws InvalidArgument for anything but "classification" / "regression".
TaskKind parse_task_kind(std::string_view s);

struct TaskColumn {
  std::string name;
  TaskKind kind = TaskKind::Classification;
  bool operator==(const TaskColumn&) const = default;
};

/// Column layout of a dataset. Either every task is a classification task or
/// there is exactly one regression task.
struct TaskSchema {
  std::string name;
  std::string smiles_column = "smiles";
  std::vector<TaskColumn> tasks;
  bool allow_missing = false;

  std::size_t n_tasks() const noexcept { return tasks.size(); }
  TaskKind kind() const;  // throws InvalidSchema when empty
  std::vector<std::string> task_names() const;
  // Throws InvalidSchema when the invariants above do not hold.
  void validate() const;

  bool operator==(const TaskSchema&) const = default;
};

namespace presets {
TaskSchema clintox();   // smiles, FDA_APPROVED, CT_TOX
TaskSchema tox21();     // smiles + 12 assay columns, missing labels allowed
TaskSchema freesolv();  // smiles, expt (kcal/mol)
// "clintox" | "tox21" | "freesolv"; throws InvalidArgument otherwise.
TaskSchema by_name(std::string_view name);
// Task used for undersampling by default (CT_TOX for ClinTox, the first task otherwise).
std::size_t default_balance_task(const TaskSchema& schema);
}  // namespace presets

}  // namespace toxseq
