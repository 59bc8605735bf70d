#include "toxseq/task.hpp"

#include "toxseq/error.hpp"

namespace toxseq {

std::string_view to_string(TaskKind kind) noexcept {
  return kind == TaskKind::Classification ? "classification" : "regression";
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "classification") return TaskKind::Classification;
  if (s == "regression") return TaskKind::Regression;
  throw Error(ErrorKind::InvalidArgument, "unknown task kind '" + std::string(s) + "'");
}

TaskKind TaskSchema::kind() const {
  if (tasks.empty()) throw Error(ErrorKind::InvalidSchema, "schema has no tasks");
  return tasks.front().kind;
}

std::vector<std::string> TaskSchema::task_names() const {
  std::vector<std::string> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back(t.name);
  return out;
}

void TaskSchema::validate() const {
  if (tasks.empty()) throw Error(ErrorKind::InvalidSchema, "schema '" + name + "' has no tasks");
  if (smiles_column.empty()) throw Error(ErrorKind::InvalidSchema, "empty SMILES column name");
  bool any_regression = false;
  for (const auto& t : tasks) {
    if (t.name.empty()) throw Error(ErrorKind::InvalidSchema, "empty task column name");
    any_regression |= t.kind == TaskKind::Regression;
  }
  if (any_regression) {
    if (tasks.size() != 1)
      throw Error(ErrorKind::InvalidSchema, "regression schemas must have exactly one task");
    if (allow_missing)
      throw Error(ErrorKind::InvalidSchema, "regression schemas cannot allow missing labels");
  }
}

namespace presets {

TaskSchema clintox() {
  return {"clintox", "smiles",
          {{"FDA_APPROVED", TaskKind::Classification}, {"CT_TOX", TaskKind::Classification}},
          false};
}

TaskSchema tox21() {
  TaskSchema s{"tox21", "smiles", {}, true};
  for (const char* name : {"NR-AR", "NR-AR-LBD", "NR-AhR", "NR-Aromatase", "NR-ER", "NR-ER-LBD",
                           "NR-PPAR-gamma", "SR-ARE", "SR-ATAD5", "SR-HSE", "SR-MMP", "SR-p53"})
    s.tasks.push_back({name, TaskKind::Classification});
  return s;
}

TaskSchema freesolv() { return {"freesolv", "smiles", {{"expt", TaskKind::Regression}}, false}; }

TaskSchema by_name(std::string_view name) {
  if (name == "clintox") return clintox();
  if (name == "tox21") return tox21();
  if (name == "freesolv") return freesolv();
  throw Error(ErrorKind::InvalidArgument, "unknown preset '" + std::string(name) + "'");
}

std::size_t default_balance_task(const TaskSchema& schema) {
  for (std::size_t i = 0; i < schema.tasks.size(); ++i)
    if (schema.name == "clintox" && schema.tasks[i].name == "CT_TOX") return i;
  return 0;
}

}  // namespace presets

}  // namespace toxseq
