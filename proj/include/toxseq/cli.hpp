#pragma once

// Command-line front end: train, evaluate, predict, gradcheck, export-metrics, vocab.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "toxseq/model.hpp"
#include "toxseq/task.hpp"

namespace toxseq::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kDiverged = 4,
  kGradcheckFailed = 5,
};

/// Everything a training run depends on. Written to <out>/config.json and
/// accepted back through --config.
struct RunConfig {
  std::string data;
  std::string preset;       // clintox | tox21 | freesolv, or empty with schema_file
  std::string schema_file;
  std::string merge_data;   // optional second dataset for the synthetic union
  std::string merge_preset;
  std::string merge_schema_file;
  Hyperparams hyper;
  double train_fraction = 0.8;  // train+valid share; the rest is the test split
  double valid_fraction = 0.1;  // share of the train+valid part held out for early stopping
  bool strict_smiles = false;
  bool undersample = false;
  std::string balance_task;  // empty: preset default
  std::string out = "run";
  std::string kernels = "auto";

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);  // throws InvalidArgument
  bool operator==(const RunConfig&) const = default;
};

// Runs one invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toxseq::cli
