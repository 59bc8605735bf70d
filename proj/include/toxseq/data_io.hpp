#pragma once

// Dataset ingestion, synthetic merging, undersampling and seeded splits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toxseq/smiles_codec.hpp"
#include "toxseq/task.hpp"

namespace toxseq {

/// One molecule with one label slot per task. Masked-out slots hold NaN and
/// must never be read.
struct DatasetRecord {
  std::string smiles;
  std::vector<double> labels;
  std::vector<std::uint8_t> mask;  // 1 = label present

  bool operator==(const DatasetRecord& o) const;
};

struct FlaggedRow {
  std::size_t line;  // 1-based line in the file; the header is line 1
  std::string smiles;
  ValidationReport report;
};

struct LoadOptions {
  bool strict_smiles = false;  // reject rows that fail validate_smiles
  bool deduplicate = false;    // keep only the first row for each SMILES
};

struct LoadedDataset {
  std::vector<DatasetRecord> records;
  std::vector<FlaggedRow> flagged;  // rows kept despite validation issues
};

// Throws MissingColumn, MalformedRow (message carries the line number) or IoError.
LoadedDataset load_dataset(const std::filesystem::path& path, const TaskSchema& schema,
                           const LoadOptions& options = {});
LoadedDataset read_dataset(std::istream& is, const TaskSchema& schema,
                           const LoadOptions& options = {});

// Writes the canonical CSV form: the schema's SMILES column and task columns,
// masked labels as empty cells.
void write_dataset(std::ostream& os, std::span<const DatasetRecord> records,
                   const TaskSchema& schema);
void save_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records,
                  const TaskSchema& schema);

// Union of two classification datasets; tasks of a come first. Throws KindMismatch.
std::pair<std::vector<DatasetRecord>, TaskSchema> merge_synthetic(
    std::span<const DatasetRecord> a, const TaskSchema& schema_a,
    std::span<const DatasetRecord> b, const TaskSchema& schema_b);

// Balances the classes of one task by discarding randomly chosen majority
// records. Records whose label for that task is masked are dropped. Output is
// shuffled with the same seed. Throws SingleClass.
std::vector<DatasetRecord> undersample(std::span<const DatasetRecord> records,
                                       std::size_t task_index, std::uint64_t seed);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

// Seeded shuffle, then a prefix/suffix cut at round(train_fraction * n),
// clamped so both sides are non-empty. Throws TooFewRecords for n < 2.
std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> split(
    std::span<const DatasetRecord> records, const SplitSpec& spec);

std::vector<std::string> smiles_of(std::span<const DatasetRecord> records);

// JSON schema files: {"name", "smiles_column", "allow_missing",
// "tasks": [{"name", "kind"}]}.
TaskSchema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const TaskSchema& schema);

}  // namespace toxseq
