#include "toxseq/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "numfmt.hpp"
#include "toxseq/error.hpp"
#include "toxseq/tensor.hpp"

namespace toxseq {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct CsvRow {
  std::size_t line;
  std::vector<std::string> fields;
};

// RFC 4180 reader: comma separator, double-quote escaping, CRLF tolerated.
std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;  // UTF-8 BOM
  while (i < text.size()) {
    CsvRow row{line, {}};
    std::string field;
    bool in_quotes = false;
    bool row_done = false;
    while (i < text.size() && !row_done) {
      const char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        ++i;
        continue;
      }
      switch (c) {
        case '"': in_quotes = true; break;
        case ',': row.fields.push_back(std::move(field)); field.clear(); break;
        case '\r': break;
        case '\n': row_done = true; break;
        default: field.push_back(c);
      }
      ++i;
    }
    if (in_quotes)
      throw Error(ErrorKind::MalformedRow, "line " + std::to_string(row.line) + ": unterminated quote");
    row.fields.push_back(std::move(field));
    ++line;
    const bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::MissingColumn, "column '" + name + "' not in header");
  return static_cast<std::size_t>(it - header.begin());
}

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
  throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line) + ": " + why);
}

}  // namespace

bool DatasetRecord::operator==(const DatasetRecord& o) const {
  if (smiles != o.smiles || mask != o.mask || labels.size() != o.labels.size()) return false;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (mask[i] && labels[i] != o.labels[i]) return false;
  return true;
}

LoadedDataset read_dataset(std::istream& is, const TaskSchema& schema, const LoadOptions& options) {
  schema.validate();
  const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorKind::MissingColumn, "file has no header");

  const auto& header = rows.front().fields;
  const std::size_t smiles_col = column_index(header, schema.smiles_column);
  std::vector<std::size_t> task_cols;
  for (const auto& t : schema.tasks) task_cols.push_back(column_index(header, t.name));

  LoadedDataset out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size())
      malformed(row.line, "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(row.fields.size()));
    DatasetRecord rec;
    rec.smiles = row.fields[smiles_col];
    if (rec.smiles.empty()) malformed(row.line, "empty SMILES");
    rec.labels.assign(schema.n_tasks(), kMissing);
    rec.mask.assign(schema.n_tasks(), 0);
    for (std::size_t t = 0; t < schema.n_tasks(); ++t) {
      const std::string& cell = row.fields[task_cols[t]];
      const auto value = detail::parse_double(cell);
      if (!value || !std::isfinite(*value)) {
        if (schema.allow_missing) continue;
        malformed(row.line, "column '" + schema.tasks[t].name + "' has no valid label ('" + cell + "')");
      }
      if (schema.tasks[t].kind == TaskKind::Classification && *value != 0.0 && *value != 1.0)
        malformed(row.line, "column '" + schema.tasks[t].name + "' label '" + cell + "' is not 0 or 1");
      rec.labels[t] = *value;
      rec.mask[t] = 1;
    }
    auto report = validate_smiles(rec.smiles);
    if (!report.is_plausible) {
      if (options.strict_smiles)
        malformed(row.line, "implausible SMILES '" + rec.smiles + "' (" +
                                std::string(to_string(report.issues.front().kind)) + " at " +
                                std::to_string(report.issues.front().position) + ")");
      out.flagged.push_back({row.line, rec.smiles, std::move(report)});
    }
    if (options.deduplicate && !seen.insert(rec.smiles).second) continue;
    out.records.push_back(std::move(rec));
  }
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path, const TaskSchema& schema,
                           const LoadOptions& options) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  return read_dataset(is, schema, options);
}

void write_dataset(std::ostream& os, std::span<const DatasetRecord> records,
                   const TaskSchema& schema) {
  os << csv_field(schema.smiles_column);
  for (const auto& t : schema.tasks) os << ',' << csv_field(t.name);
  os << '\n';
  for (const auto& rec : records) {
    os << csv_field(rec.smiles);
    for (std::size_t t = 0; t < schema.n_tasks(); ++t) {
      os << ',';
      if (!rec.mask[t]) continue;
      if (schema.tasks[t].kind == TaskKind::Classification)
        os << (rec.labels[t] != 0.0 ? '1' : '0');
      else
        os << detail::format_shortest(rec.labels[t]);
    }
    os << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records,
                  const TaskSchema& schema) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_dataset(os, records, schema);
}

std::pair<std::vector<DatasetRecord>, TaskSchema> merge_synthetic(
    std::span<const DatasetRecord> a, const TaskSchema& schema_a,
    std::span<const DatasetRecord> b, const TaskSchema& schema_b) {
  for (const auto* s : {&schema_a, &schema_b})
    for (const auto& t : s->tasks)
      if (t.kind != TaskKind::Classification)
        throw Error(ErrorKind::KindMismatch, "schema '" + s->name + "' is not classification");

  TaskSchema merged{schema_a.name + "+" + schema_b.name, schema_a.smiles_column, schema_a.tasks, true};
  merged.tasks.insert(merged.tasks.end(), schema_b.tasks.begin(), schema_b.tasks.end());

  const std::size_t na = schema_a.n_tasks();
  const std::size_t nb = schema_b.n_tasks();
  std::vector<DatasetRecord> out;
  out.reserve(a.size() + b.size());
  for (const auto& r : a) {
    DatasetRecord m{r.smiles, r.labels, r.mask};
    m.labels.resize(na + nb, kMissing);
    m.mask.resize(na + nb, 0);
    out.push_back(std::move(m));
  }
  for (const auto& r : b) {
    DatasetRecord m{r.smiles, std::vector<double>(na, kMissing), std::vector<std::uint8_t>(na, 0)};
    m.labels.insert(m.labels.end(), r.labels.begin(), r.labels.end());
    m.mask.insert(m.mask.end(), r.mask.begin(), r.mask.end());
    out.push_back(std::move(m));
  }
  return {std::move(out), std::move(merged)};
}

std::vector<DatasetRecord> undersample(std::span<const DatasetRecord> records,
                                       std::size_t task_index, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (task_index >= r.mask.size())
      throw Error(ErrorKind::InvalidArgument, "task index " + std::to_string(task_index) + " out of range");
    if (!r.mask[task_index]) continue;
    (r.labels[task_index] != 0.0 ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty())
    throw Error(ErrorKind::SingleClass, "task " + std::to_string(task_index) +
                                            " has only one class among labelled records");

  Rng rng = Rng::derive(seed, 0x756e6465);  // "unde"
  auto& majority = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  shuffle(majority, rng);
  majority.resize(keep);

  std::vector<std::size_t> chosen;
  chosen.reserve(2 * keep);
  chosen.insert(chosen.end(), pos.begin(), pos.end());
  chosen.insert(chosen.end(), neg.begin(), neg.end());
  std::sort(chosen.begin(), chosen.end());
  shuffle(chosen, rng);

  std::vector<DatasetRecord> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(records[i]);
  return out;
}

std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> split(
    std::span<const DatasetRecord> records, const SplitSpec& spec) {
  const std::size_t n = records.size();
  if (n < 2) throw Error(ErrorKind::TooFewRecords, "split needs at least 2 records, got " + std::to_string(n));
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw Error(ErrorKind::InvalidArgument, "train_fraction must be in (0, 1)");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::derive(spec.seed, 0x73706c74);  // "splt"
  shuffle(order, rng);

  auto cut = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  cut = std::clamp<std::size_t>(cut, 1, n - 1);

  std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> out;
  out.first.reserve(cut);
  out.second.reserve(n - cut);
  for (std::size_t k = 0; k < n; ++k) (k < cut ? out.first : out.second).push_back(records[order[k]]);
  return out;
}

std::vector<std::string> smiles_of(std::span<const DatasetRecord> records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.smiles);
  return out;
}

TaskSchema load_schema(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  try {
    const auto j = nlohmann::json::parse(is);
    TaskSchema s;
    s.name = j.value("name", path.stem().string());
    s.smiles_column = j.value("smiles_column", "smiles");
    s.allow_missing = j.value("allow_missing", false);
    for (const auto& t : j.at("tasks"))
      s.tasks.push_back({t.at("name").get<std::string>(),
                         parse_task_kind(t.value("kind", "classification"))});
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidSchema, path.string() + ": " + e.what());
  }
}

void save_schema(const std::filesystem::path& path, const TaskSchema& schema) {
  nlohmann::ordered_json j;
  j["name"] = schema.name;
  j["smiles_column"] = schema.smiles_column;
  j["allow_missing"] = schema.allow_missing;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : schema.tasks) j["tasks"].push_back({{"name", t.name}, {"kind", to_string(t.kind)}});
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace toxseq
