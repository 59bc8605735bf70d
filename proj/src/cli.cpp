#include "toxseq/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "numfmt.hpp"
#include "toxseq/data_io.hpp"
#include "toxseq/error.hpp"
#include "toxseq/kernels.hpp"
#include "toxseq/metrics.hpp"
#include "toxseq/train.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace toxseq::cli {

namespace {

struct Exit {
  int code;
  std::string message;
};

[[noreturn]] void config_error(const std::string& msg) { throw Exit{kConfigError, msg}; }
[[noreturn]] void data_error(const std::string& msg) { throw Exit{kDataError, msg}; }

int code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidSchema:
    case ErrorKind::RateOutOfRange:
    case ErrorKind::NonPositiveScale:
      return kConfigError;
    case ErrorKind::NonFiniteLoss:
      return kDiverged;
    default:
      return kDataError;
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  os << text;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void select_kernels(const std::string& name) {
  if (name == "auto") return kernels::select(kernels::best_available());
  if (name == "scalar") return kernels::select(kernels::Backend::Scalar);
  if (name == "avx2") return kernels::select(kernels::Backend::Avx2);
  if (name == "neon") return kernels::select(kernels::Backend::Neon);
  config_error("unknown kernel backend '" + name + "' (auto, scalar, avx2, neon)");
}

TaskSchema resolve_schema(const std::string& preset, const std::string& schema_file) {
  if (!preset.empty() && !schema_file.empty()) config_error("give either --preset or --schema, not both");
  if (!preset.empty()) return presets::by_name(preset);
  if (!schema_file.empty()) return load_schema(schema_file);
  config_error("a dataset schema is required (--preset or --schema)");
}

std::string describe(const ValidationReport& r) {
  std::string s;
  for (const auto& issue : r.issues) {
    if (!s.empty()) s += ';';
    s += std::string(to_string(issue.kind)) + "@" + std::to_string(issue.position);
  }
  return s;
}

// ---------------------------------------------------------------------------
// RunConfig serialization

ordered_json hyper_to_json(const Hyperparams& h) {
  return {{"units", h.units},
          {"embed_dim", h.embed_dim},
          {"dropout_rate", h.dropout_rate},
          {"learning_rate", h.learning_rate},
          {"max_len", h.max_len},
          {"epochs", h.epochs},
          {"batch_size", h.batch_size},
          {"seed", h.seed},
          {"beta1", h.beta1},
          {"beta2", h.beta2},
          {"adam_epsilon", h.adam_epsilon},
          {"clip_norm", h.clip_norm},
          {"patience", h.patience},
          {"init_scale", h.init_scale}};
}

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

std::string RunConfig::to_json() const {
  ordered_json j{{"data", data},
                 {"preset", preset},
                 {"schema_file", schema_file},
                 {"merge_data", merge_data},
                 {"merge_preset", merge_preset},
                 {"merge_schema_file", merge_schema_file},
                 {"hyperparams", hyper_to_json(hyper)},
                 {"train_fraction", train_fraction},
                 {"valid_fraction", valid_fraction},
                 {"strict_smiles", strict_smiles},
                 {"undersample", undersample},
                 {"balance_task", balance_task},
                 {"out", out},
                 {"kernels", kernels}};
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  RunConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "run config must be a JSON object");
    get_if(j, "data", c.data);
    get_if(j, "preset", c.preset);
    get_if(j, "schema_file", c.schema_file);
    get_if(j, "merge_data", c.merge_data);
    get_if(j, "merge_preset", c.merge_preset);
    get_if(j, "merge_schema_file", c.merge_schema_file);
    get_if(j, "train_fraction", c.train_fraction);
    get_if(j, "valid_fraction", c.valid_fraction);
    get_if(j, "strict_smiles", c.strict_smiles);
    get_if(j, "undersample", c.undersample);
    get_if(j, "balance_task", c.balance_task);
    get_if(j, "out", c.out);
    get_if(j, "kernels", c.kernels);
    if (j.contains("hyperparams")) {
      const auto& h = j.at("hyperparams");
      get_if(h, "units", c.hyper.units);
      get_if(h, "embed_dim", c.hyper.embed_dim);
      get_if(h, "dropout_rate", c.hyper.dropout_rate);
      get_if(h, "learning_rate", c.hyper.learning_rate);
      get_if(h, "max_len", c.hyper.max_len);
      get_if(h, "epochs", c.hyper.epochs);
      get_if(h, "batch_size", c.hyper.batch_size);
      get_if(h, "seed", c.hyper.seed);
      get_if(h, "beta1", c.hyper.beta1);
      get_if(h, "beta2", c.hyper.beta2);
      get_if(h, "adam_epsilon", c.hyper.adam_epsilon);
      get_if(h, "clip_norm", c.hyper.clip_norm);
      get_if(h, "patience", c.hyper.patience);
      get_if(h, "init_scale", c.hyper.init_scale);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed run config: ") + e.what());
  }
  return c;
}

namespace {

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  RunConfig flags;
  std::string config_path;
  bool quiet = false;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&, const RunConfig&)>>> overrides;
};

#define TOXSEQ_FIELD(opt, member) \
  a.overrides.emplace_back(opt, [](RunConfig& d, const RunConfig& s) { d.member = s.member; })

void add_train(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Train a BiLSTM on a dataset and report test metrics");
  RunConfig& f = a.flags;
  sub->add_option("--config", a.config_path, "Run config JSON (e.g. a previous run's config.json); flags override it");
  TOXSEQ_FIELD(sub->add_option("--data", f.data, "Dataset CSV"), data);
  TOXSEQ_FIELD(sub->add_option("--preset", f.preset, "clintox | tox21 | freesolv"), preset);
  TOXSEQ_FIELD(sub->add_option("--schema", f.schema_file, "Custom schema JSON"), schema_file);
  TOXSEQ_FIELD(sub->add_option("--merge-data", f.merge_data, "Second classification dataset for a synthetic union"), merge_data);
  TOXSEQ_FIELD(sub->add_option("--merge-preset", f.merge_preset, "Preset of --merge-data"), merge_preset);
  TOXSEQ_FIELD(sub->add_option("--merge-schema", f.merge_schema_file, "Schema JSON of --merge-data"), merge_schema_file);
  TOXSEQ_FIELD(sub->add_option("--units", f.hyper.units, "LSTM units per direction")->capture_default_str(), hyper.units);
  TOXSEQ_FIELD(sub->add_option("--embed-dim", f.hyper.embed_dim, "Embedding width")->capture_default_str(), hyper.embed_dim);
  TOXSEQ_FIELD(sub->add_option("--dropout", f.hyper.dropout_rate, "Dropout rate on the BiLSTM output")->capture_default_str(), hyper.dropout_rate);
  TOXSEQ_FIELD(sub->add_option("--lr", f.hyper.learning_rate, "Adam learning rate")->capture_default_str(), hyper.learning_rate);
  TOXSEQ_FIELD(sub->add_option("--max-len", f.hyper.max_len, "Sequence length (0: longest training SMILES, cap 256)")->capture_default_str(), hyper.max_len);
  TOXSEQ_FIELD(sub->add_option("--epochs", f.hyper.epochs, "Maximum epochs")->capture_default_str(), hyper.epochs);
  TOXSEQ_FIELD(sub->add_option("--batch-size", f.hyper.batch_size, "Mini-batch size")->capture_default_str(), hyper.batch_size);
  TOXSEQ_FIELD(sub->add_option("--seed", f.hyper.seed, "Seed for init, shuffling, dropout, undersampling and splits")->capture_default_str(), hyper.seed);
  TOXSEQ_FIELD(sub->add_option("--clip-norm", f.hyper.clip_norm, "Global gradient norm clip (<= 0 disables)")->capture_default_str(), hyper.clip_norm);
  TOXSEQ_FIELD(sub->add_option("--patience", f.hyper.patience, "Early-stopping patience in epochs (0 disables)")->capture_default_str(), hyper.patience);
  TOXSEQ_FIELD(sub->add_option("--init-scale", f.hyper.init_scale, "Uniform init half-width (0: Glorot)")->capture_default_str(), hyper.init_scale);
  TOXSEQ_FIELD(sub->add_option("--beta1", f.hyper.beta1)->capture_default_str(), hyper.beta1);
  TOXSEQ_FIELD(sub->add_option("--beta2", f.hyper.beta2)->capture_default_str(), hyper.beta2);
  TOXSEQ_FIELD(sub->add_option("--adam-epsilon", f.hyper.adam_epsilon)->capture_default_str(), hyper.adam_epsilon);
  TOXSEQ_FIELD(sub->add_option("--train-fraction", f.train_fraction, "Share of records used for train+valid")->capture_default_str(), train_fraction);
  TOXSEQ_FIELD(sub->add_option("--valid-fraction", f.valid_fraction, "Share of train+valid held out for early stopping")->capture_default_str(), valid_fraction);
  TOXSEQ_FIELD(sub->add_flag("--strict-smiles", f.strict_smiles, "Reject implausible SMILES instead of flagging them"), strict_smiles);
  TOXSEQ_FIELD(sub->add_flag("--undersample", f.undersample, "Balance classes of the balance task before splitting"), undersample);
  TOXSEQ_FIELD(sub->add_option("--balance-task", f.balance_task, "Task to balance (default: CT_TOX for ClinTox, else the first)"), balance_task);
  TOXSEQ_FIELD(sub->add_option("--out", f.out, "Output directory")->capture_default_str(), out);
  TOXSEQ_FIELD(sub->add_option("--kernels", f.kernels, "auto | scalar | avx2 | neon")->capture_default_str(), kernels);
  sub->add_flag("--quiet", a.quiet, "Only print the final summary");
}

#undef TOXSEQ_FIELD

std::size_t task_index(const TaskSchema& schema, const std::string& name) {
  if (name.empty()) return presets::default_balance_task(schema);
  for (std::size_t t = 0; t < schema.n_tasks(); ++t)
    if (schema.tasks[t].name == name) return t;
  config_error("unknown balance task '" + name + "'");
}

void print_report(std::ostream& out, const EvalReport& r) {
  std::size_t w = 4;
  for (const auto& t : r.per_task) w = std::max(w, t.name.size());
  out << std::left << std::setw(static_cast<int>(w)) << "task" << "  " << std::setw(8) << "metric" << "  value\n";
  for (const auto& t : r.per_task)
    out << std::left << std::setw(static_cast<int>(w)) << t.name << "  " << std::setw(8) << t.metric << "  "
        << detail::format_shortest(t.value) << '\n';
  for (const auto& s : r.skipped) out << s << ": skipped (single class)\n";
  out << "mean ± std: " << std::fixed << std::setprecision(4) << r.mean << " ± " << r.std << '\n';
  out << std::defaultfloat;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg;
  if (!a.config_path.empty()) cfg = RunConfig::from_json(read_file(a.config_path));
  for (const auto& [opt, apply] : a.overrides)
    if (opt->count() > 0) apply(cfg, a.flags);

  if (cfg.data.empty()) config_error("--data is required");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) config_error("--train-fraction must be in (0, 1)");
  if (!(cfg.valid_fraction > 0.0 && cfg.valid_fraction < 1.0)) config_error("--valid-fraction must be in (0, 1)");
  cfg.hyper.validate();
  select_kernels(cfg.kernels);

  TaskSchema schema = resolve_schema(cfg.preset, cfg.schema_file);
  schema.validate();
  const LoadOptions load_opts{cfg.strict_smiles, false};
  LoadedDataset loaded = load_dataset(cfg.data, schema, load_opts);
  std::vector<DatasetRecord> records = std::move(loaded.records);
  std::size_t flagged = loaded.flagged.size();
  if (!cfg.merge_data.empty()) {
    const TaskSchema other = resolve_schema(cfg.merge_preset, cfg.merge_schema_file);
    LoadedDataset second = load_dataset(cfg.merge_data, other, load_opts);
    flagged += second.flagged.size();
    auto merged = merge_synthetic(records, schema, second.records, other);
    records = std::move(merged.first);
    schema = std::move(merged.second);
  }
  if (!a.quiet) {
    out << "loaded " << records.size() << " records (" << schema.name << ", " << schema.n_tasks() << " tasks)\n";
    if (flagged) out << "warning: " << flagged << " SMILES failed validation and were kept\n";
  }
  if (cfg.undersample) {
    if (schema.kind() != TaskKind::Classification) config_error("--undersample needs a classification dataset");
    const std::size_t t = task_index(schema, cfg.balance_task);
    records = undersample(records, t, cfg.hyper.seed);
    if (!a.quiet) out << "undersampled on " << schema.tasks[t].name << ": " << records.size() << " records\n";
  }

  auto [train_full, test_set] = split(records, {cfg.train_fraction, cfg.hyper.seed});
  auto [train_set, valid_set] = split(train_full, {1.0 - cfg.valid_fraction, cfg.hyper.seed});
  if (!a.quiet)
    out << "split: train " << train_set.size() << ", valid " << valid_set.size() << ", test " << test_set.size()
        << '\n';

  TrainObserver obs;
  if (!a.quiet) {
    obs.on_epoch = [&](const EpochRecord& e) {
      out << "epoch " << e.epoch << "  train_loss " << detail::format_shortest(e.train_loss) << "  valid "
          << detail::format_shortest(e.valid_metric) << '\n';
    };
    obs.on_message = [&](const std::string& m) { out << m << '\n'; };
  }
  const TrainResult result = train(cfg.hyper, train_set, valid_set, schema, obs);

  const fs::path dir = cfg.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  save_model(result.model, dir / "model.txt");
  result.history.save_csv(dir / "history.csv");
  write_file(dir / "config.json", cfg.to_json());
  save_schema(dir / "schema.json", schema);
  save_dataset(dir / "train.csv", train_set, schema);
  save_dataset(dir / "valid.csv", valid_set, schema);
  save_dataset(dir / "test.csv", test_set, schema);

  const EvalReport report = evaluate(result.model, test_set, schema);
  report.save(dir / "report.json", dir / "report.csv");
  out << "best epoch " << result.history.best_epoch << " (" << result.history.metric_name << ")\n";
  out << "test metrics:\n";
  print_report(out, report);
  out << "wrote " << dir.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvalArgs {
  std::string model, data, preset, schema_file, out_json = "report.json", out_csv = "report.csv", kernels = "auto";
  bool strict_smiles = false;
};

void add_evaluate(CLI::App& app, EvalArgs& a) {
  auto* sub = app.add_subcommand("evaluate", "Score a saved model on a dataset");
  sub->add_option("--model", a.model, "Model file")->required();
  sub->add_option("--data", a.data, "Dataset CSV")->required();
  sub->add_option("--preset", a.preset, "clintox | tox21 | freesolv (default: columns named after the model's tasks)");
  sub->add_option("--schema", a.schema_file, "Custom schema JSON");
  sub->add_option("--out-json", a.out_json, "Report JSON path")->capture_default_str();
  sub->add_option("--out-csv", a.out_csv, "Report CSV path")->capture_default_str();
  sub->add_flag("--strict-smiles", a.strict_smiles, "Reject implausible SMILES");
  sub->add_option("--kernels", a.kernels, "auto | scalar | avx2 | neon")->capture_default_str();
}

TaskSchema schema_from_model(const BilstmModel& m) {
  TaskSchema s;
  s.name = "model";
  for (const auto& n : m.task_names) s.tasks.push_back({n, m.task_kind});
  s.allow_missing = m.task_kind == TaskKind::Classification;
  return s;
}

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  select_kernels(a.kernels);
  const BilstmModel model = load_model(a.model);
  const TaskSchema schema = a.preset.empty() && a.schema_file.empty() ? schema_from_model(model)
                                                                       : resolve_schema(a.preset, a.schema_file);
  schema.validate();
  if (schema.n_tasks() != model.n_tasks() || schema.kind() != model.task_kind)
    data_error("model has " + std::to_string(model.n_tasks()) + " " + std::string(to_string(model.task_kind)) +
               " tasks, dataset schema has " + std::to_string(schema.n_tasks()) + " " +
               std::string(to_string(schema.kind())));
  const LoadedDataset data = load_dataset(a.data, schema, {a.strict_smiles, false});
  const EvalReport report = evaluate(model, data.records, schema);
  report.save(a.out_json, a.out_csv);
  print_report(out, report);
  return kOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string model, input, output, kernels = "auto";
  std::vector<std::string> smiles;
  bool strict_smiles = false;
};

void add_predict(CLI::App& app, PredictArgs& a) {
  auto* sub = app.add_subcommand("predict", "Predict task values for SMILES strings");
  sub->add_option("--model", a.model, "Model file")->required();
  sub->add_option("--smiles", a.smiles, "SMILES string (repeatable)");
  sub->add_option("--input", a.input, "File with one SMILES per line");
  sub->add_option("--output", a.output, "Output CSV (default: standard output)");
  sub->add_flag("--strict-smiles", a.strict_smiles, "Emit diagnostics instead of values for implausible SMILES");
  sub->add_option("--kernels", a.kernels, "auto | scalar | avx2 | neon")->capture_default_str();
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  select_kernels(a.kernels);
  std::vector<std::string> inputs = a.smiles;
  if (!a.input.empty()) {
    std::ifstream is(a.input, std::ios::binary);
    if (!is) data_error("cannot read " + a.input);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      inputs.push_back(line);
    }
  }
  if (inputs.empty()) config_error("no input: give --smiles or --input");
  for (const auto& s : inputs)
    if (s.empty()) data_error("empty SMILES string");
  const BilstmModel model = load_model(a.model);

  std::ostringstream csv;
  csv << "smiles";
  for (const auto& n : model.task_names) csv << ',' << csv_field(n);
  if (a.strict_smiles) csv << ",diagnostics";
  csv << '\n';
  for (const auto& s : inputs) {
    csv << csv_field(s);
    const ValidationReport vr = a.strict_smiles ? validate_smiles(s) : ValidationReport{};
    if (!vr.is_plausible) {
      for (std::size_t t = 0; t < model.n_tasks(); ++t) csv << ',';
      csv << ',' << csv_field(describe(vr)) << '\n';
      continue;
    }
    for (double v : predict(model, s)) csv << ',' << detail::format_full(v);
    if (a.strict_smiles) csv << ',';
    csv << '\n';
  }
  if (a.output.empty()) out << csv.str();
  else write_file(a.output, csv.str());
  return kOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradArgs {
  std::uint64_t seed = 1;
  std::string kind = "both";
  std::string dropout = "both";
  double eps = 1e-4;
  double tolerance = 1e-4;
  bool perturb = false;
  std::string kernels = "auto";
};

void add_gradcheck(CLI::App& app, GradArgs& a) {
  auto* sub = app.add_subcommand("gradcheck", "Compare BPTT gradients with central finite differences");
  sub->add_option("--seed", a.seed, "Fixture seed")->capture_default_str();
  sub->add_option("--kind", a.kind, "classification | regression | both")->capture_default_str();
  sub->add_option("--dropout", a.dropout, "off | on | both")->capture_default_str();
  sub->add_option("--eps", a.eps, "Finite-difference step")->capture_default_str();
  sub->add_option("--tolerance", a.tolerance, "Maximum relative error")->capture_default_str();
  sub->add_option("--kernels", a.kernels, "auto | scalar | avx2 | neon")->capture_default_str();
  // Negative control: corrupts one analytic gradient entry.
  sub->add_flag("--perturb", a.perturb)->group("");
}

int cmd_gradcheck(const GradArgs& a, std::ostream& out) {
  select_kernels(a.kernels);
  std::vector<TaskKind> kinds;
  if (a.kind == "classification" || a.kind == "both") kinds.push_back(TaskKind::Classification);
  if (a.kind == "regression" || a.kind == "both") kinds.push_back(TaskKind::Regression);
  if (kinds.empty()) config_error("--kind must be classification, regression or both");
  std::vector<bool> drops;
  if (a.dropout == "off" || a.dropout == "both") drops.push_back(false);
  if (a.dropout == "on" || a.dropout == "both") drops.push_back(true);
  if (drops.empty()) config_error("--dropout must be off, on or both");
  if (!(a.eps > 0.0)) config_error("--eps must be > 0");

  bool ok = true;
  for (TaskKind kind : kinds) {
    for (bool drop : drops) {
      GradCheckSpec spec;
      spec.seed = a.seed;
      spec.kind = kind;
      spec.dropout = drop;
      spec.n_tasks = kind == TaskKind::Regression ? 1 : spec.n_tasks;
      const GradCheckFixture fx = make_gradcheck_fixture(spec);
      LossAndGrad lg = backward(fx.model, fx.batch);
      if (a.perturb) lg.grads.head_b[0] += 1e-3;
      const Gradients numeric = finite_diff_grad(fx.model, fx.batch, a.eps);
      const GradientComparison cmp = compare_gradients(lg.grads, numeric);
      out << "gradcheck seed=" << a.seed << " kind=" << to_string(kind) << " dropout=" << (drop ? "on" : "off")
          << " loss=" << detail::format_shortest(lg.loss) << '\n';
      for (const auto& b : cmp.blocks) {
        out << "  " << std::left << std::setw(10) << b.name << std::right << std::setw(5) << b.count
            << "  max_rel_error " << std::scientific << std::setprecision(3) << b.max_rel_error << "  max_abs_error "
            << b.max_abs_error << std::defaultfloat << (b.max_rel_error < a.tolerance ? "" : "  FAIL") << '\n';
      }
      const bool pass = cmp.max_rel_error < a.tolerance;
      out << "  max_rel_error " << std::scientific << std::setprecision(3) << cmp.max_rel_error << std::defaultfloat
          << (pass ? "  PASS" : "  FAIL") << '\n';
      ok = ok && pass;
    }
  }
  return ok ? kOk : kGradcheckFailed;
}

// ---------------------------------------------------------------------------
// export-metrics

struct ExportArgs {
  std::vector<std::string> reports;
  std::string output;
};

void add_export(CLI::App& app, ExportArgs& a) {
  auto* sub = app.add_subcommand("export-metrics", "Merge report.json files into one long-format CSV");
  sub->add_option("reports", a.reports, "[run=]path to report.json (run defaults to the parent directory name)")
      ->required();
  sub->add_option("--output", a.output, "Output CSV (default: standard output)");
}

int cmd_export(const ExportArgs& a, std::ostream& out) {
  std::ostringstream csv;
  csv << "run,task,metric,value\n";
  for (const auto& spec : a.reports) {
    std::string run, path = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      run = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    } else {
      const fs::path p(spec);
      run = p.filename() == "report.json" && p.has_parent_path() ? p.parent_path().filename().string()
                                                                 : p.stem().string();
    }
    EvalReport r;
    try {
      r = EvalReport::from_json(read_file(path));
    } catch (const Error& e) {
      data_error(path + ": " + e.what());
    }
    const std::string metric = r.per_task.empty() ? "" : r.per_task.front().metric;
    for (const auto& t : r.per_task)
      csv << csv_field(run) << ',' << csv_field(t.name) << ',' << t.metric << ',' << detail::format_full(t.value)
          << '\n';
    csv << csv_field(run) << ",__mean__," << metric << ',' << detail::format_full(r.mean) << '\n';
    csv << csv_field(run) << ",__std__," << metric << ',' << detail::format_full(r.std) << '\n';
  }
  if (a.output.empty()) out << csv.str();
  else write_file(a.output, csv.str());
  return kOk;
}

// ---------------------------------------------------------------------------
// vocab

struct VocabArgs {
  std::string data, preset, schema_file, model, output;
};

void add_vocab(CLI::App& app, VocabArgs& a) {
  auto* sub = app.add_subcommand("vocab", "Write the character vocabulary of a dataset or model");
  sub->add_option("--data", a.data, "Dataset CSV");
  sub->add_option("--preset", a.preset, "Preset schema of --data");
  sub->add_option("--schema", a.schema_file, "Schema JSON of --data");
  sub->add_option("--model", a.model, "Model file whose vocabulary to dump");
  sub->add_option("--output", a.output, "Vocabulary file (default: standard output)");
}

int cmd_vocab(const VocabArgs& a, std::ostream& out) {
  if (a.data.empty() == a.model.empty()) config_error("give exactly one of --data or --model");
  Vocabulary v;
  if (!a.model.empty()) {
    v = load_model(a.model).vocab;
  } else {
    const TaskSchema schema = resolve_schema(a.preset, a.schema_file);
    const LoadedDataset data = load_dataset(a.data, schema);
    v = Vocabulary::build(smiles_of(data.records));
  }
  std::ostringstream text;
  v.write(text);
  if (a.output.empty()) out << text.str();
  else write_file(a.output, text.str());
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"toxseq: BiLSTM molecular property prediction from SMILES", "toxseq"};
  app.require_subcommand(1);
  TrainArgs train_args;
  EvalArgs eval_args;
  PredictArgs predict_args;
  GradArgs grad_args;
  ExportArgs export_args;
  VocabArgs vocab_args;
  add_train(app, train_args);
  add_evaluate(app, eval_args);
  add_predict(app, predict_args);
  add_gradcheck(app, grad_args);
  add_export(app, export_args);
  add_vocab(app, vocab_args);

  std::vector<std::string> argv_store{"toxseq"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "train") return cmd_train(train_args, out);
    if (name == "evaluate") return cmd_evaluate(eval_args, out);
    if (name == "predict") return cmd_predict(predict_args, out);
    if (name == "gradcheck") return cmd_gradcheck(grad_args, out);
    if (name == "export-metrics") return cmd_export(export_args, out);
    if (name == "vocab") return cmd_vocab(vocab_args, out);
    err << "error: unknown subcommand " << name << '\n';
    return kConfigError;
  } catch (const Exit& e) {
    err << "error: " << e.message << '\n';
    return e.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace toxseq::cli
