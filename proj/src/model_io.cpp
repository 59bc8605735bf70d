// Model file (text, "TOXSEQ-MODEL v1"):
//
//   TOXSEQ-MODEL v1
//   key=value              hyperparameters, task_kind, n_tasks, task=<name> x n_tasks
//   vocab <size>
//   <size> lines           vocabulary file format
//   param <name> <rows> <cols>
//   <rows> lines           <cols> space-separated 17-significant-digit values
//   ...                    one param block per tensor, canonical order
//   checksum=<hex>         64-bit FNV-1a over every preceding byte

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "numfmt.hpp"
#include "toxseq/error.hpp"
#include "toxseq/model.hpp"

namespace toxseq {

namespace {

constexpr std::string_view kMagic = "TOXSEQ-MODEL v";
constexpr int kVersion = 1;

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorKind::MalformedModel, why);
}

struct LineReader {
  std::istringstream in;
  std::size_t line_no = 0;

  explicit LineReader(std::string text) : in(std::move(text)) {}

  std::string next() {
    std::string line;
    if (!std::getline(in, line)) malformed("unexpected end of file after line " + std::to_string(line_no));
    ++line_no;
    return line;
  }
};

std::pair<std::string, std::string> split_kv(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) return {line, {}};
  return {line.substr(0, eq), line.substr(eq + 1)};
}

template <class Int>
Int to_int(const std::string& v, const std::string& key) {
  auto parsed = detail::parse_int<Int>(v);
  if (!parsed) malformed("bad integer for " + key + ": '" + v + "'");
  return *parsed;
}

double to_real(const std::string& v, const std::string& key) {
  auto parsed = detail::parse_double(v);
  if (!parsed) malformed("bad number for " + key + ": '" + v + "'");
  return *parsed;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_model(std::ostream& os, const BilstmModel& model) {
  std::ostringstream body;
  const Hyperparams& c = model.config;
  body << kMagic << kVersion << '\n';
  body << "units=" << c.units << '\n'
       << "embed_dim=" << c.embed_dim << '\n'
       << "dropout_rate=" << detail::format_full(c.dropout_rate) << '\n'
       << "learning_rate=" << detail::format_full(c.learning_rate) << '\n'
       << "max_len=" << c.max_len << '\n'
       << "epochs=" << c.epochs << '\n'
       << "batch_size=" << c.batch_size << '\n'
       << "seed=" << c.seed << '\n'
       << "beta1=" << detail::format_full(c.beta1) << '\n'
       << "beta2=" << detail::format_full(c.beta2) << '\n'
       << "adam_epsilon=" << detail::format_full(c.adam_epsilon) << '\n'
       << "clip_norm=" << detail::format_full(c.clip_norm) << '\n'
       << "patience=" << c.patience << '\n'
       << "init_scale=" << detail::format_full(c.init_scale) << '\n'
       << "task_kind=" << to_string(model.task_kind) << '\n'
       << "n_tasks=" << model.task_names.size() << '\n';
  for (const auto& name : model.task_names) {
    if (name.find('\n') != std::string::npos) throw Error(ErrorKind::InvalidArgument, "task name contains a newline");
    body << "task=" << name << '\n';
  }
  body << "vocab " << model.vocab.size() << '\n';
  model.vocab.write(body);
  for (const auto& block : model.params.blocks()) {
    body << "param " << block.name << ' ' << block.rows << ' ' << block.cols << '\n';
    for (std::size_t r = 0; r < block.rows; ++r) {
      for (std::size_t col = 0; col < block.cols; ++col) {
        if (col) body << ' ';
        body << detail::format_full(block.values[r * block.cols + col]);
      }
      body << '\n';
    }
  }
  const std::string text = body.str();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  os << text << "checksum=" << hex << '\n';
}

BilstmModel read_model(std::istream& is) {
  const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};

  const auto first_nl = text.find('\n');
  const std::string_view header = std::string_view(text).substr(0, first_nl);
  if (header.substr(0, kMagic.size()) != kMagic) malformed("missing TOXSEQ-MODEL header");
  const auto version = detail::parse_int<int>(header.substr(kMagic.size()));
  if (!version) malformed("unreadable format version '" + std::string(header) + "'");
  if (*version != kVersion)
    throw Error(ErrorKind::FormatVersionMismatch,
                "file is format v" + std::to_string(*version) + ", this build reads v" + std::to_string(kVersion));

  const auto ck = text.rfind("\nchecksum=");
  if (ck == std::string::npos) malformed("missing checksum line");
  const std::string_view body = std::string_view(text).substr(0, ck + 1);
  std::string stored(text.substr(ck + 10));
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  if (stored != hex)
    throw Error(ErrorKind::ChecksumMismatch, "stored " + stored + ", computed " + std::string(hex));

  LineReader lines{std::string(body)};
  lines.next();  // header

  BilstmModel m;
  Hyperparams& c = m.config;
  std::size_t n_tasks = 0;
  bool have_kind = false;
  for (;;) {
    const std::string line = lines.next();
    if (line.rfind("vocab ", 0) == 0) {
      const auto size = to_int<std::size_t>(line.substr(6), "vocab");
      std::ostringstream vb;
      for (std::size_t i = 0; i < size; ++i) vb << lines.next() << '\n';
      std::istringstream vin(vb.str());
      try {
        m.vocab = Vocabulary::read(vin);
      } catch (const Error& e) {
        malformed(std::string("vocabulary block: ") + e.what());
      }
      if (m.vocab.size() != size) malformed("vocabulary size mismatch");
      break;
    }
    const auto [key, value] = split_kv(line);
    if (key == "units") c.units = to_int<std::size_t>(value, key);
    else if (key == "embed_dim") c.embed_dim = to_int<std::size_t>(value, key);
    else if (key == "dropout_rate") c.dropout_rate = to_real(value, key);
    else if (key == "learning_rate") c.learning_rate = to_real(value, key);
    else if (key == "max_len") c.max_len = to_int<std::size_t>(value, key);
    else if (key == "epochs") c.epochs = to_int<std::size_t>(value, key);
    else if (key == "batch_size") c.batch_size = to_int<std::size_t>(value, key);
    else if (key == "seed") c.seed = to_int<std::uint64_t>(value, key);
    else if (key == "beta1") c.beta1 = to_real(value, key);
    else if (key == "beta2") c.beta2 = to_real(value, key);
    else if (key == "adam_epsilon") c.adam_epsilon = to_real(value, key);
    else if (key == "clip_norm") c.clip_norm = to_real(value, key);
    else if (key == "patience") c.patience = to_int<std::size_t>(value, key);
    else if (key == "init_scale") c.init_scale = to_real(value, key);
    else if (key == "task_kind") {
      try {
        m.task_kind = parse_task_kind(value);
      } catch (const Error&) {
        malformed("bad task_kind '" + value + "'");
      }
      have_kind = true;
    } else if (key == "n_tasks") n_tasks = to_int<std::size_t>(value, key);
    else if (key == "task") m.task_names.push_back(value);
    else malformed("unknown key '" + key + "' on line " + std::to_string(lines.line_no));
  }
  if (!have_kind) malformed("missing task_kind");
  if (n_tasks == 0 || m.task_names.size() != n_tasks) malformed("task list does not match n_tasks");
  if (c.units == 0 || c.embed_dim == 0 || c.max_len == 0) malformed("units, embed_dim and max_len must be positive");

  m.params.embedding = Matrix(m.vocab.size(), c.embed_dim);
  m.params.forward_cell = LstmParams::zeros(c.units, c.embed_dim);
  m.params.backward_cell = LstmParams::zeros(c.units, c.embed_dim);
  m.params.head_W = Matrix(n_tasks, 2 * c.units);
  m.params.head_b = Vector(n_tasks, 0.0);

  for (auto& block : m.params.blocks()) {
    const std::string line = lines.next();
    std::istringstream hs(line);
    std::string tag, name;
    std::size_t rows = 0, cols = 0;
    if (!(hs >> tag >> name >> rows >> cols) || tag != "param")
      malformed("expected param header on line " + std::to_string(lines.line_no));
    if (name != block.name || rows != block.rows || cols != block.cols)
      malformed("param block '" + name + "' " + std::to_string(rows) + "x" + std::to_string(cols) +
                " does not match expected '" + block.name + "' " + std::to_string(block.rows) + "x" +
                std::to_string(block.cols));
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string row = lines.next();
      std::size_t pos = 0;
      for (std::size_t col = 0; col < cols; ++col) {
        const auto end = row.find(' ', pos);
        const std::string_view tok = std::string_view(row).substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        const auto v = detail::parse_double(tok);
        if (!v) malformed("bad value in block '" + name + "' on line " + std::to_string(lines.line_no));
        block.values[r * cols + col] = *v;
        if (col + 1 == cols && end != std::string::npos)
          malformed("long row in block '" + name + "' on line " + std::to_string(lines.line_no));
        if (end == std::string::npos) {
          if (col + 1 != cols) malformed("short row in block '" + name + "' on line " + std::to_string(lines.line_no));
          break;
        }
        pos = end + 1;
      }
    }
  }
  std::string rest;
  if (std::getline(lines.in, rest)) malformed("trailing data after parameter blocks");
  return m;
}

void save_model(const BilstmModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_model(os, model);
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

BilstmModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  return read_model(is);
}

}  // namespace toxseq
