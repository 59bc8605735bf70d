#include "toxseq/smiles_codec.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "toxseq/error.hpp"

namespace toxseq {

namespace {

bool needs_escape(unsigned char c) { return c <= 0x20 || c == '\\' || c >= 0x7f; }

std::string escape_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (!needs_escape(u)) return std::string(1, c);
  static constexpr char hex[] = "0123456789ABCDEF";
  return std::string{'\\', 'x', hex[u >> 4], hex[u & 0xF]};
}

char unescape_char(std::string_view s, std::size_t line) {
  if (s.size() == 1) return s[0];
  if (s.size() == 4 && s[0] == '\\' && s[1] == 'x') {
    unsigned value = 0;
    auto [p, ec] = std::from_chars(s.data() + 2, s.data() + 4, value, 16);
    if (ec == std::errc() && p == s.data() + 4) return static_cast<char>(value);
  }
  throw Error(ErrorKind::InvalidArgument,
              "vocabulary line " + std::to_string(line) + ": bad character field");
}

}  // namespace

void Vocabulary::bind(char c) {
  chars_.push_back(c);
  lookup_[static_cast<unsigned char>(c)] = static_cast<std::int32_t>(chars_.size() + 1);
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus) {
  Vocabulary v;
  bool any = false;
  for (const auto& s : corpus) {
    for (char c : s) {
      any = true;
      if (!v.contains(c)) v.bind(c);
    }
  }
  if (!any) throw Error(ErrorKind::EmptyCorpus, "corpus contains no characters");
  return v;
}

Vocabulary Vocabulary::from_chars(std::string_view chars) {
  Vocabulary v;
  for (char c : chars) {
    if (v.contains(c))
      throw Error(ErrorKind::InvalidArgument,
                  "duplicate vocabulary character " + escape_char(c));
    v.bind(c);
  }
  return v;
}

Token Vocabulary::index_of(char c) const noexcept {
  const auto idx = lookup_[static_cast<unsigned char>(c)];
  return idx == 0 ? kUnk : static_cast<Token>(idx);
}

char Vocabulary::char_of(Token index) const {
  if (index < 2 || index >= size())
    throw Error(ErrorKind::IndexOutOfVocabulary,
                "index " + std::to_string(index) + " has no character (size " +
                    std::to_string(size()) + ")");
  return chars_[index - 2];
}

void Vocabulary::write(std::ostream& os) const {
  os << "0\t<PAD>\n1\t<UNK>\n";
  for (std::size_t i = 0; i < chars_.size(); ++i)
    os << (i + 2) << '\t' << escape_char(chars_[i]) << '\n';
}

Vocabulary Vocabulary::read(std::istream& is) {
  Vocabulary v;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(is, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::InvalidArgument,
                  "vocabulary line " + std::to_string(expected + 1) + ": missing tab");
    std::size_t index = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + tab, index);
    if (ec != std::errc() || p != line.data() + tab || index != expected)
      throw Error(ErrorKind::InvalidArgument,
                  "vocabulary line " + std::to_string(expected + 1) +
                      ": expected index " + std::to_string(expected));
    const std::string_view field(line.data() + tab + 1, line.size() - tab - 1);
    if (index == 0 || index == 1) {
      if (field != (index == 0 ? "<PAD>" : "<UNK>"))
        throw Error(ErrorKind::InvalidArgument, "vocabulary reserved entries malformed");
    } else {
      const char c = unescape_char(field, expected + 1);
      if (v.contains(c))
        throw Error(ErrorKind::InvalidArgument, "duplicate vocabulary character");
      v.bind(c);
    }
    ++expected;
  }
  if (expected < 2) throw Error(ErrorKind::InvalidArgument, "vocabulary is missing reserved entries");
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write(os);
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  return read(is);
}

EncodedSequence encode(const Vocabulary& vocab, std::string_view smiles, std::size_t max_len) {
  if (smiles.empty()) throw Error(ErrorKind::EmptyString, "cannot encode an empty SMILES");
  if (max_len == 0) throw Error(ErrorKind::InvalidArgument, "max_len must be >= 1");
  EncodedSequence seq;
  seq.tokens.assign(max_len, Vocabulary::kPad);
  seq.true_length = std::min(smiles.size(), max_len);
  seq.truncated = smiles.size() > max_len;
  for (std::size_t i = 0; i < seq.true_length; ++i) seq.tokens[i] = vocab.index_of(smiles[i]);
  return seq;
}

std::string decode(const Vocabulary& vocab, const EncodedSequence& seq) {
  if (seq.true_length == 0 || seq.true_length > seq.tokens.size())
    throw Error(ErrorKind::IndexOutOfVocabulary,
                "true_length " + std::to_string(seq.true_length) + " is invalid");
  std::string out;
  out.reserve(seq.true_length);
  for (std::size_t i = 0; i < seq.true_length; ++i) {
    const Token t = seq.tokens[i];
    if (t == Vocabulary::kUnk)
      out.push_back(Vocabulary::kUnkPlaceholder);
    else
      out.push_back(vocab.char_of(t));  // throws for pad and out-of-range
  }
  return out;
}

std::vector<std::vector<std::uint8_t>> one_hot(const Vocabulary& vocab,
                                               const EncodedSequence& seq) {
  std::vector<std::vector<std::uint8_t>> rows(seq.tokens.size(),
                                              std::vector<std::uint8_t>(vocab.size(), 0));
  for (std::size_t i = 0; i < seq.true_length && i < seq.tokens.size(); ++i) {
    const Token t = seq.tokens[i];
    if (t >= vocab.size())
      throw Error(ErrorKind::IndexOutOfVocabulary, "token " + std::to_string(t));
    rows[i][t] = 1;
  }
  return rows;
}

std::string_view to_string(IssueKind kind) noexcept {
  switch (kind) {
    case IssueKind::EmptyString: return "empty-string";
    case IssueKind::UnbalancedOpenParen: return "unclosed-parenthesis";
    case IssueKind::UnbalancedCloseParen: return "unbalanced-parenthesis";
    case IssueKind::UnbalancedOpenBracket: return "unclosed-bracket";
    case IssueKind::UnbalancedCloseBracket: return "unbalanced-bracket";
    case IssueKind::UnpairedRingClosure: return "unpaired-ring-closure";
    case IssueKind::InvalidCharacter: return "invalid-character";
  }
  return "unknown";
}

ValidationReport validate_smiles(std::string_view smiles) {
  ValidationReport report;
  auto flag = [&](std::size_t pos, IssueKind k) { report.issues.push_back({pos, k}); };

  if (smiles.empty()) {
    flag(0, IssueKind::EmptyString);
    report.is_plausible = false;
    return report;
  }

  static constexpr std::string_view kSymbols = "-=#()[]@+/\\.";
  std::vector<std::size_t> open_parens;
  std::size_t bracket_open = std::string_view::npos;
  std::array<std::size_t, 10> ring_count{};
  std::array<std::size_t, 10> ring_last{};

  for (std::size_t i = 0; i < smiles.size(); ++i) {
    const char c = smiles[i];
    const auto u = static_cast<unsigned char>(c);
    if (!std::isalnum(u) && kSymbols.find(c) == std::string_view::npos) {
      flag(i, IssueKind::InvalidCharacter);
      continue;
    }
    if (c == '[') {
      if (bracket_open != std::string_view::npos) flag(bracket_open, IssueKind::UnbalancedOpenBracket);
      bracket_open = i;
    } else if (c == ']') {
      if (bracket_open == std::string_view::npos)
        flag(i, IssueKind::UnbalancedCloseBracket);
      bracket_open = std::string_view::npos;
    } else if (bracket_open != std::string_view::npos) {
      // Digits inside an atom bracket are isotopes, charges or H counts.
      continue;
    } else if (c == '(') {
      open_parens.push_back(i);
    } else if (c == ')') {
      if (open_parens.empty())
        flag(i, IssueKind::UnbalancedCloseParen);
      else
        open_parens.pop_back();
    } else if (std::isdigit(u)) {
      const auto d = static_cast<std::size_t>(c - '0');
      ++ring_count[d];
      ring_last[d] = i;
    }
  }
  if (bracket_open != std::string_view::npos) flag(bracket_open, IssueKind::UnbalancedOpenBracket);
  for (std::size_t pos : open_parens) flag(pos, IssueKind::UnbalancedOpenParen);
  for (std::size_t d = 0; d < 10; ++d)
    if (ring_count[d] % 2 != 0) flag(ring_last[d], IssueKind::UnpairedRingClosure);

  std::stable_sort(report.issues.begin(), report.issues.end(),
                   [](const auto& a, const auto& b) { return a.position < b.position; });
  report.is_plausible = report.issues.empty();
  return report;
}

std::size_t default_max_len(std::span<const std::string> corpus, std::size_t cap) {
  std::size_t longest = 1;
  for (const auto& s : corpus) longest = std::max(longest, s.size());
  return std::min(longest, cap);
}

}  // namespace toxseq
