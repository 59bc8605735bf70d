#pragma once

// Character-level SMILES lexing, vocabulary and integer encoding.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace toxseq {

using Token = std::uint32_t;

/// Bijective character <-> index map. Index 0 is padding and index 1 marks an
/// unknown character; neither is ever bound to a character.
class Vocabulary {
 public:
  static constexpr Token kPad = 0;
  static constexpr Token kUnk = 1;
  static constexpr char kUnkPlaceholder = '?';

  Vocabulary() = default;

  // Characters are indexed from 2 in first-appearance order.
  static Vocabulary build(std::span<const std::string> corpus);
  // Binds characters in the given order, starting at 2. Duplicates are errors.
  static Vocabulary from_chars(std::string_view chars);

  std::size_t size() const noexcept { return chars_.size() + 2; }
  Token index_of(char c) const noexcept;  // kUnk for unknown characters
  bool contains(char c) const noexcept { return index_of(c) != kUnk; }
  // Throws IndexOutOfVocabulary for 0, 1 and anything >= size().
  char char_of(Token index) const;
  // Bound characters in index order (index 2 first).
  const std::string& chars() const noexcept { return chars_; }

  bool operator==(const Vocabulary& o) const noexcept { return chars_ == o.chars_; }

  // "index<TAB>character" lines; control characters, space and backslash are
  // written as \xHH.
  void write(std::ostream& os) const;
  static Vocabulary read(std::istream& is);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::string chars_;
  std::int32_t lookup_[256] = {};  // index or 0 when unbound
  void bind(char c);
};

struct EncodedSequence {
  std::vector<Token> tokens;  // length max_len
  std::size_t true_length = 0;
  bool truncated = false;
};

// Throws EmptyString for "" and InvalidArgument for max_len == 0.
EncodedSequence encode(const Vocabulary& vocab, std::string_view smiles, std::size_t max_len);

// Unknown tokens decode to Vocabulary::kUnkPlaceholder. Throws
// IndexOutOfVocabulary for out-of-range tokens or an invalid true_length.
std::string decode(const Vocabulary& vocab, const EncodedSequence& seq);

// max_len x vocab.size() one-hot rows for the first true_length positions;
// pad positions are all-zero. Inspection only.
std::vector<std::vector<std::uint8_t>> one_hot(const Vocabulary& vocab,
                                               const EncodedSequence& seq);

enum class IssueKind {
  EmptyString,
  UnbalancedOpenParen,    // '(' never closed
  UnbalancedCloseParen,   // ')' at depth 0
  UnbalancedOpenBracket,  // '[' never closed
  UnbalancedCloseBracket, // ']' without '['
  UnpairedRingClosure,    // ring digit with odd count
  InvalidCharacter,
};

std::string_view to_string(IssueKind kind) noexcept;

struct ValidationIssue {
  std::size_t position;
  IssueKind kind;
  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  bool is_plausible = true;
  std::vector<ValidationIssue> issues;
};

// Lightweight lexical plausibility check; never throws.
ValidationReport validate_smiles(std::string_view smiles);

// Longest string in the corpus, capped at cap.
std::size_t default_max_len(std::span<const std::string> corpus, std::size_t cap = 256);

}  // namespace toxseq
