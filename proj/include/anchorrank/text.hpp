#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "anchorrank/tensor.hpp"

namespace anchorrank {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Stemmer { none, suffix };

struct NormConfig {
  std::set<std::string, std::less<>> stopwords;
  Stemmer stemmer = Stemmer::none;
  /// Token cap applied after normalization; 0 keeps everything.
  std::size_t max_tokens = 0;
};

/// The short English stopword list shipped with the tool.
std::set<std::string, std::less<>> default_stopwords();
/// One word per line; blank lines and '#' comments ignored.
std::set<std::string, std::less<>> load_stopwords(const std::filesystem::path& path);

inline constexpr std::size_t kQueryTokenCap = 16;
inline constexpr std::size_t kDocTokenCap = 256;

/// Strips -ing, -ed or -s when at least three characters remain, then undoubles
/// a trailing double consonant left behind by -ing/-ed ("running" -> "run").
std::string strip_suffix(std::string_view word);

/// Lowercase, split on non-alphanumeric runs, drop stopwords, stem, cap.
std::vector<std::string> normalize(std::string_view text, const NormConfig& cfg);

class Vocabulary {
public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  /// Returns the identifier of `term`, inserting it if new.
  int add(std::string_view term);
  /// Identifier of `term`, or kUnk.
  int lookup(std::string_view term) const;
  const std::string& term(int id) const { return terms_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return terms_.size(); }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> terms_;
};

struct TokenSeq {
  std::vector<int> tokens;
  std::string source_id;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

TokenSeq tokenize(std::string_view text, const NormConfig& cfg, const Vocabulary& vocab,
                  std::string source_id = {});

/// Builds a |vocab| x dim table. Rows for terms in the file are copied; the
/// rest are uniform on [-0.1, 0.1] from `seed`; the PAD row is zero.
Tensor load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                       std::uint64_t seed);
/// Same initialisation without a file.
Tensor random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

using WordVectors = std::vector<std::pair<std::string, std::vector<double>>>;
/// load_embeddings for vectors already in memory.
Tensor embedding_table(const WordVectors& vectors, const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

// ---- Raw TSV records ----

struct TextRecord {
  std::string id;
  std::string text;
};

/// "id \t text" lines (documents, queries).
std::vector<TextRecord> read_text_tsv(const std::filesystem::path& path);
void write_text_tsv(const std::filesystem::path& path, const std::vector<TextRecord>& records);

struct AnchorRecord {
  std::string text;
  std::string linked_doc_id;
};
/// "anchor_text \t linked_doc_id" lines.
std::vector<AnchorRecord> read_anchor_tsv(const std::filesystem::path& path);
void write_anchor_tsv(const std::filesystem::path& path, const std::vector<AnchorRecord>& records);

struct AnchorDocPair {
  TokenSeq anchor;
  std::string linked_doc_id;
  std::size_t pair_id = 0;
};

}  // namespace anchorrank
