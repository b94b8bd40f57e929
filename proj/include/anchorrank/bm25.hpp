#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "anchorrank/rng.hpp"
#include "anchorrank/text.hpp"
#include "anchorrank/trec.hpp"

namespace anchorrank {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;
  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Term-frequency inverted index. Documents are numbered in ascending doc_id
/// order, so postings sorted by number are sorted by doc_id.
class InvertedIndex {
public:
  static InvertedIndex build(std::vector<std::pair<std::string, TokenSeq>> docs);

  std::size_t num_docs() const { return doc_ids_.size(); }
  double avg_length() const { return avg_length_; }
  std::size_t length(std::size_t doc) const { return lengths_[doc]; }
  const std::string& doc_id(std::size_t doc) const { return doc_ids_[doc]; }
  /// Internal number of `doc_id`; throws std::out_of_range if absent.
  std::size_t doc_number(const std::string& doc_id) const;
  bool contains(const std::string& doc_id) const { return numbers_.contains(doc_id); }
  const std::vector<Posting>& postings(int term) const;
  std::size_t doc_freq(int term) const { return postings(term).size(); }
  std::uint32_t term_freq(int term, std::size_t doc) const;
  const std::unordered_map<int, std::vector<Posting>>& all_postings() const { return postings_; }

  double idf(int term) const;

  void save(const std::filesystem::path& path) const;
  static InvertedIndex load(const std::filesystem::path& path);

  friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;

private:
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, std::size_t> numbers_;
  std::vector<std::size_t> lengths_;
  std::unordered_map<int, std::vector<Posting>> postings_;
  double avg_length_ = 0.0;
};

/// Robertson BM25 with idf = ln((N - df + 0.5) / (df + 0.5) + 1). Repeated
/// query terms contribute once per occurrence.
double bm25_score(const TokenSeq& query, const std::string& doc_id, const InvertedIndex& index,
                  const Bm25Params& params = {});

/// Top-k by descending score, ties by ascending doc_id. Only documents
/// sharing at least one term with the query are returned.
std::vector<ScoredDoc> retrieve_topk(const TokenSeq& query, std::size_t k, const InvertedIndex& index,
                                     const Bm25Params& params = {});

/// Pseudo-negatives for an anchor: BM25 top-(n+1) minus the linked document,
/// topped up with distinct uniform draws when retrieval runs short.
std::vector<std::string> sample_negatives(const AnchorDocPair& pair, std::size_t n, const InvertedIndex& index,
                                          Rng& rng, const Bm25Params& params = {});

}  // namespace anchorrank
