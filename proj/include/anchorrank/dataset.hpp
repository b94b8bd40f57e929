#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "anchorrank/bm25.hpp"
#include "anchorrank/text.hpp"
#include "anchorrank/trec.hpp"

namespace anchorrank {

struct DatasetPaths {
  std::filesystem::path docs;
  std::filesystem::path anchors;
  std::filesystem::path queries;
  std::filesystem::path qrels;
  /// Optional text embedding file.
  std::filesystem::path embeddings;
};

/// Conventional file names inside a data directory; embeddings.txt is
/// picked up when present.
DatasetPaths paths_in(const std::filesystem::path& dir);

struct Query {
  std::string id;
  TokenSeq tokens;
};

/// A tokenized corpus with its BM25 index, weak-supervision pairs and labeled queries.
struct Dataset {
  Vocabulary vocab;
  NormConfig query_norm;
  NormConfig doc_norm;
  std::map<std::string, TokenSeq> docs;
  InvertedIndex index;
  std::vector<AnchorDocPair> anchors;
  std::vector<Query> queries;
  RelevanceJudgments qrels;
  /// Anchors dropped because they normalized to nothing or linked nowhere.
  std::size_t dropped_anchors = 0;

  const TokenSeq& doc(const std::string& id) const;
  const Query& query(const std::string& id) const;
  /// Queries that have judgments, in file order.
  std::vector<std::string> labeled_query_ids() const;
};

/// Reads and tokenizes every file. The vocabulary covers documents, anchors
/// and queries; anchors and queries are capped at 16 tokens, documents at 256.
Dataset load_dataset(const DatasetPaths& paths, const NormConfig& base);

/// Builds a dataset from in-memory records (used by tests and the generator).
Dataset make_dataset(const std::vector<TextRecord>& docs, const std::vector<AnchorRecord>& anchors,
                     const std::vector<TextRecord>& queries, RelevanceJudgments qrels, const NormConfig& base);

}  // namespace anchorrank
