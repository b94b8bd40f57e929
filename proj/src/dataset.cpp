#include "anchorrank/dataset.hpp"

#include <stdexcept>

namespace anchorrank {

DatasetPaths paths_in(const std::filesystem::path& dir) {
  DatasetPaths p{dir / "docs.tsv", dir / "anchors.tsv", dir / "queries.tsv", dir / "qrels.txt", {}};
  if (std::filesystem::exists(dir / "embeddings.txt")) p.embeddings = dir / "embeddings.txt";
  return p;
}

const TokenSeq& Dataset::doc(const std::string& id) const {
  auto it = docs.find(id);
  if (it == docs.end()) throw std::out_of_range("unknown document '" + id + "'");
  return it->second;
}

const Query& Dataset::query(const std::string& id) const {
  for (const auto& q : queries)
    if (q.id == id) return q;
  throw std::out_of_range("unknown query '" + id + "'");
}

std::vector<std::string> Dataset::labeled_query_ids() const {
  std::vector<std::string> out;
  for (const auto& q : queries)
    if (qrels.has_query(q.id) && !q.tokens.empty()) out.push_back(q.id);
  return out;
}

Dataset make_dataset(const std::vector<TextRecord>& docs, const std::vector<AnchorRecord>& anchors,
                     const std::vector<TextRecord>& queries, RelevanceJudgments qrels, const NormConfig& base) {
  Dataset ds;
  ds.query_norm = base;
  ds.query_norm.max_tokens = kQueryTokenCap;
  ds.doc_norm = base;
  ds.doc_norm.max_tokens = kDocTokenCap;

  for (const auto& d : docs)
    for (const auto& t : normalize(d.text, ds.doc_norm)) ds.vocab.add(t);
  for (const auto& a : anchors)
    for (const auto& t : normalize(a.text, ds.query_norm)) ds.vocab.add(t);
  for (const auto& q : queries)
    for (const auto& t : normalize(q.text, ds.query_norm)) ds.vocab.add(t);

  std::vector<std::pair<std::string, TokenSeq>> indexed;
  for (const auto& d : docs) {
    TokenSeq seq = tokenize(d.text, ds.doc_norm, ds.vocab, d.id);
    if (!ds.docs.emplace(d.id, seq).second) throw std::invalid_argument("duplicate doc_id '" + d.id + "'");
    indexed.emplace_back(d.id, std::move(seq));
  }
  ds.index = InvertedIndex::build(std::move(indexed));

  for (const auto& a : anchors) {
    TokenSeq seq = tokenize(a.text, ds.query_norm, ds.vocab);
    auto linked = ds.docs.find(a.linked_doc_id);
    if (seq.empty() || linked == ds.docs.end() || linked->second.empty()) {
      ++ds.dropped_anchors;
      continue;
    }
    const std::size_t pair_id = ds.anchors.size();
    seq.source_id = "a" + std::to_string(pair_id);
    ds.anchors.push_back({std::move(seq), a.linked_doc_id, pair_id});
  }
  for (const auto& q : queries) ds.queries.push_back({q.id, tokenize(q.text, ds.query_norm, ds.vocab, q.id)});
  ds.qrels = std::move(qrels);
  return ds;
}

Dataset load_dataset(const DatasetPaths& paths, const NormConfig& base) {
  return make_dataset(read_text_tsv(paths.docs), read_anchor_tsv(paths.anchors), read_text_tsv(paths.queries),
                      read_qrels(paths.qrels), base);
}

}  // namespace anchorrank
