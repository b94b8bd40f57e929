#include "anchorrank/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace anchorrank {

InvertedIndex InvertedIndex::build(std::vector<std::pair<std::string, TokenSeq>> docs) {
  std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < docs.size(); ++i)
    if (docs[i].first == docs[i - 1].first) throw std::invalid_argument("build_index: duplicate doc_id '" + docs[i].first + "'");

  InvertedIndex idx;
  std::size_t total = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& [id, seq] = docs[d];
    idx.numbers_.emplace(id, d);
    idx.doc_ids_.push_back(id);
    idx.lengths_.push_back(seq.size());
    total += seq.size();
    std::map<int, std::uint32_t> counts;
    for (int t : seq.tokens) ++counts[t];
    for (const auto& [term, tf] : counts) idx.postings_[term].push_back({static_cast<std::uint32_t>(d), tf});
  }
  idx.avg_length_ = docs.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs.size());
  return idx;
}

std::size_t InvertedIndex::doc_number(const std::string& doc_id) const {
  auto it = numbers_.find(doc_id);
  if (it == numbers_.end()) throw std::out_of_range("unknown doc_id '" + doc_id + "'");
  return it->second;
}

const std::vector<Posting>& InvertedIndex::postings(int term) const {
  static const std::vector<Posting> kEmpty;
  auto it = postings_.find(term);
  return it == postings_.end() ? kEmpty : it->second;
}

std::uint32_t InvertedIndex::term_freq(int term, std::size_t doc) const {
  const auto& list = postings(term);
  auto it = std::lower_bound(list.begin(), list.end(), doc,
                             [](const Posting& p, std::size_t d) { return p.doc < d; });
  return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

double InvertedIndex::idf(int term) const {
  const double n = static_cast<double>(num_docs());
  const double df = static_cast<double>(doc_freq(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

namespace {

double term_weight(double idf, double tf, double len, double avglen, const Bm25Params& p) {
  const double norm = avglen > 0.0 ? len / avglen : 0.0;
  return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

void check_params(const Bm25Params& p) {
  if (!(p.k1 > 0.0) || p.b < 0.0 || p.b > 1.0) throw std::invalid_argument("bm25: need k1 > 0 and 0 <= b <= 1");
}

}  // namespace

double bm25_score(const TokenSeq& query, const std::string& doc_id, const InvertedIndex& index,
                  const Bm25Params& params) {
  check_params(params);
  const std::size_t doc = index.doc_number(doc_id);
  const double len = static_cast<double>(index.length(doc));
  double score = 0.0;
  for (int term : query.tokens) {
    const std::uint32_t tf = index.term_freq(term, doc);
    if (tf == 0) continue;
    score += term_weight(index.idf(term), tf, len, index.avg_length(), params);
  }
  return score;
}

std::vector<ScoredDoc> retrieve_topk(const TokenSeq& query, std::size_t k, const InvertedIndex& index,
                                     const Bm25Params& params) {
  check_params(params);
  if (k == 0) throw std::invalid_argument("retrieve_topk: k must be >= 1");
  std::vector<double> acc(index.num_docs(), 0.0);
  std::vector<char> hit(index.num_docs(), 0);
  for (int term : query.tokens) {
    const double idf = index.idf(term);
    for (const Posting& p : index.postings(term)) {
      acc[p.doc] += term_weight(idf, p.tf, static_cast<double>(index.length(p.doc)), index.avg_length(), params);
      hit[p.doc] = 1;
    }
  }
  std::vector<std::size_t> order;
  for (std::size_t d = 0; d < acc.size(); ++d)
    if (hit[d]) order.push_back(d);
  // Document numbers ascend with doc_id, so the index breaks ties.
  auto better = [&](std::size_t a, std::size_t b) { return acc[a] != acc[b] ? acc[a] > acc[b] : a < b; };
  const std::size_t keep = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);
  std::vector<ScoredDoc> out;
  out.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) out.push_back({index.doc_id(order[r]), acc[order[r]]});
  return out;
}

std::vector<std::string> sample_negatives(const AnchorDocPair& pair, std::size_t n, const InvertedIndex& index,
                                          Rng& rng, const Bm25Params& params) {
  if (n == 0) throw std::invalid_argument("sample_negatives: n must be >= 1");
  if (index.num_docs() < n + 1)
    throw std::invalid_argument("sample_negatives: corpus has " + std::to_string(index.num_docs()) +
                                " documents, need at least " + std::to_string(n + 1));
  std::vector<std::string> out;
  std::set<std::string> taken{pair.linked_doc_id};
  for (const auto& hit : retrieve_topk(pair.anchor, n + 1, index, params)) {
    if (hit.doc_id == pair.linked_doc_id) continue;
    if (out.size() == n) break;
    out.push_back(hit.doc_id);
    taken.insert(hit.doc_id);
  }
  while (out.size() < n) {
    const auto& candidate = index.doc_id(rng.below(index.num_docs()));
    if (taken.insert(candidate).second) out.push_back(candidate);
  }
  return out;
}

namespace {

constexpr char kIndexMagic[8] = {'A', 'R', 'I', 'D', 'X', '\0', '\0', '\0'};
constexpr std::uint32_t kIndexVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated index snapshot");
  return v;
}

}  // namespace

void InvertedIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out.write(kIndexMagic, sizeof(kIndexMagic));
  put<std::uint32_t>(out, kIndexVersion);
  put<std::uint64_t>(out, doc_ids_.size());
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    put<std::uint64_t>(out, doc_ids_[d].size());
    out.write(doc_ids_[d].data(), static_cast<std::streamsize>(doc_ids_[d].size()));
    put<std::uint64_t>(out, lengths_[d]);
  }
  std::vector<int> terms;
  for (const auto& [t, _] : postings_) terms.push_back(t);
  std::sort(terms.begin(), terms.end());
  put<std::uint64_t>(out, terms.size());
  for (int t : terms) {
    const auto& list = postings_.at(t);
    put<std::int32_t>(out, t);
    put<std::uint64_t>(out, list.size());
    for (const Posting& p : list) {
      put<std::uint32_t>(out, p.doc);
      put<std::uint32_t>(out, p.tf);
    }
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[sizeof(kIndexMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) throw FormatError("not an index snapshot: " + path.string());
  if (const auto v = get<std::uint32_t>(in); v != kIndexVersion)
    throw FormatError("unsupported index snapshot version " + std::to_string(v));
  InvertedIndex idx;
  const auto n = get<std::uint64_t>(in);
  std::size_t total = 0;
  for (std::uint64_t d = 0; d < n; ++d) {
    std::string id(get<std::uint64_t>(in), '\0');
    in.read(id.data(), static_cast<std::streamsize>(id.size()));
    const auto len = get<std::uint64_t>(in);
    idx.numbers_.emplace(id, static_cast<std::size_t>(d));
    idx.doc_ids_.push_back(std::move(id));
    idx.lengths_.push_back(len);
    total += len;
  }
  const auto nterms = get<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < nterms; ++k) {
    const auto term = get<std::int32_t>(in);
    auto& list = idx.postings_[term];
    list.resize(get<std::uint64_t>(in));
    for (auto& p : list) {
      p.doc = get<std::uint32_t>(in);
      p.tf = get<std::uint32_t>(in);
    }
  }
  idx.avg_length_ = n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n);
  return idx;
}

}  // namespace anchorrank
