#include "anchorrank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "anchorrank/rng.hpp"

namespace anchorrank {

void SynthSpec::validate() const {
  if (topics < 1 || docs_per_topic < 1 || queries < 1)
    throw std::invalid_argument("synth: topics, docs_per_topic and queries must be >= 1");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw std::invalid_argument("synth: noise_rate must lie in [0, 1]");
  if (noise_rate > 0.0 && topics < 2) throw std::invalid_argument("synth: noisy anchors need at least two topics");
  if (vocab_size / 2 < 4 || (vocab_size - vocab_size / 2) / topics < 4)
    throw std::invalid_argument("synth: vocab_size " + std::to_string(vocab_size) + " is too small for " +
                                std::to_string(topics) + " topics (need 4 words per topic and 4 background words)");
  if (doc_min_length < 1 || doc_max_length < doc_min_length)
    throw std::invalid_argument("synth: need 1 <= doc_min_length <= doc_max_length");
  if (!(topic_share > 0.0 && topic_share <= 1.0)) throw std::invalid_argument("synth: topic_share must lie in (0, 1]");
}

namespace {

class Zipf {
public:
  explicit Zipf(std::size_t n) : cdf_(n) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) cdf_[r] = s += 1.0 / static_cast<double>(r + 1);
    for (double& c : cdf_) c /= s;
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

private:
  std::vector<double> cdf_;
};

std::string name(const char* prefix, std::size_t a, std::size_t b) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%zuw%04zu", prefix, a, b);
  return buf;
}

std::string id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu", prefix, i);
  return buf;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

}  // namespace

SynthCorpus generate_synth(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n_bg = spec.vocab_size / 2;
  const std::size_t per_topic = (spec.vocab_size - n_bg) / spec.topics;
  const Zipf topic_zipf(per_topic), bg_zipf(n_bg);

  SynthCorpus c;
  // Topic words of each document, for anchor text and grading.
  std::vector<std::set<std::size_t>> doc_words;
  std::vector<std::map<std::size_t, std::size_t>> doc_counts;
  for (std::size_t t = 0; t < spec.topics; ++t)
    for (std::size_t k = 0; k < spec.docs_per_topic; ++k) {
      const std::size_t len = spec.doc_min_length + rng.below(spec.doc_max_length - spec.doc_min_length + 1);
      std::vector<std::string> words;
      std::set<std::size_t> mine;
      std::map<std::size_t, std::size_t> counts;
      for (std::size_t i = 0; i < len; ++i) {
        if (rng.uniform() < spec.topic_share) {
          const std::size_t w = topic_zipf.draw(rng);
          mine.insert(w);
          ++counts[w];
          words.push_back(name("t", t, w));
        } else {
          words.push_back(name("bg", 0, bg_zipf.draw(rng)));
        }
      }
      c.docs.push_back({id('d', c.docs.size()), join(words)});
      c.doc_topic.push_back(t);
      doc_words.push_back(std::move(mine));
      doc_counts.push_back(std::move(counts));
    }

  // Queries: one or two topic words plus a mid-frequency background word, so
  // BM25 pools mix on-topic documents with off-topic background matches.
  const std::size_t bg_lo = n_bg / 10, bg_hi = std::max(bg_lo + 1, n_bg / 2);
  for (std::size_t q = 0; q < spec.queries; ++q) {
    const std::size_t t = q % spec.topics;
    std::vector<std::size_t> terms;
    const std::size_t want = std::min<std::size_t>(1 + rng.below(2), per_topic);
    while (terms.size() < want) {
      const std::size_t w = topic_zipf.draw(rng);
      if (std::find(terms.begin(), terms.end(), w) == terms.end()) terms.push_back(w);
    }
    std::vector<std::string> words;
    for (std::size_t w : terms) words.push_back(name("t", t, w));
    words.push_back(name("bg", 0, bg_lo + rng.below(bg_hi - bg_lo)));
    const std::string qid = id('q', q);
    c.queries.push_back({qid, join(words)});
    for (std::size_t d = 0; d < c.docs.size(); ++d) {
      if (c.doc_topic[d] != t) continue;
      std::size_t overlap = 0;
      for (std::size_t w : terms) overlap += doc_counts[d].count(w) ? doc_counts[d].at(w) : 0;
      c.qrels.set(qid, c.docs[d].id, 1 + static_cast<int>(std::min<std::size_t>(overlap, 2)));
    }
  }

  const auto n_noisy = static_cast<std::size_t>(std::llround(spec.noise_rate * static_cast<double>(spec.anchors)));
  std::vector<std::size_t> order(spec.anchors);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  c.anchor_noisy.assign(spec.anchors, false);
  for (std::size_t i = 0; i < n_noisy; ++i) c.anchor_noisy[order[i]] = true;

  for (std::size_t a = 0; a < spec.anchors; ++a) {
    const std::size_t src = rng.below(c.docs.size());
    const std::size_t t = c.doc_topic[src];
    std::vector<std::size_t> pool(doc_words[src].begin(), doc_words[src].end());
    const std::size_t len = 1 + rng.below(2);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t w = pool.empty() ? topic_zipf.draw(rng) : pool[rng.below(pool.size())];
      words.push_back(name("t", t, w));
    }
    words.push_back(name("bg", 0, bg_lo + rng.below(bg_hi - bg_lo)));
    std::size_t target = src;
    if (c.anchor_noisy[a]) {
      const std::size_t other = (t + 1 + rng.below(spec.topics - 1)) % spec.topics;
      target = other * spec.docs_per_topic + rng.below(spec.docs_per_topic);
    }
    c.anchors.push_back({join(words), c.docs[target].id});
    c.anchor_topic.push_back(t);
  }
  if (spec.embedding_dim > 0) {
    // Own stream, so the text does not depend on the embedding width.
    Rng erng(spec.seed ^ 0x5eed5eed5eedULL);
    auto gauss = [&erng] {
      const double u1 = 1.0 - erng.uniform(), u2 = erng.uniform();
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    };
    const double scale = 0.1;
    std::vector<std::vector<double>> centroid(spec.topics, std::vector<double>(spec.embedding_dim));
    for (auto& v : centroid)
      for (double& x : v) x = gauss();
    for (std::size_t t = 0; t < spec.topics; ++t)
      for (std::size_t w = 0; w < per_topic; ++w) {
        std::vector<double> v(spec.embedding_dim);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * (centroid[t][i] + gauss());
        c.embeddings.emplace_back(name("t", t, w), std::move(v));
      }
    for (std::size_t w = 0; w < n_bg; ++w) {
      std::vector<double> v(spec.embedding_dim);
      for (double& x : v) x = scale * std::sqrt(2.0) * gauss();
      c.embeddings.emplace_back(name("bg", 0, w), std::move(v));
    }
  }
  return c;
}

void write_synth(const std::filesystem::path& dir, const SynthCorpus& c) {
  std::filesystem::create_directories(dir);
  write_text_tsv(dir / "docs.tsv", c.docs);
  write_anchor_tsv(dir / "anchors.tsv", c.anchors);
  write_text_tsv(dir / "queries.tsv", c.queries);
  write_qrels(dir / "qrels.txt", c.qrels);
  std::ofstream truth(dir / "truth.tsv", std::ios::binary);
  truth << "anchor_index\ttopic\tnoisy\n";
  for (std::size_t i = 0; i < c.anchors.size(); ++i)
    truth << i << '\t' << c.anchor_topic[i] << '\t' << (c.anchor_noisy[i] ? 1 : 0) << '\n';
  if (!truth) throw std::runtime_error("write failed: " + (dir / "truth.tsv").string());
  if (c.embeddings.empty()) return;
  std::ofstream emb(dir / "embeddings.txt", std::ios::binary);
  char buf[32];
  for (const auto& [word, v] : c.embeddings) {
    emb << word;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, " %.6f", x);
      emb << buf;
    }
    emb << '\n';
  }
  if (!emb) throw std::runtime_error("write failed: " + (dir / "embeddings.txt").string());
}

}  // namespace anchorrank
