#pragma once

// Topical toy corpus with anchors, a controllable share of which link to a
// document of the wrong topic.

#include <filesystem>
#include <string>
#include <vector>

#include "anchorrank/text.hpp"
#include "anchorrank/trec.hpp"

namespace anchorrank {

struct SynthSpec {
  std::size_t topics = 5;
  std::size_t docs_per_topic = 400;
  /// Half of the vocabulary is shared background, the rest split across topics.
  std::size_t vocab_size = 1000;
  std::size_t anchors = 200;
  /// Fraction of anchors linked to a uniformly random off-topic document.
  double noise_rate = 0.4;
  std::size_t queries = 50;
  std::size_t doc_min_length = 20;
  std::size_t doc_max_length = 40;
  /// Share of topic tokens in a document.
  double topic_share = 0.4;
  /// Width of the word vectors written next to the corpus (none when 0).
  /// Topic words scatter around a per-topic centroid, background words do not.
  std::size_t embedding_dim = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthCorpus {
  std::vector<TextRecord> docs;
  std::vector<AnchorRecord> anchors;
  std::vector<TextRecord> queries;
  RelevanceJudgments qrels;
  std::vector<std::size_t> doc_topic;  // parallel to docs
  std::vector<std::size_t> anchor_topic;
  std::vector<bool> anchor_noisy;
  WordVectors embeddings;
};

SynthCorpus generate_synth(const SynthSpec& spec);

/// docs.tsv, anchors.tsv, queries.tsv, qrels.txt, truth.tsv
/// ("anchor_index \t topic \t noisy") and, if any, embeddings.txt.
void write_synth(const std::filesystem::path& dir, const SynthCorpus& corpus);

}  // namespace anchorrank
