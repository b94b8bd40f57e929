#pragma once

// Small corpora and model settings shared by the trainer and CLI tests.

#include <filesystem>
#include <string>

#include "anchorrank/dataset.hpp"
#include "anchorrank/synth.hpp"
#include "anchorrank/trainer.hpp"

namespace fixtures {

inline anchorrank::SynthSpec tiny_spec(std::uint64_t seed = 3) {
  anchorrank::SynthSpec s;
  s.topics = 3;
  s.docs_per_topic = 30;
  s.vocab_size = 200;
  s.anchors = 40;
  s.queries = 12;
  s.doc_min_length = 8;
  s.doc_max_length = 14;
  s.embedding_dim = 6;
  s.seed = seed;
  return s;
}

inline anchorrank::Dataset dataset_of(const anchorrank::SynthCorpus& c) {
  anchorrank::NormConfig norm;
  norm.stopwords = anchorrank::default_stopwords();
  return anchorrank::make_dataset(c.docs, c.anchors, c.queries, c.qrels, norm);
}

inline anchorrank::ModelConfig tiny_model(const anchorrank::SynthCorpus& c) {
  anchorrank::ModelConfig m;
  m.dim = 6;
  m.ranker_filters = 4;
  m.state_filters = 3;
  m.interaction_filters = 4;
  m.vectors = c.embeddings;
  return m;
}

inline anchorrank::TrainConfig tiny_train(std::uint64_t seed = 1) {
  anchorrank::TrainConfig t;
  t.folds = 3;
  t.batch_size = 8;
  t.episode_batches = 2;
  t.patience = 2;
  t.max_episodes = 4;
  t.warmup_epochs = 2;
  t.pool_depth = 10;
  t.reward_cutoff = 10;
  t.ranker_lr = 1e-2;
  t.policy_lr = 1e-2;
  t.seed = seed;
  return t;
}

/// A fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

std::string slurp(const std::filesystem::path& p);

}  // namespace fixtures
