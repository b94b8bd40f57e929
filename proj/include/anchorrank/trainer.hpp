#pragma once

// Interactive selection training: per batch the policy picks anchor pairs,
// the ranker takes a step on them, and the change in validation NDCG is the
// reward; every T batches the policy gets a REINFORCE update.

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "anchorrank/dataset.hpp"
#include "anchorrank/policy.hpp"
#include "anchorrank/ranker.hpp"

namespace anchorrank {

struct ModelConfig {
  std::size_t dim = 300;
  std::size_t ranker_filters = 128;
  std::size_t state_filters = 50;
  std::size_t interaction_filters = 128;
  double feature_scale = 0.01;
  /// Initial word vectors: `vectors` if given, else the file, else random.
  std::filesystem::path embeddings;
  WordVectors vectors;

  Tensor initial_embeddings(const Vocabulary& vocab, std::uint64_t seed) const;

  RankerConfig ranker() const;
  PolicyConfig policy() const;
};

struct TrainConfig {
  std::size_t episode_batches = 4;  // T
  double discount = 0.99;
  double policy_lr = 1e-3;
  double ranker_lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t negatives = 1;
  std::size_t reward_cutoff = 20;
  std::size_t pool_depth = 20;
  std::size_t patience = 3;
  std::size_t max_episodes = 50;
  std::size_t steps_per_batch = 1;
  std::size_t warmup_epochs = 5;
  double warmup_lr = 1e-3;
  std::size_t warmup_positives_per_query = 5;
  std::size_t folds = 5;
  bool per_step_returns = false;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class TrainMode { reinfoselect, all_anchor, discriminator };
std::string to_string(TrainMode mode);
TrainMode parse_mode(const std::string& name);

/// Records which queries' judgments were read, and in which phase.
struct AuditLog {
  struct Entry {
    std::string phase;
    std::string query_id;
  };
  std::vector<Entry> entries;
  void record(const std::string& phase, const std::string& qid) { entries.push_back({phase, qid}); }
};

/// Queries with fixed BM25 candidate pools and their judgments.
struct ValidationSet {
  std::vector<std::string> query_ids;
  std::vector<const TokenSeq*> queries;
  std::vector<std::vector<std::string>> pools;
  RelevanceJudgments qrels;

  bool empty() const { return query_ids.empty(); }
};

ValidationSet build_validation(const Dataset& ds, const std::vector<std::string>& qids, std::size_t pool_depth,
                               AuditLog* audit = nullptr, const std::string& phase = "train");

/// Re-ranks every pool with `ranker`.
Run rerank(const ConvKnrmRanker& ranker, const ValidationSet& val, const Dataset& ds);
/// Mean NDCG@k of the re-ranked pools; per-query values optional.
double evaluate_ndcg(const ConvKnrmRanker& ranker, const ValidationSet& val, const Dataset& ds, std::size_t k,
                     std::vector<double>* per_query = nullptr);
/// NDCG@k(after) - NDCG@k(before) on the same pools.
double reward(const ConvKnrmRanker& after, const ConvKnrmRanker& before, const ValidationSet& val,
              const Dataset& ds, std::size_t k);

struct TraceRow {
  std::size_t batch = 0;
  double selected_frac = 0.0;
  double reward = 0.0;
  double val_ndcg = 0.0;
};

struct TrainTrace {
  std::string mode;
  std::vector<TraceRow> rows;
  std::vector<double> episode_mean_returns;
};

/// CSV with a "# mode=..." line, then "batch,selected_frac,reward,val_ndcg".
void write_trace(const std::filesystem::path& path, const TrainTrace& trace);
TrainTrace read_trace(const std::filesystem::path& path);

/// One anchor pair with its positive and BM25 pseudo-negatives.
struct WeakExample {
  const AnchorDocPair* pair = nullptr;
  const TokenSeq* positive = nullptr;
  std::vector<const TokenSeq*> negatives;
};

/// Negatives for every anchor, drawn from per-pair streams of `seed`.
std::vector<WeakExample> prepare_examples(const Dataset& ds, std::size_t negatives, std::uint64_t seed);

/// Endless batches over a fixed example order.
class AnchorStream {
public:
  explicit AnchorStream(std::vector<WeakExample> examples);
  std::vector<const WeakExample*> next(std::size_t batch_size);
  std::size_t size() const { return examples_.size(); }
  std::size_t consumed() const { return consumed_; }
  const std::vector<WeakExample>& examples() const { return examples_; }

private:
  std::vector<WeakExample> examples_;
  std::size_t cursor_ = 0;
  std::size_t consumed_ = 0;
};

/// Mutable state threaded through consecutive episodes.
struct LoopState {
  double current_ndcg = 0.0;
  std::size_t batches = 0;
};

struct EpisodeOutcome {
  EpisodeBuffer buffer;
  std::vector<TraceRow> rows;
};

/// T batches: select (sampled, or everything when `policy` is null), one
/// ranker step per selected batch, reward from validation NDCG.
EpisodeOutcome run_episode(AnchorStream& stream, const SelectionPolicy* policy, ConvKnrmRanker& ranker,
                           const ValidationSet& val, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                           LoopState& state);

struct DecisionRecord {
  std::size_t pair_id = 0;
  int action = 0;
  double prob_select = 0.0;
};

void write_decisions(const std::filesystem::path& path, const std::vector<DecisionRecord>& log);
std::vector<DecisionRecord> read_decisions(const std::filesystem::path& path);
/// Fraction of shared pair_ids with equal action; the id sets must match.
double agreement(const std::vector<DecisionRecord>& a, const std::vector<DecisionRecord>& b);

struct FoldResult {
  FoldResult(std::size_t index, ConvKnrmRanker trained) : fold(index), ranker(std::move(trained)) {}

  std::size_t fold = 0;
  std::vector<std::string> train_queries;
  std::vector<std::string> test_queries;
  ConvKnrmRanker ranker;
  std::optional<SelectionPolicy> policy;
  TrainTrace trace;
  std::optional<WarmupReport> warmup;
  double initial_val_ndcg = 0.0;
  double final_val_ndcg = 0.0;
  std::size_t episodes = 0;
  std::size_t kept_anchors = 0;
  std::vector<double> test_ndcg;  // per test query, reward cutoff
  std::vector<double> test_err;
  std::vector<DecisionRecord> decisions;
  AuditLog audit;
};

struct TrainOptions {
  TrainMode mode = TrainMode::reinfoselect;
  /// Discriminator-select keeps anchors with prob_select >= threshold.
  double threshold = 0.5;
  /// Restrict to these folds (all when empty).
  std::vector<std::size_t> only_folds;
  /// Test hook: replaces the warmed policy before the reinforce stage.
  std::function<void(SelectionPolicy&)> policy_override;
};

struct TrainResult {
  std::vector<FoldResult> folds;
  TrainTrace trace;  // concatenated over folds, batches renumbered

  double mean_final_val_ndcg() const;
  double mean_test_ndcg() const;
};

/// The seeded fold partition of the labeled queries full_train uses.
std::vector<std::vector<std::string>> cross_validation_folds(const Dataset& ds, const TrainConfig& cfg);

struct WarmupResult {
  SelectionPolicy policy;
  WarmupReport report;
  /// Every anchor, action = prob_select >= threshold.
  std::vector<DecisionRecord> decisions;
};

/// The warm-up stage of one fold on its own.
WarmupResult warmup_fold(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg, std::size_t fold,
                         double threshold = 0.5);

/// Cross-validated training: per fold, warm-up on the training queries,
/// episodes until validation NDCG stalls for `patience` episodes, then
/// final scoring on the held-out fold.
TrainResult full_train(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg,
                       const TrainOptions& options = {});

/// Writes fold{i}/{ranker,policy}.ckpt, fold traces and decisions, trace.csv,
/// episodes.csv, folds.tsv and summary.tsv.
void write_outputs(const std::filesystem::path& dir, const TrainResult& result);

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace anchorrank
