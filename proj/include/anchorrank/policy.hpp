#pragma once

// Data-selection policy: state networks over (anchor, document), a linear
// action head with a two-way softmax, discriminator warm-up and REINFORCE.

#include <filesystem>
#include <span>
#include <vector>

#include "anchorrank/knrm.hpp"
#include "anchorrank/optim.hpp"
#include "anchorrank/rng.hpp"
#include "anchorrank/text.hpp"

namespace anchorrank {

struct PolicyConfig {
  std::size_t dim = 300;
  /// Filters per window in the anchor and document CNNs.
  std::size_t state_filters = 50;
  std::vector<std::size_t> windows{3, 4, 5};
  /// Interaction featurizer; its `dim` is forced to `dim`.
  KnrmShape interaction;
  /// Multiplies the interaction features inside the state.
  double feature_scale = 0.01;
  /// Weight every decision by its own step return instead of the episode mean.
  bool per_step_returns = false;

  std::size_t state_dim() const;
};

enum class ActMode { sample, argmax };

struct ActionDecision {
  int action = 0;
  double prob_select = 0.0;
  double log_prob = 0.0;
};

/// One (anchor, document) pair as the policy sees it.
struct PairView {
  const TokenSeq* anchor = nullptr;
  const TokenSeq* doc = nullptr;
  std::size_t pair_id = 0;
};

struct Selection {
  std::vector<std::size_t> selected;  // indices into the batch, input order
  std::vector<ActionDecision> decisions;
};

struct EpisodeStep {
  std::vector<TokenSeq> anchors;
  std::vector<TokenSeq> docs;
  std::vector<std::size_t> pair_ids;
  std::vector<ActionDecision> decisions;
  double reward = 0.0;
};

struct EpisodeBuffer {
  std::vector<EpisodeStep> steps;
  std::vector<double> returns;
  double mean_return = 0.0;
  double discount = 0.99;

  /// Fills `returns` and `mean_return` from the step rewards.
  void finalize();
};

struct Returns {
  std::vector<double> per_step;
  double mean = 0.0;
};

/// R_t = sum_{j>=t} c^(j-t) r_j and their mean.
Returns compute_returns(std::span<const double> rewards, double discount);

struct WarmupReport {
  double accuracy = 0.0;
  std::vector<double> epoch_losses;  // mean training cross-entropy per epoch
  std::size_t train_size = 0;
  std::size_t heldout_size = 0;
};

class SelectionPolicy {
public:
  SelectionPolicy(Tensor embeddings, const PolicyConfig& cfg, std::uint64_t seed);

  const PolicyConfig& config() const { return cfg_; }
  std::size_t state_dim() const { return cfg_.state_dim(); }

  Tensor encode_state(const TokenSeq& anchor, const TokenSeq& doc) const;
  Var encode_state(Tape& tape, const TokenSeq& anchor, const TokenSeq& doc);
  /// Two action logits (reject, select).
  Tensor logits(const Tensor& state) const;

  ActionDecision act(const Tensor& state, ActMode mode, Rng* rng) const;
  ActionDecision decide(const TokenSeq& anchor, const TokenSeq& doc, ActMode mode, Rng* rng) const;
  Selection select_batch(std::span<const PairView> batch, ActMode mode, Rng* rng) const;

  /// Log-probability of `action` on a tape.
  Var log_prob(Tape& tape, const TokenSeq& anchor, const TokenSeq& doc, int action);

  /// Trains state and action networks as a query-vs-anchor classifier
  /// (positives are class 1) and reports held-out accuracy on a fixed 80/20 split.
  WarmupReport warmup(std::span<const PairView> positives, std::span<const PairView> negatives,
                      std::size_t epochs, double lr, std::uint64_t seed, std::size_t batch_size = 16);

  /// Surrogate objective sum_t sum_i w_t log pi(a_i | s_i), w_t the episode
  /// mean return (or the step return when configured).
  Var surrogate(Tape& tape, const EpisodeBuffer& episode);
  /// One ascent step on the surrogate. A zero weight leaves parameters untouched.
  void update(const EpisodeBuffer& episode, double lr);

  void reset_optimizer_state();

  std::vector<ParamSlot*> slots();
  std::vector<const ParamSlot*> slots() const;
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

  ParamSlot embeddings;
  std::vector<ParamSlot> anchor_filters, anchor_biases;
  std::vector<ParamSlot> doc_filters, doc_biases;
  KnrmStack interaction;
  ParamSlot action_w;
  ParamSlot action_b;

private:
  PolicyConfig cfg_;
};

}  // namespace anchorrank
