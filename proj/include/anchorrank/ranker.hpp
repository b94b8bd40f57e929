#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "anchorrank/knrm.hpp"
#include "anchorrank/optim.hpp"
#include "anchorrank/text.hpp"

namespace anchorrank {

struct TrainingPair {
  TokenSeq anchor;
  TokenSeq positive;
  TokenSeq negative;
};

/// What the selection loop needs from a neural ranker.
class NeuralRanker {
public:
  virtual ~NeuralRanker() = default;
  virtual std::size_t feature_dim() const = 0;
  virtual Tensor features(const TokenSeq& q, const TokenSeq& d) const = 0;
  virtual double score(const TokenSeq& q, const TokenSeq& d) const = 0;
  /// Scores for one query against many documents.
  virtual std::vector<double> score_many(const TokenSeq& q, std::span<const TokenSeq* const> docs) const = 0;
  /// One pairwise-hinge optimizer step; returns the loss before the step.
  virtual double train_step(std::span<const TrainingPair> batch, double lr) = 0;
};

struct RankerConfig {
  KnrmShape shape;
  /// Ranking weights are drawn uniformly from [-weight_init, weight_init].
  double weight_init = 0.01;
  /// Kernel features are multiplied by this before the ranking layer.
  double feature_scale = 0.01;
};

/// Conv-KNRM: tanh(w . (scale * Phi(q, d)) + b) over 3x3 n-gram translation matrices.
class ConvKnrmRanker : public NeuralRanker {
public:
  ConvKnrmRanker(Tensor embeddings, const RankerConfig& cfg, std::uint64_t seed);

  std::size_t feature_dim() const override { return stack.feature_dim(); }
  Tensor features(const TokenSeq& q, const TokenSeq& d) const override;
  double score(const TokenSeq& q, const TokenSeq& d) const override;
  std::vector<double> score_many(const TokenSeq& q, std::span<const TokenSeq* const> docs) const override;
  double train_step(std::span<const TrainingPair> batch, double lr) override;

  /// Score node on a tape, for gradient checks and composite objectives.
  Var score(Tape& tape, const TokenSeq& q, const TokenSeq& d);
  /// Summed hinge loss of `batch` on a tape.
  Var batch_loss(Tape& tape, std::span<const TrainingPair> batch);

  std::vector<ParamSlot*> slots();
  std::vector<const ParamSlot*> slots() const;
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

  const RankerConfig& config() const { return cfg_; }

  ParamSlot embeddings;
  KnrmStack stack;
  ParamSlot weights;
  ParamSlot bias;

private:
  RankerConfig cfg_;
};

}  // namespace anchorrank
