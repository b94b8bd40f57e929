#include "anchorrank/ranker.hpp"

#include <cmath>
#include <stdexcept>

namespace anchorrank {

ConvKnrmRanker::ConvKnrmRanker(Tensor emb, const RankerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  require_shape(emb.rank() == 2 && emb.cols() == cfg.shape.dim && emb.rows() >= 2,
                "ranker: embedding table must be |V| x " + std::to_string(cfg.shape.dim));
  Rng rng(seed);
  embeddings = ParamSlot("ranker.embeddings", std::move(emb));
  embeddings.freeze_row0 = true;
  for (std::size_t c = 0; c < embeddings.value.cols(); ++c) embeddings.value.at(0, c) = 0.0;
  stack = KnrmStack("ranker", cfg.shape, rng);
  Tensor w({1, stack.feature_dim()});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-cfg.weight_init, cfg.weight_init);
  weights = ParamSlot("ranker.out.w", std::move(w));
  bias = ParamSlot("ranker.out.b", Tensor({1}));
}

Tensor ConvKnrmRanker::features(const TokenSeq& q, const TokenSeq& d) const {
  return stack.features(embeddings.value, q.tokens, d.tokens);
}

namespace {
Tensor scaled(Tensor phi, double factor) {
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] *= factor;
  return phi;
}
}  // namespace

double ConvKnrmRanker::score(const TokenSeq& q, const TokenSeq& d) const {
  return kernels::dense(scaled(features(q, d), cfg_.feature_scale), weights.value, bias.value, Activation::tanh)[0];
}

std::vector<double> ConvKnrmRanker::score_many(const TokenSeq& q, std::span<const TokenSeq* const> docs) const {
  const GramSet gq = stack.encode(embeddings.value, q.tokens);
  std::vector<double> out;
  out.reserve(docs.size());
  for (const TokenSeq* d : docs) {
    const Tensor phi = scaled(stack.features(gq, stack.encode(embeddings.value, d->tokens)), cfg_.feature_scale);
    out.push_back(kernels::dense(phi, weights.value, bias.value, Activation::tanh)[0]);
  }
  return out;
}

Var ConvKnrmRanker::score(Tape& tape, const TokenSeq& q, const TokenSeq& d) {
  const Var emb = tape.param(embeddings);
  const Var phi = stack.features(tape, emb, q.tokens, d.tokens);
  return ops::dense(ops::scale(phi, cfg_.feature_scale), tape.param(weights), tape.param(bias), Activation::tanh);
}

Var ConvKnrmRanker::batch_loss(Tape& tape, std::span<const TrainingPair> batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  std::vector<Var> margins;
  for (const auto& p : batch) {
    const Var pos = score(tape, p.anchor, p.positive);
    const Var neg = score(tape, p.anchor, p.negative);
    margins.push_back(ops::hinge(ops::sub(pos, neg), 1.0));
  }
  return ops::sum(ops::concat(margins));
}

double ConvKnrmRanker::train_step(std::span<const TrainingPair> batch, double lr) {
  Tape tape;
  const Var loss = batch_loss(tape, batch);
  const double value = loss.scalar();
  if (!std::isfinite(value)) throw NumericError("train_step: non-finite loss");
  tape.backward(loss);
  for (ParamSlot* s : slots()) adam_step(*s, lr);
  return value;
}

std::vector<ParamSlot*> ConvKnrmRanker::slots() {
  std::vector<ParamSlot*> out{&embeddings};
  for (ParamSlot* s : stack.slots()) out.push_back(s);
  out.push_back(&weights);
  out.push_back(&bias);
  return out;
}

std::vector<const ParamSlot*> ConvKnrmRanker::slots() const {
  std::vector<const ParamSlot*> out{&embeddings};
  for (const ParamSlot* s : stack.slots()) out.push_back(s);
  out.push_back(&weights);
  out.push_back(&bias);
  return out;
}

void ConvKnrmRanker::save(const std::filesystem::path& path) const {
  const auto s = slots();
  save_checkpoint(path, s);
}

void ConvKnrmRanker::load(const std::filesystem::path& path) {
  const auto s = slots();
  load_checkpoint(path, s);
}

}  // namespace anchorrank
