#include "anchorrank/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace anchorrank {

std::size_t PolicyConfig::state_dim() const {
  KnrmShape s = interaction;
  return 2 * windows.size() * state_filters + s.feature_dim();
}

Returns compute_returns(std::span<const double> rewards, double discount) {
  if (rewards.empty()) throw std::invalid_argument("compute_returns: no rewards");
  if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("compute_returns: discount must be in (0, 1]");
  Returns out;
  out.per_step.assign(rewards.size(), 0.0);
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + discount * running;
    out.per_step[t] = running;
  }
  double total = 0.0;
  for (double r : out.per_step) total += r;
  out.mean = total / static_cast<double>(rewards.size());
  return out;
}

void EpisodeBuffer::finalize() {
  std::vector<double> rewards;
  for (const auto& s : steps) rewards.push_back(s.reward);
  const Returns r = compute_returns(rewards, discount);
  returns = r.per_step;
  mean_return = r.mean;
}

SelectionPolicy::SelectionPolicy(Tensor emb, const PolicyConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.interaction.dim = cfg_.dim;
  require_shape(emb.rank() == 2 && emb.cols() == cfg_.dim && emb.rows() >= 2,
                "policy: embedding table must be |V| x " + std::to_string(cfg_.dim));
  if (cfg_.windows.empty() || cfg_.state_filters == 0) throw std::invalid_argument("policy: need windows and filters");
  Rng rng(seed);
  embeddings = ParamSlot("policy.embeddings", std::move(emb));
  embeddings.freeze_row0 = true;
  for (std::size_t c = 0; c < embeddings.value.cols(); ++c) embeddings.value.at(0, c) = 0.0;
  for (std::size_t h : cfg_.windows) {
    const auto tag = std::to_string(h);
    anchor_filters.emplace_back("policy.anchor_cnn" + tag + ".w", xavier(h * cfg_.dim, cfg_.state_filters, rng));
    anchor_biases.emplace_back("policy.anchor_cnn" + tag + ".b", Tensor({cfg_.state_filters}));
  }
  for (std::size_t h : cfg_.windows) {
    const auto tag = std::to_string(h);
    doc_filters.emplace_back("policy.doc_cnn" + tag + ".w", xavier(h * cfg_.dim, cfg_.state_filters, rng));
    doc_biases.emplace_back("policy.doc_cnn" + tag + ".b", Tensor({cfg_.state_filters}));
  }
  interaction = KnrmStack("policy.interaction", cfg_.interaction, rng);
  action_w = ParamSlot("policy.action.w", Tensor({2, cfg_.state_dim()}));
  action_b = ParamSlot("policy.action.b", Tensor({2}));
}

namespace {

void require_pair(const TokenSeq& anchor, const TokenSeq& doc) {
  if (anchor.empty() || doc.empty()) throw std::invalid_argument("encode_state: empty anchor or document");
}

Tensor gather(const Tensor& emb, const std::vector<int>& tokens) {
  Tensor out({tokens.size(), emb.cols()});
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    require_shape(tokens[r] >= 0 && static_cast<std::size_t>(tokens[r]) < emb.rows(), "token id out of range");
    auto src = emb.row(static_cast<std::size_t>(tokens[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void max_pool_into(const Tensor& g, std::vector<double>& out) {
  for (std::size_t f = 0; f < g.cols(); ++f) {
    double best = g.at(0, f);
    for (std::size_t i = 1; i < g.rows(); ++i) best = std::max(best, g.at(i, f));
    out.push_back(best);
  }
}

struct Probs {
  double prob_select;
  double log_p[2];
};

Probs two_way(const Tensor& logits) {
  if (!std::isfinite(logits[0]) || !std::isfinite(logits[1])) throw NumericError("policy: non-finite logits");
  const double peak = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - peak), e1 = std::exp(logits[1] - peak);
  const double z = e0 + e1;
  const double lse = peak + std::log(z);
  return {e1 / z, {logits[0] - lse, logits[1] - lse}};
}

}  // namespace

Tensor SelectionPolicy::encode_state(const TokenSeq& anchor, const TokenSeq& doc) const {
  require_pair(anchor, doc);
  std::vector<double> s;
  s.reserve(state_dim());
  const Tensor ea = gather(embeddings.value, anchor.tokens);
  for (std::size_t k = 0; k < cfg_.windows.size(); ++k)
    max_pool_into(kernels::conv1d_grams(ea, anchor_filters[k].value, anchor_biases[k].value, cfg_.windows[k]), s);
  const Tensor ed = gather(embeddings.value, doc.tokens);
  for (std::size_t k = 0; k < cfg_.windows.size(); ++k)
    max_pool_into(kernels::conv1d_grams(ed, doc_filters[k].value, doc_biases[k].value, cfg_.windows[k]), s);
  const Tensor phi = interaction.features(embeddings.value, anchor.tokens, doc.tokens);
  for (std::size_t i = 0; i < phi.size(); ++i) s.push_back(phi[i] * cfg_.feature_scale);
  return Tensor::vector(std::move(s));
}

Var SelectionPolicy::encode_state(Tape& tape, const TokenSeq& anchor, const TokenSeq& doc) {
  require_pair(anchor, doc);
  const Var emb = tape.param(embeddings);
  std::vector<Var> parts;
  const Var ea = ops::gather_rows(emb, anchor.tokens);
  for (std::size_t k = 0; k < cfg_.windows.size(); ++k)
    parts.push_back(ops::max_over_rows(ops::conv1d_grams(ea, tape.param(anchor_filters[k]),
                                                         tape.param(anchor_biases[k]), cfg_.windows[k])));
  const Var ed = ops::gather_rows(emb, doc.tokens);
  for (std::size_t k = 0; k < cfg_.windows.size(); ++k)
    parts.push_back(ops::max_over_rows(
        ops::conv1d_grams(ed, tape.param(doc_filters[k]), tape.param(doc_biases[k]), cfg_.windows[k])));
  parts.push_back(ops::scale(interaction.features(tape, emb, anchor.tokens, doc.tokens), cfg_.feature_scale));
  return ops::concat(parts);
}

Tensor SelectionPolicy::logits(const Tensor& state) const {
  return kernels::dense(state, action_w.value, action_b.value, Activation::none);
}

ActionDecision SelectionPolicy::act(const Tensor& state, ActMode mode, Rng* rng) const {
  const Tensor l = logits(state);
  const Probs p = two_way(l);
  ActionDecision d;
  d.prob_select = p.prob_select;
  if (mode == ActMode::argmax) {
    d.action = l[1] >= l[0] ? 1 : 0;
  } else {
    if (!rng) throw std::invalid_argument("act: sample mode needs a random generator");
    d.action = rng->uniform() < p.prob_select ? 1 : 0;
  }
  d.log_prob = p.log_p[d.action];
  return d;
}

ActionDecision SelectionPolicy::decide(const TokenSeq& anchor, const TokenSeq& doc, ActMode mode, Rng* rng) const {
  return act(encode_state(anchor, doc), mode, rng);
}

Selection SelectionPolicy::select_batch(std::span<const PairView> batch, ActMode mode, Rng* rng) const {
  if (batch.empty()) throw std::invalid_argument("select_batch: empty batch");
  Selection out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.decisions.push_back(decide(*batch[i].anchor, *batch[i].doc, mode, rng));
    if (out.decisions.back().action == 1) out.selected.push_back(i);
  }
  return out;
}

Var SelectionPolicy::log_prob(Tape& tape, const TokenSeq& anchor, const TokenSeq& doc, int action) {
  const Var state = encode_state(tape, anchor, doc);
  const Var l = ops::dense(state, tape.param(action_w), tape.param(action_b), Activation::none);
  return ops::pick(ops::log_softmax(l), static_cast<std::size_t>(action));
}

WarmupReport SelectionPolicy::warmup(std::span<const PairView> positives, std::span<const PairView> negatives,
                                     std::size_t epochs, double lr, std::uint64_t seed, std::size_t batch_size) {
  if (positives.empty() || negatives.empty())
    throw std::invalid_argument("warmup: both classes need examples (got " + std::to_string(positives.size()) +
                                " positive, " + std::to_string(negatives.size()) + " negative)");
  struct Example {
    PairView pair;
    int label;
  };
  std::vector<Example> all;
  for (const auto& p : positives) all.push_back({p, 1});
  for (const auto& n : negatives) all.push_back({n, 0});
  Rng rng(seed);
  rng.shuffle(all);
  const std::size_t n_train = std::max<std::size_t>(1, std::min(all.size() - 1, (all.size() * 4 + 2) / 5));
  std::vector<Example> train(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<Example> heldout(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());

  WarmupReport report;
  report.train_size = train.size();
  report.heldout_size = heldout.size();
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(train);
    double total = 0.0;
    for (std::size_t start = 0; start < train.size(); start += batch_size) {
      const std::size_t end = std::min(train.size(), start + batch_size);
      Tape tape;
      std::vector<Var> terms;
      for (std::size_t i = start; i < end; ++i)
        terms.push_back(log_prob(tape, *train[i].pair.anchor, *train[i].pair.doc, train[i].label));
      const Var nll = ops::scale(ops::sum(ops::concat(terms)), -1.0 / static_cast<double>(end - start));
      total += nll.scalar() * static_cast<double>(end - start);
      tape.backward(nll);
      for (ParamSlot* s : slots()) adam_step(*s, lr);
    }
    report.epoch_losses.push_back(total / static_cast<double>(train.size()));
  }
  std::size_t correct = 0;
  for (const auto& ex : heldout)
    if (decide(*ex.pair.anchor, *ex.pair.doc, ActMode::argmax, nullptr).action == ex.label) ++correct;
  report.accuracy = static_cast<double>(correct) / static_cast<double>(heldout.size());
  return report;
}

Var SelectionPolicy::surrogate(Tape& tape, const EpisodeBuffer& episode) {
  if (episode.returns.size() != episode.steps.size())
    throw std::invalid_argument("policy update: episode returns not computed");
  std::vector<Var> terms;
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    const auto& step = episode.steps[t];
    const double weight = cfg_.per_step_returns ? episode.returns[t] : episode.mean_return;
    for (std::size_t i = 0; i < step.decisions.size(); ++i)
      terms.push_back(ops::scale(log_prob(tape, step.anchors[i], step.docs[i], step.decisions[i].action), weight));
  }
  if (terms.empty()) return tape.constant(Tensor({1}));
  return ops::sum(ops::concat(terms));
}

void SelectionPolicy::update(const EpisodeBuffer& episode, double lr) {
  if (!std::isfinite(episode.mean_return)) throw NumericError("policy update: non-finite mean return");
  const bool any = cfg_.per_step_returns
                       ? std::any_of(episode.returns.begin(), episode.returns.end(), [](double r) { return r != 0.0; })
                       : episode.mean_return != 0.0;
  if (!any) return;
  Tape tape;
  const Var objective = surrogate(tape, episode);
  tape.backward(ops::scale(objective, -1.0));
  for (ParamSlot* s : slots()) adam_step(*s, lr);
}

void SelectionPolicy::reset_optimizer_state() {
  for (ParamSlot* s : slots()) reset_optimizer(*s);
}

std::vector<ParamSlot*> SelectionPolicy::slots() {
  std::vector<ParamSlot*> out{&embeddings};
  for (std::size_t k = 0; k < anchor_filters.size(); ++k) {
    out.push_back(&anchor_filters[k]);
    out.push_back(&anchor_biases[k]);
  }
  for (std::size_t k = 0; k < doc_filters.size(); ++k) {
    out.push_back(&doc_filters[k]);
    out.push_back(&doc_biases[k]);
  }
  for (ParamSlot* s : interaction.slots()) out.push_back(s);
  out.push_back(&action_w);
  out.push_back(&action_b);
  return out;
}

std::vector<const ParamSlot*> SelectionPolicy::slots() const {
  std::vector<const ParamSlot*> out;
  for (ParamSlot* s : const_cast<SelectionPolicy*>(this)->slots()) out.push_back(s);
  return out;
}

void SelectionPolicy::save(const std::filesystem::path& path) const {
  const auto s = slots();
  save_checkpoint(path, s);
}

void SelectionPolicy::load(const std::filesystem::path& path) {
  const auto s = slots();
  load_checkpoint(path, s);
}

}  // namespace anchorrank
