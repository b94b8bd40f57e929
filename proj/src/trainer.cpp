#include "anchorrank/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anchorrank/bm25.hpp"
#include "anchorrank/kernels.hpp"
#include "anchorrank/metrics.hpp"

namespace anchorrank {

RankerConfig ModelConfig::ranker() const {
  RankerConfig c;
  c.shape.dim = dim;
  c.shape.filters = ranker_filters;
  c.feature_scale = feature_scale;
  return c;
}

PolicyConfig ModelConfig::policy() const {
  PolicyConfig c;
  c.dim = dim;
  c.state_filters = state_filters;
  c.interaction.dim = dim;
  c.interaction.filters = interaction_filters;
  c.feature_scale = feature_scale;
  return c;
}

Tensor ModelConfig::initial_embeddings(const Vocabulary& vocab, std::uint64_t seed) const {
  if (!vectors.empty()) return embedding_table(vectors, vocab, dim, seed);
  if (!embeddings.empty()) return load_embeddings(embeddings, vocab, dim, seed);
  return random_embeddings(vocab, dim, seed);
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (episode_batches < 1) fail("T must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0)) fail("discount must lie in (0, 1]");
  if (patience < 1) fail("patience must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (negatives < 1) fail("negatives must be >= 1");
  if (reward_cutoff < 1 || pool_depth < 1) fail("reward_cutoff and pool_depth must be >= 1");
  if (steps_per_batch < 1) fail("steps_per_batch must be >= 1");
  if (folds < 2) fail("folds must be >= 2");
  if (!(policy_lr > 0.0) || !(ranker_lr > 0.0) || !(warmup_lr > 0.0)) fail("learning rates must be positive");
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::reinfoselect: return "reinfoselect";
    case TrainMode::all_anchor: return "all_anchor";
    case TrainMode::discriminator: return "discriminator";
  }
  return "?";
}

TrainMode parse_mode(const std::string& name) {
  if (name == "reinfoselect") return TrainMode::reinfoselect;
  if (name == "all_anchor" || name == "all-anchor") return TrainMode::all_anchor;
  if (name == "discriminator" || name == "discriminator-select") return TrainMode::discriminator;
  throw std::invalid_argument("unknown mode '" + name + "' (reinfoselect | all_anchor | discriminator)");
}

namespace {

// splitmix64 finalizer; keeps every consumer on its own stream of the master seed.
std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag * 1000003ULL + index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t {
  kFolds = 1,
  kOrder,
  kNegatives,
  kEmbeddings,
  kRankerInit,
  kPolicyInit,
  kWarmup,
  kSampling,
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ValidationSet build_validation(const Dataset& ds, const std::vector<std::string>& qids, std::size_t pool_depth,
                               AuditLog* audit, const std::string& phase) {
  ValidationSet val;
  for (const auto& id : qids) {
    const Query& q = ds.query(id);
    if (!ds.qrels.has_query(id)) throw std::invalid_argument("validation query '" + id + "' has no judgments");
    std::vector<std::string> pool;
    for (const auto& hit : retrieve_topk(q.tokens, pool_depth, ds.index)) pool.push_back(hit.doc_id);
    val.query_ids.push_back(id);
    val.queries.push_back(&q.tokens);
    val.pools.push_back(std::move(pool));
    if (audit) audit->record(phase, id);
  }
  val.qrels = ds.qrels.subset(qids);
  return val;
}

Run rerank(const ConvKnrmRanker& ranker, const ValidationSet& val, const Dataset& ds) {
  const auto n = static_cast<std::ptrdiff_t>(val.query_ids.size());
  Run run(val.query_ids.size());
  std::vector<std::vector<const TokenSeq*>> docs(run.size());
  for (std::size_t i = 0; i < run.size(); ++i)
    for (const auto& id : val.pools[i]) docs[i].push_back(&ds.doc(id));
  const int threads = configured_threads();
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto qi = static_cast<std::size_t>(i);
    const std::vector<double> scores = ranker.score_many(*val.queries[qi], docs[qi]);
    RankedList list{val.query_ids[qi], {}};
    for (std::size_t j = 0; j < scores.size(); ++j) list.docs.push_back({val.pools[qi][j], scores[j]});
    list.sort();
    run[qi] = std::move(list);
  }
  return run;
}

double evaluate_ndcg(const ConvKnrmRanker& ranker, const ValidationSet& val, const Dataset& ds, std::size_t k,
                     std::vector<double>* per_query) {
  if (val.empty()) throw std::invalid_argument("evaluate: empty validation set");
  const Run run = rerank(ranker, val, ds);
  double total = 0.0;
  if (per_query) per_query->clear();
  for (const auto& list : run) {
    const double v = ndcg_at_k(list, val.qrels, k);
    if (per_query) per_query->push_back(v);
    total += v;
  }
  return total / static_cast<double>(run.size());
}

double reward(const ConvKnrmRanker& after, const ConvKnrmRanker& before, const ValidationSet& val,
              const Dataset& ds, std::size_t k) {
  return evaluate_ndcg(after, val, ds, k) - evaluate_ndcg(before, val, ds, k);
}

void write_trace(const std::filesystem::path& path, const TrainTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# mode=" << trace.mode << "\n";
  out << "batch,selected_frac,reward,val_ndcg\n";
  for (const auto& r : trace.rows)
    out << r.batch << ',' << fmt(r.selected_frac) << ',' << fmt(r.reward) << ',' << fmt(r.val_ndcg) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TrainTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  TrainTrace t;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# mode=", 0) == 0) {
      t.mode = line.substr(7);
      continue;
    }
    if (line[0] == '#') continue;
    if (!header) {
      if (line != "batch,selected_frac,reward,val_ndcg")
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": unexpected trace header");
      header = true;
      continue;
    }
    std::istringstream ss(line);
    TraceRow r;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> r.batch >> c1 >> r.selected_frac >> c2 >> r.reward >> c3 >> r.val_ndcg) || c1 != ',' || c2 != ',' ||
        c3 != ',')
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed trace row");
    t.rows.push_back(r);
  }
  if (!header) throw FormatError(path.string() + ": missing trace header");
  return t;
}

std::vector<WeakExample> prepare_examples(const Dataset& ds, std::size_t negatives, std::uint64_t seed) {
  std::vector<WeakExample> out;
  out.reserve(ds.anchors.size());
  for (const auto& pair : ds.anchors) {
    Rng base(seed);
    Rng rng = base.fork(pair.pair_id);
    WeakExample ex;
    ex.pair = &pair;
    ex.positive = &ds.doc(pair.linked_doc_id);
    for (const auto& id : sample_negatives(pair, negatives, ds.index, rng)) ex.negatives.push_back(&ds.doc(id));
    out.push_back(std::move(ex));
  }
  return out;
}

AnchorStream::AnchorStream(std::vector<WeakExample> examples) : examples_(std::move(examples)) {}

std::vector<const WeakExample*> AnchorStream::next(std::size_t batch_size) {
  std::vector<const WeakExample*> batch;
  if (examples_.empty()) return batch;
  const std::size_t n = std::min(batch_size, examples_.size());
  for (std::size_t i = 0; i < n; ++i) {
    batch.push_back(&examples_[cursor_]);
    cursor_ = (cursor_ + 1) % examples_.size();
  }
  consumed_ += n;
  return batch;
}

EpisodeOutcome run_episode(AnchorStream& stream, const SelectionPolicy* policy, ConvKnrmRanker& ranker,
                           const ValidationSet& val, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                           LoopState& state) {
  EpisodeOutcome out;
  out.buffer.discount = cfg.discount;
  for (std::size_t t = 0; t < cfg.episode_batches; ++t) {
    const auto batch = stream.next(cfg.batch_size);
    if (batch.empty()) throw TrainingError("run_episode: the anchor stream is empty");

    EpisodeStep step;
    std::vector<std::size_t> selected;
    if (policy) {
      std::vector<PairView> views;
      for (const WeakExample* ex : batch) views.push_back({&ex->pair->anchor, ex->positive, ex->pair->pair_id});
      Selection sel = policy->select_batch(views, ActMode::sample, &rng);
      selected = std::move(sel.selected);
      step.decisions = std::move(sel.decisions);
    } else {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        selected.push_back(i);
        step.decisions.push_back({1, 1.0, 0.0});
      }
    }
    for (const WeakExample* ex : batch) {
      step.anchors.push_back(ex->pair->anchor);
      step.docs.push_back(*ex->positive);
      step.pair_ids.push_back(ex->pair->pair_id);
    }

    double r = 0.0;
    if (!selected.empty()) {
      std::vector<TrainingPair> pairs;
      for (std::size_t i : selected)
        for (const TokenSeq* neg : batch[i]->negatives)
          pairs.push_back({batch[i]->pair->anchor, *batch[i]->positive, *neg});
      for (std::size_t s = 0; s < cfg.steps_per_batch; ++s) ranker.train_step(pairs, cfg.ranker_lr);
      const double after = evaluate_ndcg(ranker, val, ds, cfg.reward_cutoff);
      r = after - state.current_ndcg;
      state.current_ndcg = after;
    }
    step.reward = r;
    out.rows.push_back({state.batches++, static_cast<double>(selected.size()) / static_cast<double>(batch.size()), r,
                        state.current_ndcg});
    out.buffer.steps.push_back(std::move(step));
  }
  out.buffer.finalize();
  return out;
}

void write_decisions(const std::filesystem::path& path, const std::vector<DecisionRecord>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "pair_id\taction\tprob_select\n";
  for (const auto& d : log) out << d.pair_id << '\t' << d.action << '\t' << fmt(d.prob_select) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<DecisionRecord> read_decisions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<DecisionRecord> log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.rfind("pair_id", 0) == 0)) continue;
    std::istringstream ss(line);
    DecisionRecord d;
    if (!(ss >> d.pair_id >> d.action >> d.prob_select) || (d.action != 0 && d.action != 1))
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed decision row");
    log.push_back(d);
  }
  return log;
}

double agreement(const std::vector<DecisionRecord>& a, const std::vector<DecisionRecord>& b) {
  std::map<std::size_t, int> left, right;
  for (const auto& d : a)
    if (!left.emplace(d.pair_id, d.action).second)
      throw std::invalid_argument("agreement: duplicate pair_id " + std::to_string(d.pair_id));
  for (const auto& d : b)
    if (!right.emplace(d.pair_id, d.action).second)
      throw std::invalid_argument("agreement: duplicate pair_id " + std::to_string(d.pair_id));
  if (left.empty()) throw std::invalid_argument("agreement: empty decision logs");
  std::size_t same = 0;
  for (const auto& [id, action] : left) {
    auto it = right.find(id);
    if (it == right.end())
      throw std::invalid_argument("agreement: pair_id " + std::to_string(id) + " missing from the second log");
    same += it->second == action ? 1 : 0;
  }
  if (right.size() != left.size())
    throw std::invalid_argument("agreement: the second log has pair_ids the first lacks");
  return static_cast<double>(same) / static_cast<double>(left.size());
}

double TrainResult::mean_final_val_ndcg() const {
  if (folds.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : folds) s += f.final_val_ndcg;
  return s / static_cast<double>(folds.size());
}

double TrainResult::mean_test_ndcg() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& f : folds)
    for (double v : f.test_ndcg) s += v, ++n;
  return n ? s / static_cast<double>(n) : 0.0;
}

namespace {

struct WarmupData {
  std::vector<PairView> positives;
  std::vector<PairView> negatives;
};

// Judged (query, document) pairs of the training queries against an equal
// number of anchor pairs.
WarmupData warmup_data(const Dataset& ds, const std::vector<std::string>& train_queries,
                       const std::vector<WeakExample>& examples, const TrainConfig& cfg, AuditLog& audit,
                       std::uint64_t seed) {
  WarmupData data;
  for (const auto& qid : train_queries) {
    audit.record("warmup", qid);
    std::vector<std::pair<int, std::string>> judged;
    for (const auto& [doc, g] : ds.qrels.for_query(qid))
      if (g > 0 && ds.docs.contains(doc)) judged.emplace_back(g, doc);
    std::sort(judged.begin(), judged.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (judged.size() > cfg.warmup_positives_per_query) judged.resize(cfg.warmup_positives_per_query);
    for (const auto& [g, doc] : judged) data.positives.push_back({&ds.query(qid).tokens, &ds.doc(doc), 0});
  }
  std::vector<std::size_t> idx(examples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  const std::size_t n = std::min(idx.size(), data.positives.size());
  for (std::size_t i = 0; i < n; ++i) {
    const WeakExample& ex = examples[idx[i]];
    data.negatives.push_back({&ex.pair->anchor, ex.positive, ex.pair->pair_id});
  }
  return data;
}

}  // namespace

namespace {

struct Setup {
  std::vector<std::string> labeled;
  std::vector<std::vector<std::string>> folds;
  std::vector<WeakExample> ordered;  // one anchor order for every fold and every mode
  Tensor embeddings;
  PolicyConfig pcfg;
};

Setup make_setup(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg) {
  cfg.validate();
  Setup s;
  s.labeled = ds.labeled_query_ids();
  s.folds = cross_validation_folds(ds, cfg);
  auto examples = prepare_examples(ds, cfg.negatives, derive(cfg.seed, kNegatives));
  std::vector<std::size_t> idx(examples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng order_rng(derive(cfg.seed, kOrder));
  order_rng.shuffle(idx);
  for (std::size_t i : idx) s.ordered.push_back(examples[i]);
  s.embeddings = model.initial_embeddings(ds.vocab, derive(cfg.seed, kEmbeddings));
  s.pcfg = model.policy();
  s.pcfg.per_step_returns = cfg.per_step_returns;
  return s;
}

std::vector<std::string> training_queries(const Setup& s, std::size_t f) {
  std::vector<std::string> out;
  for (const auto& q : s.labeled)
    if (std::find(s.folds[f].begin(), s.folds[f].end(), q) == s.folds[f].end()) out.push_back(q);
  return out;
}

SelectionPolicy warmed_policy(const Setup& s, const Dataset& ds, const TrainConfig& cfg, std::size_t f,
                              const std::vector<std::string>& train_q, AuditLog& audit, WarmupReport& report) {
  SelectionPolicy policy(s.embeddings, s.pcfg, derive(cfg.seed, kPolicyInit, f));
  const WarmupData wd = warmup_data(ds, train_q, s.ordered, cfg, audit, derive(cfg.seed, kWarmup, f));
  report = policy.warmup(wd.positives, wd.negatives, cfg.warmup_epochs, cfg.warmup_lr,
                         derive(cfg.seed, kWarmup, f + 1000));
  return policy;
}

}  // namespace

std::vector<std::vector<std::string>> cross_validation_folds(const Dataset& ds, const TrainConfig& cfg) {
  const auto labeled = ds.labeled_query_ids();
  if (labeled.size() < cfg.folds)
    throw TrainingError("full_train: " + std::to_string(labeled.size()) + " labeled queries for " +
                        std::to_string(cfg.folds) + " folds");
  return kfold_split(labeled, cfg.folds, derive(cfg.seed, kFolds));
}

WarmupResult warmup_fold(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg, std::size_t fold,
                         double threshold) {
  const Setup s = make_setup(ds, model, cfg);
  if (fold >= s.folds.size()) throw std::invalid_argument("warmup: fold " + std::to_string(fold) + " out of range");
  AuditLog audit;
  WarmupReport report;
  SelectionPolicy policy = warmed_policy(s, ds, cfg, fold, training_queries(s, fold), audit, report);
  std::vector<DecisionRecord> decisions;
  for (const auto& ex : s.ordered) {
    const double p = policy.decide(ex.pair->anchor, *ex.positive, ActMode::argmax, nullptr).prob_select;
    decisions.push_back({ex.pair->pair_id, p >= threshold ? 1 : 0, p});
  }
  std::sort(decisions.begin(), decisions.end(),
            [](const DecisionRecord& a, const DecisionRecord& b) { return a.pair_id < b.pair_id; });
  return {std::move(policy), report, std::move(decisions)};
}

TrainResult full_train(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg,
                       const TrainOptions& options) {
  const Setup setup = make_setup(ds, model, cfg);
  const auto& folds = setup.folds;
  const auto& ordered = setup.ordered;
  const auto& embeddings = setup.embeddings;
  for (std::size_t f : options.only_folds)
    if (f >= folds.size()) throw std::invalid_argument("full_train: fold " + std::to_string(f) + " out of range");

  TrainResult result;
  result.trace.mode = to_string(options.mode);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (!options.only_folds.empty() &&
        std::find(options.only_folds.begin(), options.only_folds.end(), f) == options.only_folds.end())
      continue;
    const std::vector<std::string> train_q = training_queries(setup, f);

    FoldResult fr(f, ConvKnrmRanker(embeddings, model.ranker(), derive(cfg.seed, kRankerInit, f)));
    fr.train_queries = train_q;
    fr.test_queries = folds[f];
    fr.trace.mode = result.trace.mode;
    const ValidationSet val = build_validation(ds, train_q, cfg.pool_depth, &fr.audit, "train");

    std::vector<WeakExample> stream_examples;
    if (options.mode == TrainMode::all_anchor) {
      stream_examples = ordered;
    } else {
      WarmupReport report;
      fr.policy.emplace(warmed_policy(setup, ds, cfg, f, train_q, fr.audit, report));
      fr.warmup = report;
      if (options.mode == TrainMode::discriminator) {
        double top = 0.0;
        for (const auto& ex : ordered) {
          const double p = fr.policy->decide(ex.pair->anchor, *ex.positive, ActMode::argmax, nullptr).prob_select;
          top = std::max(top, p);
          if (p >= options.threshold) stream_examples.push_back(ex);
        }
        if (stream_examples.empty())
          throw TrainingError("discriminator-select kept 0 of " + std::to_string(ordered.size()) +
                              " anchors at threshold " + fmt(options.threshold) + " (highest prob_select " +
                              fmt(top) + ")");
      } else {
        stream_examples = ordered;
        fr.policy->reset_optimizer_state();
        if (options.policy_override) options.policy_override(*fr.policy);
      }
    }
    fr.kept_anchors = stream_examples.size();
    AnchorStream stream(std::move(stream_examples));

    Rng sample_rng(derive(cfg.seed, kSampling, f));
    LoopState state;
    state.current_ndcg = evaluate_ndcg(fr.ranker, val, ds, cfg.reward_cutoff);
    fr.initial_val_ndcg = state.current_ndcg;
    double best = state.current_ndcg;
    ConvKnrmRanker best_ranker = fr.ranker;
    std::size_t stall = 0;
    const SelectionPolicy* selector = options.mode == TrainMode::reinfoselect ? &*fr.policy : nullptr;
    while (stream.size() > 0 && fr.episodes < cfg.max_episodes) {
      EpisodeOutcome ep = run_episode(stream, selector, fr.ranker, val, ds, cfg, sample_rng, state);
      if (options.mode == TrainMode::reinfoselect) fr.policy->update(ep.buffer, cfg.policy_lr);
      fr.trace.rows.insert(fr.trace.rows.end(), ep.rows.begin(), ep.rows.end());
      fr.trace.episode_mean_returns.push_back(ep.buffer.mean_return);
      ++fr.episodes;
      if (state.current_ndcg > best) {
        best = state.current_ndcg;
        best_ranker = fr.ranker;
        stall = 0;
      } else if (++stall >= cfg.patience) {
        break;
      }
    }
    fr.ranker = std::move(best_ranker);
    fr.final_val_ndcg = best;

    // Held-out fold: first and only read of its judgments.
    const ValidationSet test = build_validation(ds, folds[f], cfg.pool_depth, &fr.audit, "final");
    const Run run = rerank(fr.ranker, test, ds);
    const int max_grade = std::max(1, ds.qrels.max_grade());
    for (const auto& list : run) {
      fr.test_ndcg.push_back(ndcg_at_k(list, test.qrels, cfg.reward_cutoff));
      fr.test_err.push_back(err_at_k(list, test.qrels, cfg.reward_cutoff, max_grade));
    }

    for (const auto& ex : ordered) {
      DecisionRecord d{ex.pair->pair_id, 1, 1.0};
      if (options.mode != TrainMode::all_anchor) {
        const ActionDecision a = fr.policy->decide(ex.pair->anchor, *ex.positive, ActMode::argmax, nullptr);
        d.prob_select = a.prob_select;
        d.action = options.mode == TrainMode::discriminator ? (a.prob_select >= options.threshold ? 1 : 0) : a.action;
      }
      fr.decisions.push_back(d);
    }
    std::sort(fr.decisions.begin(), fr.decisions.end(),
              [](const DecisionRecord& a, const DecisionRecord& b) { return a.pair_id < b.pair_id; });

    const std::size_t offset = result.trace.rows.size();
    for (TraceRow r : fr.trace.rows) {
      r.batch += offset;
      result.trace.rows.push_back(r);
    }
    result.trace.episode_mean_returns.insert(result.trace.episode_mean_returns.end(),
                                             fr.trace.episode_mean_returns.begin(),
                                             fr.trace.episode_mean_returns.end());
    result.folds.push_back(std::move(fr));
  }
  return result;
}

void write_outputs(const std::filesystem::path& dir, const TrainResult& result) {
  std::filesystem::create_directories(dir);
  write_trace(dir / "trace.csv", result.trace);
  {
    std::ofstream ep(dir / "episodes.csv", std::ios::binary);
    ep << "episode,mean_return\n";
    for (std::size_t i = 0; i < result.trace.episode_mean_returns.size(); ++i)
      ep << i << ',' << fmt(result.trace.episode_mean_returns[i]) << '\n';
  }
  {
    std::ofstream fo(dir / "folds.tsv", std::ios::binary);
    fo << "query_id\tfold\n";
    for (const auto& f : result.folds)
      for (const auto& q : f.test_queries) fo << q << '\t' << f.fold << '\n';
  }
  std::ofstream summary(dir / "summary.tsv", std::ios::binary);
  summary << "fold\tepisodes\tkept_anchors\tinitial_val_ndcg\tfinal_val_ndcg\twarmup_accuracy\n";
  for (const auto& f : result.folds) {
    const auto sub = dir / ("fold" + std::to_string(f.fold));
    std::filesystem::create_directories(sub);
    f.ranker.save(sub / "ranker.ckpt");
    if (f.policy) f.policy->save(sub / "policy.ckpt");
    write_trace(sub / "trace.csv", f.trace);
    write_decisions(sub / "decisions.tsv", f.decisions);
    summary << f.fold << '\t' << f.episodes << '\t' << f.kept_anchors << '\t' << fmt(f.initial_val_ndcg) << '\t'
            << fmt(f.final_val_ndcg) << '\t' << (f.warmup ? fmt(f.warmup->accuracy) : "NA") << '\n';
  }
  if (!summary) throw std::runtime_error("write failed: " + (dir / "summary.tsv").string());
}

}  // namespace anchorrank
