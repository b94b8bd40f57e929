#include <algorithm>
#include <set>

#include "anchorrank/baselines.hpp"
#include "anchorrank/trainer.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace anchorrank;

namespace {

struct World {
  SynthCorpus corpus;
  Dataset ds;
  ModelConfig model;
  explicit World(std::uint64_t seed = 3)
      : corpus(generate_synth(fixtures::tiny_spec(seed))), ds(fixtures::dataset_of(corpus)),
        model(fixtures::tiny_model(corpus)) {}
};

bool same_params(const ConvKnrmRanker& a, const ConvKnrmRanker& b) {
  const auto x = a.slots(), y = b.slots();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i]->value == y[i]->value)) return false;
  return true;
}

void force_select(SelectionPolicy& p) { p.action_b.value = Tensor::vector({-1e3, 1e3}); }
void force_reject(SelectionPolicy& p) { p.action_b.value = Tensor::vector({1e3, -1e3}); }

}  // namespace

TEST_CASE("reward is the change in validation NDCG") {
  World w;
  const auto qids = w.ds.labeled_query_ids();
  const ValidationSet val = build_validation(w.ds, {qids.begin(), qids.begin() + 6}, 10);
  const Tensor emb = w.model.initial_embeddings(w.ds.vocab, 1);
  ConvKnrmRanker a(emb, w.model.ranker(), 1), b(emb, w.model.ranker(), 2);
  ConvKnrmRanker neg = a;
  for (std::size_t i = 0; i < neg.weights.value.size(); ++i) neg.weights.value[i] = -neg.weights.value[i];

  const double ea = evaluate_ndcg(a, val, w.ds, 10), eb = evaluate_ndcg(b, val, w.ds, 10);
  CHECK(reward(a, b, val, w.ds, 10) == doctest::Approx(ea - eb).epsilon(1e-12));
  CHECK(reward(a, b, val, w.ds, 10) == doctest::Approx(-reward(b, a, val, w.ds, 10)).epsilon(1e-12));
  CHECK(reward(a, a, val, w.ds, 10) == 0.0);
  // negating the ranking layer reverses every pool
  CHECK(reward(neg, a, val, w.ds, 10) == doctest::Approx(evaluate_ndcg(neg, val, w.ds, 10) - ea).epsilon(1e-12));

  std::vector<double> per_query;
  const double mean = evaluate_ndcg(a, val, w.ds, 10, &per_query);
  REQUIRE(per_query.size() == 6);
  double s = 0;
  for (double v : per_query) s += v;
  CHECK(mean == doctest::Approx(s / 6).epsilon(1e-12));

  CHECK_THROWS(evaluate_ndcg(a, ValidationSet{}, w.ds, 10));
}

TEST_CASE("run_episode") {
  World w;
  const auto qids = w.ds.labeled_query_ids();
  const ValidationSet val = build_validation(w.ds, qids, 10);
  const TrainConfig cfg = fixtures::tiny_train();
  const Tensor emb = w.model.initial_embeddings(w.ds.vocab, 1);

  SUBCASE("all-reject: zero rewards and an untouched ranker") {
    SelectionPolicy policy(emb, w.model.policy(), 4);
    force_reject(policy);
    ConvKnrmRanker ranker(emb, w.model.ranker(), 1);
    const ConvKnrmRanker before = ranker;
    AnchorStream stream(prepare_examples(w.ds, 1, 7));
    Rng rng(1);
    LoopState state{evaluate_ndcg(ranker, val, w.ds, 10), 0};
    const EpisodeOutcome out = run_episode(stream, &policy, ranker, val, w.ds, cfg, rng, state);
    REQUIRE(out.rows.size() == cfg.episode_batches);
    for (const auto& r : out.rows) {
      CHECK(r.reward == 0.0);
      CHECK(r.selected_frac == 0.0);
    }
    CHECK(out.buffer.mean_return == 0.0);
    CHECK(same_params(ranker, before));
  }
  SUBCASE("deterministic and consistent with its decisions") {
    auto run = [&] {
      SelectionPolicy policy(emb, w.model.policy(), 4);
      Rng init(2);
      policy.action_w.value = fd::random_tensor({2, policy.state_dim()}, init, -0.05, 0.05);
      ConvKnrmRanker ranker(emb, w.model.ranker(), 1);
      AnchorStream stream(prepare_examples(w.ds, 1, 7));
      Rng rng(3);
      LoopState state{evaluate_ndcg(ranker, val, w.ds, 10), 0};
      EpisodeOutcome out = run_episode(stream, &policy, ranker, val, w.ds, cfg, rng, state);
      return std::make_pair(std::move(out), ranker.weights.value);
    };
    const auto a = run(), b = run();
    CHECK(a.second == b.second);
    REQUIRE(a.first.rows.size() == b.first.rows.size());
    for (std::size_t t = 0; t < a.first.rows.size(); ++t) {
      CHECK(a.first.rows[t].reward == b.first.rows[t].reward);
      const auto& step = a.first.buffer.steps[t];
      std::size_t taken = 0;
      for (const auto& d : step.decisions) taken += d.action;
      CHECK(a.first.rows[t].selected_frac == doctest::Approx(double(taken) / step.decisions.size()));
      if (taken == 0) CHECK(a.first.rows[t].reward == 0.0);
    }
  }
  SUBCASE("empty stream") {
    ConvKnrmRanker ranker(emb, w.model.ranker(), 1);
    AnchorStream stream({});
    Rng rng(1);
    LoopState state;
    CHECK_THROWS_AS(run_episode(stream, nullptr, ranker, val, w.ds, cfg, rng, state), TrainingError);
  }
}

TEST_CASE("anchor stream wraps around") {
  World w;
  AnchorStream stream(prepare_examples(w.ds, 1, 7));
  const std::size_t n = stream.size();
  REQUIRE(n > 3);
  const auto first = stream.next(n - 1);
  const auto wrap = stream.next(3);
  CHECK(wrap[1] == first[0]);
  CHECK(stream.consumed() == n + 2);
  for (const auto& ex : stream.examples())
    for (const TokenSeq* neg : ex.negatives) CHECK(neg != ex.positive);
}

TEST_CASE("full_train invariants") {
  World w;
  TrainConfig cfg = fixtures::tiny_train();

  SUBCASE("an all-reject policy stalls and stops after the patience window") {
    TrainOptions opt;
    opt.only_folds = {0};
    opt.policy_override = force_reject;
    cfg.max_episodes = 20;
    const TrainResult r = full_train(w.ds, w.model, cfg, opt);
    const FoldResult& f = r.folds.at(0);
    CHECK(f.episodes == cfg.patience);
    CHECK(f.final_val_ndcg == f.initial_val_ndcg);
    for (const auto& row : f.trace.rows) CHECK(row.selected_frac == 0.0);
  }
  SUBCASE("identical seeds give identical runs") {
    TrainOptions opt;
    opt.only_folds = {1};
    const TrainResult a = full_train(w.ds, w.model, cfg, opt), b = full_train(w.ds, w.model, cfg, opt);
    CHECK(same_params(a.folds[0].ranker, b.folds[0].ranker));
    CHECK(a.folds[0].test_ndcg == b.folds[0].test_ndcg);
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) CHECK(a.trace.rows[i].reward == b.trace.rows[i].reward);
  }
  SUBCASE("held-out judgments are read only at the end") {
    const TrainResult r = full_train(w.ds, w.model, cfg);
    REQUIRE(r.folds.size() == cfg.folds);
    std::set<std::string> all;
    for (const FoldResult& f : r.folds) {
      const std::set<std::string> test(f.test_queries.begin(), f.test_queries.end());
      all.insert(test.begin(), test.end());
      bool final_seen = false;
      std::set<std::string> final_read;
      for (const auto& e : f.audit.entries) {
        if (e.phase == "final") {
          final_seen = true;
          CHECK(test.contains(e.query_id));
          final_read.insert(e.query_id);
        } else {
          CHECK_FALSE(final_seen);
          CHECK_FALSE(test.contains(e.query_id));
        }
      }
      CHECK(final_read == test);
      CHECK(f.test_ndcg.size() == test.size());
    }
    CHECK(all.size() == w.ds.labeled_query_ids().size());
  }
  SUBCASE("the best validation snapshot is kept") {
    TrainOptions opt;
    opt.only_folds = {0};
    const TrainResult r = full_train(w.ds, w.model, cfg, opt);
    const FoldResult& f = r.folds[0];
    CHECK(f.final_val_ndcg >= f.initial_val_ndcg);
    const auto folds = cross_validation_folds(w.ds, cfg);
    std::vector<std::string> train_q;
    for (const auto& q : w.ds.labeled_query_ids())
      if (std::find(folds[0].begin(), folds[0].end(), q) == folds[0].end()) train_q.push_back(q);
    const ValidationSet val = build_validation(w.ds, train_q, cfg.pool_depth);
    CHECK(evaluate_ndcg(f.ranker, val, w.ds, cfg.reward_cutoff) == doctest::Approx(f.final_val_ndcg).epsilon(1e-12));
  }
  SUBCASE("configuration errors") {
    TrainConfig bad = cfg;
    bad.folds = 20;
    CHECK_THROWS_AS(full_train(w.ds, w.model, bad), TrainingError);
    bad = cfg;
    bad.folds = 1;
    CHECK_THROWS(full_train(w.ds, w.model, bad));
    bad = cfg;
    bad.discount = 0;
    CHECK_THROWS(full_train(w.ds, w.model, bad));
    TrainOptions opt;
    opt.only_folds = {7};
    CHECK_THROWS(full_train(w.ds, w.model, cfg, opt));
  }
}

TEST_CASE("comparison modes") {
  World w;
  const TrainConfig cfg = fixtures::tiny_train();

  const TrainResult all = train_all_anchor(w.ds, w.model, cfg, {0});
  for (const auto& row : all.folds[0].trace.rows) CHECK(row.selected_frac == 1.0);
  CHECK(all.trace.mode == "all_anchor");
  CHECK(all.folds[0].kept_anchors == w.ds.anchors.size());

  SUBCASE("threshold zero keeps everything and matches all-anchor") {
    const TrainResult disc = train_discriminator_select(w.ds, w.model, cfg, 0.0, {0});
    CHECK(disc.folds[0].kept_anchors == w.ds.anchors.size());
    CHECK(same_params(disc.folds[0].ranker, all.folds[0].ranker));
  }
  SUBCASE("a threshold above one keeps nothing") {
    CHECK_THROWS_AS(train_discriminator_select(w.ds, w.model, cfg, 1.5, {0}), TrainingError);
  }
  SUBCASE("a policy that always selects matches all-anchor") {
    TrainOptions opt;
    opt.only_folds = {0};
    opt.policy_override = force_select;
    const TrainResult r = full_train(w.ds, w.model, cfg, opt);
    CHECK(same_params(r.folds[0].ranker, all.folds[0].ranker));
    for (const auto& row : r.folds[0].trace.rows) CHECK(row.selected_frac == 1.0);
  }
}

TEST_CASE("no anchors leaves the ranker at its initial state") {
  World w;
  SynthCorpus c = w.corpus;
  c.anchors.clear();
  const Dataset ds = fixtures::dataset_of(c);
  const TrainConfig cfg = fixtures::tiny_train();
  const TrainResult r = train_all_anchor(ds, w.model, cfg, {0});
  CHECK(r.folds[0].episodes == 0);
  CHECK(r.folds[0].trace.rows.empty());
  CHECK(r.folds[0].final_val_ndcg == r.folds[0].initial_val_ndcg);
}

TEST_CASE("warm-up of a single fold") {
  World w;
  const WarmupResult res = warmup_fold(w.ds, w.model, fixtures::tiny_train(), 0);
  CHECK(res.decisions.size() == w.ds.anchors.size());
  CHECK(std::is_sorted(res.decisions.begin(), res.decisions.end(),
                       [](const DecisionRecord& a, const DecisionRecord& b) { return a.pair_id < b.pair_id; }));
  for (const auto& d : res.decisions) CHECK(d.action == (d.prob_select >= 0.5 ? 1 : 0));
  CHECK(res.report.heldout_size > 0);
  CHECK_THROWS(warmup_fold(w.ds, w.model, fixtures::tiny_train(), 9));
}

TEST_CASE("trace, decisions and agreement") {
  fixtures::TempDir dir("trace");
  TrainTrace t;
  t.mode = "reinfoselect";
  t.rows = {{0, 0.5, 0.01, 0.3}, {1, 0.25, -0.002, 0.298}};
  write_trace(dir.path / "t.csv", t);
  const TrainTrace back = read_trace(dir.path / "t.csv");
  CHECK(back.mode == "reinfoselect");
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[1].batch == 1);
  CHECK(back.rows[1].selected_frac == doctest::Approx(0.25));
  CHECK(back.rows[1].reward == doctest::Approx(-0.002));

  const std::vector<DecisionRecord> a{{0, 1, 0.9}, {1, 0, 0.2}, {2, 1, 0.6}, {3, 0, 0.4}};
  std::vector<DecisionRecord> b = a;
  b[3].action = 1;
  write_decisions(dir.path / "d.tsv", a);
  const auto read = read_decisions(dir.path / "d.tsv");
  REQUIRE(read.size() == 4);
  CHECK(read[2].prob_select == doctest::Approx(0.6));
  CHECK(agreement(a, read) == 1.0);
  CHECK(agreement(a, b) == 0.75);
  CHECK_THROWS(agreement(a, {a[0]}));
  CHECK_THROWS(agreement({}, {}));
  CHECK_THROWS(agreement({a[0], a[0]}, {a[0], a[0]}));
}

TEST_CASE("outputs on disk") {
  World w;
  fixtures::TempDir dir("outputs");
  const TrainResult r = train_all_anchor(w.ds, w.model, fixtures::tiny_train(), {0});
  write_outputs(dir.path, r);
  for (const char* name : {"trace.csv", "episodes.csv", "folds.tsv", "summary.tsv", "fold0/ranker.ckpt"})
    CHECK(std::filesystem::exists(dir.path / name));
  CHECK(read_trace(dir.path / "trace.csv").rows.size() == r.trace.rows.size());
}
