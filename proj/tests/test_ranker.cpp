#include <cmath>

#include "anchorrank/ranker.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace anchorrank;

namespace {

TokenSeq toks(std::vector<int> ids) { return {std::move(ids), {}}; }

RankerConfig small_config(std::size_t dim, std::size_t filters) {
  RankerConfig cfg;
  cfg.shape.dim = dim;
  cfg.shape.filters = filters;
  return cfg;
}

// One-hot rows, PAD row zero.
Tensor one_hot(std::size_t vocab) {
  Tensor e({vocab, vocab});
  for (std::size_t i = 1; i < vocab; ++i) e.at(i, i) = 1.0;
  return e;
}

oracle::Mat rows_of(const Tensor& emb, const std::vector<int>& t) {
  oracle::Mat m;
  for (int id : t) m.emplace_back(emb.row(id).begin(), emb.row(id).end());
  return m;
}

// Features recomposed from the scalar oracles (no PAD in the inputs).
oracle::Vec oracle_features(const ConvKnrmRanker& r, const std::vector<int>& q, const std::vector<int>& d) {
  const auto& cfg = r.config().shape.kernels;
  const auto eq = rows_of(r.embeddings.value, q), ed = rows_of(r.embeddings.value, d);
  std::vector<oracle::Mat> gq, gd;
  for (std::size_t h = 1; h <= 3; ++h) {
    const auto W = oracle::to_mat(r.stack.filters[h - 1].value);
    const auto b = oracle::to_vec(r.stack.biases[h - 1].value);
    gq.push_back(oracle::conv_grams(eq, W, b, h));
    gd.push_back(oracle::conv_grams(ed, W, b, h));
  }
  oracle::Vec phi;
  for (const auto& a : gq)
    for (const auto& c : gd) {
      const auto block = oracle::kernel_pool(oracle::cosine(a, c), cfg.mu, cfg.sigma);
      phi.insert(phi.end(), block.begin(), block.end());
    }
  return phi;
}

}  // namespace

TEST_CASE("feature layout and score range") {
  Rng rng(1);
  ConvKnrmRanker r(fd::random_tensor({10, 5}, rng), small_config(5, 4), 7);
  CHECK(r.feature_dim() == 189);
  const TokenSeq q = toks({2, 3}), d = toks({4, 5, 2, 9});
  CHECK(r.features(q, d).size() == 189);
  const double s = r.score(q, d);
  CHECK(s > -1.0);
  CHECK(s < 1.0);

  r.weights.value.fill(0.0);
  CHECK(r.score(q, d) == 0.0);
  CHECK_THROWS(r.score(toks({}), d));
  CHECK_THROWS(r.score(q, toks({0, 0})));
}

TEST_CASE("features and score match an independent recomposition") {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    ConvKnrmRanker r(fd::random_tensor({12, 6}, rng), small_config(6, 5), 100 + trial);
    for (std::size_t i = 0; i < r.weights.value.size(); ++i) r.weights.value[i] = rng.uniform(-1, 1);
    r.bias.value[0] = rng.uniform(-0.5, 0.5);
    std::vector<int> q(1 + rng.below(4)), d(1 + rng.below(7));
    for (auto& x : q) x = static_cast<int>(1 + rng.below(11));
    for (auto& x : d) x = static_cast<int>(1 + rng.below(11));
    const Tensor phi = r.features(toks(q), toks(d));
    const auto want = oracle_features(r, q, d);
    double z = r.bias.value[0];
    for (std::size_t i = 0; i < 189; ++i) {
      CHECK(phi[i] == doctest::Approx(want[i]).epsilon(1e-9));
      z += r.weights.value[i] * 0.01 * want[i];
    }
    CHECK(r.score(toks(q), toks(d)) == doctest::Approx(std::tanh(z)).epsilon(1e-9));
    Tape tape;
    CHECK(r.score(tape, toks(q), toks(d)).scalar() == doctest::Approx(std::tanh(z)).epsilon(1e-9));
  }
}

TEST_CASE("score_many agrees with score") {
  Rng rng(4);
  ConvKnrmRanker r(fd::random_tensor({9, 4}, rng), small_config(4, 3), 2);
  const TokenSeq q = toks({1, 2, 3});
  const TokenSeq a = toks({4, 5}), b = toks({6}), c = toks({2, 8, 7, 3});
  const TokenSeq* docs[] = {&a, &b, &c};
  const auto many = r.score_many(q, docs);
  REQUIRE(many.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(many[i] == r.score(q, *docs[i]));
}

TEST_CASE("pairwise hinge loss") {
  Rng rng(6);
  ConvKnrmRanker r(fd::random_tensor({10, 4}, rng), small_config(4, 3), 5);
  const TrainingPair p{toks({2, 3}), toks({2, 4, 5}), toks({6, 7})};
  const double sp = r.score(p.anchor, p.positive), sn = r.score(p.anchor, p.negative);
  Tape tape;
  const TrainingPair batch[] = {p};
  CHECK(r.batch_loss(tape, batch).scalar() == doctest::Approx(std::max(0.0, 1.0 - sp + sn)).epsilon(1e-12));

  // s+ = 0.2, s- = 0.5 gives 1.3
  Tape t2;
  const Var loss = ops::hinge(ops::sub(t2.constant(Tensor::vector({0.2})), t2.constant(Tensor::vector({0.5}))), 1.0);
  CHECK(loss.scalar() == doctest::Approx(1.3).epsilon(1e-12));
  Tape t3;
  CHECK(ops::hinge(t3.constant(Tensor::vector({1.5})), 1.0).scalar() == 0.0);

  Tape t4;
  CHECK_THROWS(r.batch_loss(t4, std::span<const TrainingPair>{}));
}

TEST_CASE("a small step raises the margin of an active pair") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    ConvKnrmRanker r(fd::random_tensor({12, 5}, rng), small_config(5, 4), 40 + trial);
    const TrainingPair p{toks({2, 3}), toks({2, 3, 4, 5}), toks({6, 7, 8})};
    const TrainingPair batch[] = {p};
    const double before = r.score(p.anchor, p.positive) - r.score(p.anchor, p.negative);
    REQUIRE(before < 1.0);
    r.train_step(batch, 1e-4);
    const double after = r.score(p.anchor, p.positive) - r.score(p.anchor, p.negative);
    CHECK(after > before);
  }
}

TEST_CASE("learns a separable marker task") {
  // Positives contain token 2 (which every anchor also carries); negatives never do.
  Rng rng(19);
  ConvKnrmRanker r(fd::random_tensor({20, 8}, rng), small_config(8, 6), 3);
  auto random_doc = [&](bool marker) {
    std::vector<int> t(4 + rng.below(4));
    for (auto& x : t) x = static_cast<int>(3 + rng.below(17));
    if (marker) t[rng.below(t.size())] = 2;
    return toks(t);
  };
  std::vector<double> losses;
  for (int step = 0; step < 200; ++step) {
    std::vector<TrainingPair> batch;
    for (int i = 0; i < 8; ++i) batch.push_back({toks({2, static_cast<int>(3 + rng.below(17))}), random_doc(true), random_doc(false)});
    losses.push_back(r.train_step(batch, 1e-2) / 8.0);
  }
  double tail = 0;
  for (std::size_t i = losses.size() - 20; i < losses.size(); ++i) tail += losses[i];
  INFO("first " << losses.front() << ", tail mean " << tail / 20);
  CHECK(tail / 20 < 0.05);
}

TEST_CASE("exact matches light up the exact kernel") {
  const std::size_t V = 10;
  ConvKnrmRanker r(one_hot(V), small_config(V, 6), 11);
  // make unigram filters injective on one-hot inputs so distinct tokens never collide
  for (std::size_t i = 0; i < V; ++i)
    for (std::size_t f = 0; f < 6; ++f) r.stack.filters[0].value.at(i, f) = (i % 6 == f) ? 1.0 + 0.1 * i : 0.05 * (i + f);
  const double floor_log = std::log(1e-10);
  const Tensor hit = r.features(toks({4}), toks({7, 4, 8}));
  const Tensor miss = r.features(toks({4}), toks({7, 5, 8}));
  CHECK(hit[0] >= 0.0);
  CHECK(miss[0] == doctest::Approx(floor_log));

  // the unigram-unigram block ignores document order
  const Tensor shuffled = r.features(toks({4, 9}), toks({8, 4, 7}));
  const Tensor base = r.features(toks({4, 9}), toks({7, 4, 8}));
  for (std::size_t k = 0; k < 21; ++k) CHECK(shuffled[k] == doctest::Approx(base[k]).epsilon(1e-12));
}

TEST_CASE("serial and parallel execution give identical scores and steps") {
  Rng rng(23);
  const Tensor emb = fd::random_tensor({15, 6}, rng);
  const TrainingPair p{toks({2, 3, 4}), toks({2, 5, 6, 7}), toks({8, 9, 10})};
  const TrainingPair batch[] = {p, {toks({11}), toks({11, 12}), toks({13, 14})}};
  auto run = [&](Exec mode) {
    kernels::set_exec_mode(mode);
    ConvKnrmRanker r(emb, small_config(6, 4), 9);
    r.train_step(batch, 1e-3);
    const double s = r.score(p.anchor, p.positive);
    kernels::set_exec_mode(Exec::parallel);
    return std::make_pair(s, r.weights.value);
  };
  const auto a = run(Exec::serial), b = run(Exec::parallel);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("save and load") {
  fixtures::TempDir dir("ranker");
  Rng rng(2);
  ConvKnrmRanker r(fd::random_tensor({9, 4}, rng), small_config(4, 3), 1);
  const TrainingPair batch[] = {{toks({2}), toks({2, 3}), toks({4, 5})}};
  r.train_step(batch, 1e-2);
  r.save(dir.path / "r.ckpt");
  ConvKnrmRanker other(fd::random_tensor({9, 4}, rng), small_config(4, 3), 99);
  other.load(dir.path / "r.ckpt");
  const TokenSeq q = toks({2, 6}), d = toks({3, 7, 8});
  CHECK(other.score(q, d) == r.score(q, d));
  ConvKnrmRanker wrong(fd::random_tensor({9, 5}, rng), small_config(5, 3), 1);
  CHECK_THROWS_AS(wrong.load(dir.path / "r.ckpt"), CheckpointError);
}
