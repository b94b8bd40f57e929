#include <algorithm>
#include <cmath>

#include "anchorrank/policy.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace anchorrank;

namespace {

TokenSeq toks(std::vector<int> ids) { return {std::move(ids), {}}; }

PolicyConfig small_config(std::size_t dim = 5, std::size_t filters = 3) {
  PolicyConfig cfg;
  cfg.dim = dim;
  cfg.state_filters = filters;
  cfg.interaction.filters = 4;
  return cfg;
}

TokenSeq random_seq(Rng& rng, std::size_t lo, std::size_t hi, int first, int last) {
  std::vector<int> t(lo + rng.below(hi - lo + 1));
  for (auto& x : t) x = first + static_cast<int>(rng.below(static_cast<std::size_t>(last - first + 1)));
  return toks(t);
}

oracle::Mat rows_of(const Tensor& emb, const std::vector<int>& t) {
  oracle::Mat m;
  for (int id : t) m.emplace_back(emb.row(id).begin(), emb.row(id).end());
  return m;
}

// Max-pooled CNN parts followed by scaled interaction features, from scalar oracles.
oracle::Vec oracle_state(const SelectionPolicy& p, const std::vector<int>& a, const std::vector<int>& d) {
  const auto& cfg = p.config();
  const auto ea = rows_of(p.embeddings.value, a), ed = rows_of(p.embeddings.value, d);
  oracle::Vec s;
  auto pooled = [&](const oracle::Mat& e, const std::vector<ParamSlot>& W, const std::vector<ParamSlot>& b) {
    for (std::size_t k = 0; k < cfg.windows.size(); ++k) {
      const auto g = oracle::conv_grams(e, oracle::to_mat(W[k].value), oracle::to_vec(b[k].value), cfg.windows[k]);
      for (std::size_t f = 0; f < cfg.state_filters; ++f) {
        double best = g[0][f];
        for (const auto& row : g) best = std::max(best, row[f]);
        s.push_back(best);
      }
    }
  };
  pooled(ea, p.anchor_filters, p.anchor_biases);
  pooled(ed, p.doc_filters, p.doc_biases);
  std::vector<oracle::Mat> ga, gd;
  for (std::size_t h = 1; h <= 3; ++h) {
    const auto W = oracle::to_mat(p.interaction.filters[h - 1].value);
    const auto b = oracle::to_vec(p.interaction.biases[h - 1].value);
    ga.push_back(oracle::conv_grams(ea, W, b, h));
    gd.push_back(oracle::conv_grams(ed, W, b, h));
  }
  const auto& kc = p.interaction.shape().kernels;
  for (const auto& x : ga)
    for (const auto& y : gd)
      for (double v : oracle::kernel_pool(oracle::cosine(x, y), kc.mu, kc.sigma)) s.push_back(v * cfg.feature_scale);
  return s;
}

double summed_log_prob(const SelectionPolicy& p, const EpisodeBuffer& ep) {
  double total = 0;
  for (const auto& step : ep.steps)
    for (std::size_t i = 0; i < step.decisions.size(); ++i) {
      const Tensor l = p.logits(p.encode_state(step.anchors[i], step.docs[i]));
      const double lse = std::max(l[0], l[1]) + std::log(std::exp(l[0] - std::max(l[0], l[1])) + std::exp(l[1] - std::max(l[0], l[1])));
      total += l[step.decisions[i].action] - lse;
    }
  return total;
}

}  // namespace

TEST_CASE("state layout") {
  Rng rng(1);
  const PolicyConfig cfg = small_config(5, 3);
  SelectionPolicy p(fd::random_tensor({12, 5}, rng), cfg, 4);
  CHECK(p.state_dim() == 2 * 3 * 3 + 189);
  CHECK(p.encode_state(toks({2, 3}), toks({4, 5, 6})).size() == p.state_dim());
  CHECK_THROWS(p.encode_state(toks({}), toks({4})));

  SelectionPolicy zero(Tensor({12, 5}), cfg, 4);
  const Tensor s = zero.encode_state(toks({2, 3}), toks({4, 5, 6}));
  for (std::size_t i = 0; i < 18; ++i) CHECK(s[i] == 0.0);  // relu(0 + 0)
}

TEST_CASE("state matches a scalar re-implementation") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    SelectionPolicy p(fd::random_tensor({15, 5}, rng), small_config(), 10 + trial);
    for (auto* b : {&p.anchor_biases, &p.doc_biases})
      for (auto& slot : *b) slot.value = fd::random_tensor({3}, rng, -0.2, 0.2);
    const TokenSeq a = random_seq(rng, 1, 4, 1, 14), d = random_seq(rng, 1, 8, 1, 14);
    const Tensor s = p.encode_state(a, d);
    const auto want = oracle_state(p, a.tokens, d.tokens);
    REQUIRE(want.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == doctest::Approx(want[i]).epsilon(1e-9));
    Tape tape;
    const Var taped = p.encode_state(tape, a, d);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(taped.value()[i] == doctest::Approx(s[i]).epsilon(1e-12));
  }
}

TEST_CASE("act") {
  Rng rng(3);
  SelectionPolicy p(fd::random_tensor({10, 5}, rng), small_config(), 1);
  const Tensor state = p.encode_state(toks({2, 3}), toks({4, 5}));

  // the head starts at zero: equal logits
  ActionDecision d = p.act(state, ActMode::argmax, nullptr);
  CHECK(d.prob_select == 0.5);
  CHECK(d.action == 1);
  CHECK(d.log_prob == doctest::Approx(std::log(0.5)));

  p.action_b.value = Tensor::vector({0, 10});
  d = p.act(state, ActMode::argmax, nullptr);
  CHECK(d.prob_select == doctest::Approx(0.9999546).epsilon(1e-6));
  CHECK(d.action == 1);

  // only logit differences matter
  const double base = d.prob_select;
  p.action_b.value = Tensor::vector({500, 510});
  CHECK(p.act(state, ActMode::argmax, nullptr).prob_select == doctest::Approx(base).epsilon(1e-12));

  p.action_b.value = Tensor::vector({0, 0.3});
  Rng r1(5), r2(5);
  for (int i = 0; i < 20; ++i) CHECK(p.act(state, ActMode::sample, &r1).action == p.act(state, ActMode::sample, &r2).action);
  CHECK_THROWS(p.act(state, ActMode::sample, nullptr));

  // sampling frequency tracks the probability
  const double prob = p.act(state, ActMode::argmax, nullptr).prob_select;
  Rng r3(8);
  int ones = 0;
  for (int i = 0; i < 4000; ++i) ones += p.act(state, ActMode::sample, &r3).action;
  CHECK(std::abs(ones / 4000.0 - prob) < 0.03);

  p.action_b.value = Tensor::vector({0, INFINITY});
  CHECK_THROWS_AS(p.act(state, ActMode::argmax, nullptr), NumericError);
}

TEST_CASE("select_batch") {
  Rng rng(9);
  SelectionPolicy p(fd::random_tensor({10, 5}, rng), small_config(), 1);
  std::vector<TokenSeq> anchors, docs;
  for (int i = 0; i < 6; ++i) {
    anchors.push_back(random_seq(rng, 1, 3, 1, 9));
    docs.push_back(random_seq(rng, 2, 6, 1, 9));
  }
  std::vector<PairView> batch;
  for (std::size_t i = 0; i < 6; ++i) batch.push_back({&anchors[i], &docs[i], 100 + i});

  p.action_b.value = Tensor::vector({-1e3, 1e3});
  Rng r(1);
  Selection all = p.select_batch(batch, ActMode::sample, &r);
  CHECK(all.selected == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK(all.decisions.size() == 6);

  p.action_b.value = Tensor::vector({1e3, -1e3});
  CHECK(p.select_batch(batch, ActMode::sample, &r).selected.empty());

  p.action_b.value = Tensor::vector({0, 0});
  p.action_w.value = fd::random_tensor({2, p.state_dim()}, rng);
  const Selection some = p.select_batch(batch, ActMode::sample, &r);
  std::size_t taken = 0;
  for (const auto& d : some.decisions) taken += d.action;
  CHECK(some.selected.size() == taken);
  CHECK(std::is_sorted(some.selected.begin(), some.selected.end()));

  CHECK_THROWS(p.select_batch({}, ActMode::argmax, nullptr));
}

TEST_CASE("warm-up classifier") {
  Rng rng(21);
  std::vector<TokenSeq> a_pos, a_neg, docs;
  for (int i = 0; i < 120; ++i) {
    a_pos.push_back(random_seq(rng, 2, 4, 2, 9));
    a_neg.push_back(random_seq(rng, 2, 4, 10, 17));
    docs.push_back(random_seq(rng, 5, 8, 2, 17));
  }
  auto views = [&](const std::vector<TokenSeq>& a) {
    std::vector<PairView> v;
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back({&a[i], &docs[i], i});
    return v;
  };
  SUBCASE("separable classes") {
    SelectionPolicy p(fd::random_tensor({18, 6}, rng), small_config(6, 4), 2);
    const WarmupReport r = p.warmup(views(a_pos), views(a_neg), 8, 1e-2, 5);
    CHECK(r.train_size + r.heldout_size == 240);
    CHECK(r.heldout_size == 48);
    CHECK(r.accuracy >= 0.9);
    REQUIRE(r.epoch_losses.size() == 8);
    CHECK(r.epoch_losses.back() < r.epoch_losses.front());
  }
  SUBCASE("identical classes stay near chance") {
    std::vector<TokenSeq> b_pos, b_neg;
    for (int i = 0; i < 120; ++i) {
      b_pos.push_back(random_seq(rng, 2, 4, 2, 17));
      b_neg.push_back(random_seq(rng, 2, 4, 2, 17));
    }
    SelectionPolicy p(fd::random_tensor({18, 6}, rng), small_config(6, 4), 2);
    const WarmupReport r = p.warmup(views(b_pos), views(b_neg), 4, 1e-2, 5);
    CHECK(r.accuracy > 0.25);
    CHECK(r.accuracy < 0.75);
  }
  SUBCASE("a missing class is an error") {
    SelectionPolicy p(fd::random_tensor({18, 6}, rng), small_config(6, 4), 2);
    CHECK_THROWS(p.warmup(views(a_pos), {}, 1, 1e-2, 5));
  }
}

TEST_CASE("discounted returns") {
  const double r1[] = {0.1, -0.05};
  const Returns a = compute_returns(r1, 0.99);
  CHECK(a.per_step[0] == doctest::Approx(0.0505).epsilon(1e-12));
  CHECK(a.per_step[1] == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(a.mean == doctest::Approx(0.00025).epsilon(1e-9));

  const double zeros[] = {0, 0, 0};
  const Returns z = compute_returns(zeros, 0.5);
  CHECK(z.mean == 0.0);
  for (double v : z.per_step) CHECK(v == 0.0);

  const double ones[] = {1, 1, 1};
  const Returns u = compute_returns(ones, 1.0);
  CHECK(u.per_step == std::vector<double>{3, 2, 1});
  CHECK(u.mean == 2.0);

  CHECK_THROWS(compute_returns({}, 0.9));
  CHECK_THROWS(compute_returns(ones, 0.0));
  CHECK_THROWS(compute_returns(ones, 1.5));
}

namespace {

EpisodeBuffer random_episode(SelectionPolicy& p, Rng& rng, std::vector<double> rewards) {
  EpisodeBuffer ep;
  for (double reward : rewards) {
    EpisodeStep step;
    const std::size_t n = 1 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) {
      step.anchors.push_back(random_seq(rng, 1, 3, 1, 11));
      step.docs.push_back(random_seq(rng, 2, 6, 1, 11));
      step.pair_ids.push_back(i);
      step.decisions.push_back(p.decide(step.anchors.back(), step.docs.back(), ActMode::sample, &rng));
    }
    step.reward = reward;
    ep.steps.push_back(std::move(step));
  }
  ep.finalize();
  return ep;
}

}  // namespace

TEST_CASE("policy update") {
  Rng rng(31);
  SUBCASE("zero mean return leaves every parameter unchanged") {
    SelectionPolicy p(fd::random_tensor({12, 5}, rng), small_config(), 3);
    p.action_w.value = fd::random_tensor({2, p.state_dim()}, rng, -0.5, 0.5);
    EpisodeBuffer ep = random_episode(p, rng, {0.1, -0.2});
    ep.mean_return = 0.0;
    std::vector<Tensor> before;
    for (const ParamSlot* s : p.slots()) before.push_back(s->value);
    p.update(ep, 1e-2);
    std::size_t i = 0;
    for (const ParamSlot* s : p.slots()) CHECK(s->value == before[i++]);
  }
  SUBCASE("positive return makes the taken action more likely") {
    SelectionPolicy p(fd::random_tensor({12, 5}, rng), small_config(), 3);
    EpisodeBuffer ep = random_episode(p, rng, {0.5});
    const auto& step = ep.steps[0];
    const double before = p.decide(step.anchors[0], step.docs[0], ActMode::argmax, nullptr).prob_select;
    p.update(ep, 1e-3);
    const double after = p.decide(step.anchors[0], step.docs[0], ActMode::argmax, nullptr).prob_select;
    if (step.decisions.size() == 1) {
      if (step.decisions[0].action == 1) CHECK(after > before);
      else CHECK(after < before);
    }
    CHECK(after != before);
  }
  SUBCASE("small ascent steps do not lower the log-likelihood of positive episodes") {
    for (int trial = 0; trial < 20; ++trial) {
      SelectionPolicy p(fd::random_tensor({12, 5}, rng), small_config(), 50 + trial);
      p.action_w.value = fd::random_tensor({2, p.state_dim()}, rng, -0.5, 0.5);
      const EpisodeBuffer ep = random_episode(p, rng, {rng.uniform(0.01, 1), rng.uniform(-0.1, 1)});
      REQUIRE(ep.mean_return > 0);
      const double before = summed_log_prob(p, ep);
      p.update(ep, 1e-4);
      CHECK(summed_log_prob(p, ep) >= before);
    }
  }
  SUBCASE("returns must be computed first") {
    SelectionPolicy p(fd::random_tensor({12, 5}, rng), small_config(), 3);
    EpisodeBuffer ep = random_episode(p, rng, {0.3});
    ep.returns.clear();
    CHECK_THROWS(p.update(ep, 1e-3));
  }
}

TEST_CASE("policy save and load") {
  fixtures::TempDir dir("policy");
  Rng rng(2);
  SelectionPolicy p(fd::random_tensor({10, 5}, rng), small_config(), 1);
  p.action_w.value = fd::random_tensor({2, p.state_dim()}, rng);
  p.save(dir.path / "p.ckpt");
  SelectionPolicy q(fd::random_tensor({10, 5}, rng), small_config(), 8);
  q.load(dir.path / "p.ckpt");
  const TokenSeq a = toks({2, 3}), d = toks({4, 5, 6});
  CHECK(q.decide(a, d, ActMode::argmax, nullptr).prob_select == p.decide(a, d, ActMode::argmax, nullptr).prob_select);
}
