#include <cmath>

#include "anchorrank/fusion.hpp"
#include "anchorrank/metrics.hpp"
#include "doctest.h"

using namespace anchorrank;

namespace {

// Feature 0 is the grade plus `noise` jitter; feature 1 is pure noise.
struct Toy {
  FeatureTable table;
  RelevanceJudgments qrels;
};

Toy make_toy(Rng& rng, std::size_t queries, double noise, bool flip_first = false) {
  Toy t;
  for (std::size_t q = 0; q < queries; ++q) {
    QueryFeatures f{"q" + std::to_string(q), {}, {}};
    for (int d = 0; d < 12; ++d) {
      const int g = static_cast<int>(rng.below(4));
      const std::string id = "d" + std::to_string(d);
      f.doc_ids.push_back(id);
      const double signal = (flip_first ? -g : g) + noise * rng.uniform(-1, 1);
      f.rows.push_back({signal, rng.uniform(-3, 3)});
      t.qrels.set(f.query_id, id, g);
    }
    t.table.push_back(std::move(f));
  }
  return t;
}

}  // namespace

TEST_CASE("a perfect feature gets positive weight and full NDCG") {
  Rng rng(1);
  Toy t = make_toy(rng, 10, 0.01);
  CoordinateAscentConfig cfg;
  cfg.cutoff = 10;
  const FusionModel m = coordinate_ascent(t.table, t.qrels, cfg, rng);
  CHECK(m.weights[0] > 0.0);
  CHECK(m.train_metric == doctest::Approx(1.0));
  CHECK(mean_ndcg(m.rank(t.table), t.qrels, 10).mean == doctest::Approx(m.train_metric).epsilon(1e-12));
}

TEST_CASE("an inverted feature gets negative weight") {
  Rng rng(2);
  Toy t = make_toy(rng, 10, 0.01, true);
  CoordinateAscentConfig cfg;
  cfg.cutoff = 10;
  const FusionModel m = coordinate_ascent(t.table, t.qrels, cfg, rng);
  CHECK(m.weights[0] < 0.0);
  CHECK(m.train_metric == doctest::Approx(1.0));
}

TEST_CASE("sweeps never lower the training metric") {
  Rng rng(3);
  Toy t = make_toy(rng, 15, 2.0);
  CoordinateAscentConfig cfg;
  cfg.cutoff = 5;
  AscentTrace trace;
  const FusionModel m = coordinate_ascent(t.table, t.qrels, cfg, rng, &trace);
  REQUIRE(trace.sweeps.size() == cfg.restarts);
  double best = 0;
  for (const auto& h : trace.sweeps) {
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] >= h[i - 1]);
    if (!h.empty()) best = std::max(best, h.back());
  }
  CHECK(m.train_metric == best);
}

TEST_CASE("a warm start is never beaten by a worse result") {
  Rng rng(4);
  Toy t = make_toy(rng, 15, 1.5);
  // metric of feature 0 alone
  Run alone;
  for (const auto& q : t.table) {
    RankedList l{q.query_id, {}};
    for (std::size_t i = 0; i < q.rows.size(); ++i) l.docs.push_back({q.doc_ids[i], q.rows[i][0]});
    l.sort();
    alone.push_back(l);
  }
  const double base = mean_ndcg(alone, t.qrels, 10).mean;
  CoordinateAscentConfig cfg;
  cfg.cutoff = 10;
  cfg.restarts = 0;
  cfg.warm_starts = {{1.0, 0.0}};
  const FusionModel m = coordinate_ascent(t.table, t.qrels, cfg, rng);
  CHECK(m.train_metric >= base);
  CHECK(mean_ndcg(m.rank(t.table), t.qrels, 10).mean == doctest::Approx(m.train_metric).epsilon(1e-12));

  cfg.warm_starts = {{1.0}};
  CHECK_THROWS(coordinate_ascent(t.table, t.qrels, cfg, rng));
}

TEST_CASE("adding a noise feature does not hurt") {
  Rng rng(5);
  Toy t = make_toy(rng, 15, 1.0);
  FeatureTable one = t.table;
  for (auto& q : one)
    for (auto& row : q.rows) row.resize(1);
  CoordinateAscentConfig cfg;
  cfg.cutoff = 10;
  cfg.restarts = 0;
  Rng a(9), b(9);
  cfg.warm_starts = {{1.0}};
  const double single = coordinate_ascent(one, t.qrels, cfg, a).train_metric;
  cfg.warm_starts = {{1.0, 0.0}};
  CHECK(coordinate_ascent(t.table, t.qrels, cfg, b).train_metric >= single);
}

TEST_CASE("degenerate inputs") {
  Rng rng(6);
  CoordinateAscentConfig cfg;
  RelevanceJudgments none;
  FeatureTable table{{"q", {"a", "b"}, {{1.0}, {2.0}}}};
  CHECK_THROWS(coordinate_ascent(table, none, cfg, rng));
  CHECK_THROWS(coordinate_ascent({}, none, cfg, rng));

  RelevanceJudgments q;
  q.set("q", "a", 1);
  q.set("q", "b", 0);
  FeatureTable ragged{{"q", {"a", "b"}, {{1.0}}}};
  CHECK_THROWS(coordinate_ascent(ragged, q, cfg, rng));
  FeatureTable uneven{{"q", {"a", "b"}, {{1.0}, {2.0, 3.0}}}};
  CHECK_THROWS(coordinate_ascent(uneven, q, cfg, rng));
  FeatureTable nan{{"q", {"a", "b"}, {{1.0}, {NAN}}}};
  CHECK_THROWS(coordinate_ascent(nan, q, cfg, rng));

  // a constant feature is harmless
  FeatureTable flat{{"q", {"a", "b"}, {{1.0}, {1.0}}}};
  const FusionModel m = coordinate_ascent(flat, q, cfg, rng);
  CHECK(std::isfinite(m.train_metric));
}
