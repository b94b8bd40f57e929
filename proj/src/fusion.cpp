#include "anchorrank/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "anchorrank/metrics.hpp"

namespace anchorrank {

double FusionModel::score(const std::vector<double>& row) const {
  double s = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * (row[j] - mean[j]) / stddev[j];
  return s;
}

Run FusionModel::rank(const FeatureTable& table) const {
  Run run;
  for (const auto& q : table) {
    RankedList list{q.query_id, {}};
    for (std::size_t i = 0; i < q.rows.size(); ++i) list.docs.push_back({q.doc_ids[i], score(q.rows[i])});
    list.sort();
    run.push_back(std::move(list));
  }
  return run;
}

namespace {

// One query in normalized feature space with its ideal DCG precomputed.
struct Prepared {
  std::vector<std::string> doc_ids;
  std::vector<std::vector<double>> columns;  // feature -> doc values
  std::vector<double> gains;
  double idcg = 0.0;
};

class Evaluator {
public:
  Evaluator(const FeatureTable& table, const RelevanceJudgments& qrels, const FusionModel& norm, std::size_t cutoff)
      : cutoff_(cutoff) {
    for (const auto& q : table) {
      if (!qrels.has_query(q.query_id)) continue;
      Prepared p;
      p.doc_ids = q.doc_ids;
      const std::size_t nf = norm.mean.size();
      p.columns.assign(nf, std::vector<double>(q.rows.size()));
      for (std::size_t i = 0; i < q.rows.size(); ++i)
        for (std::size_t j = 0; j < nf; ++j) p.columns[j][i] = (q.rows[i][j] - norm.mean[j]) / norm.stddev[j];
      std::vector<int> ideal;
      for (const auto& [doc, g] : qrels.for_query(q.query_id)) ideal.push_back(g);
      std::sort(ideal.begin(), ideal.end(), std::greater<>());
      for (std::size_t r = 0; r < std::min(cutoff, ideal.size()); ++r)
        p.idcg += (std::exp2(ideal[r]) - 1.0) / std::log2(static_cast<double>(r) + 2.0);
      for (const auto& d : q.doc_ids) p.gains.push_back(std::exp2(qrels.grade(q.query_id, d)) - 1.0);
      queries_.push_back(std::move(p));
    }
  }

  std::size_t num_queries() const { return queries_.size(); }

  std::vector<std::vector<double>> scores(const std::vector<double>& w) const {
    std::vector<std::vector<double>> out;
    for (const auto& q : queries_) {
      std::vector<double> s(q.doc_ids.size(), 0.0);
      for (std::size_t j = 0; j < w.size(); ++j)
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += w[j] * q.columns[j][i];
      out.push_back(std::move(s));
    }
    return out;
  }

  /// Applies the same update metric() evaluates, so accepted moves keep their score.
  void shift(std::vector<std::vector<double>>& base, std::size_t j, double delta) const {
    for (std::size_t qi = 0; qi < queries_.size(); ++qi)
      for (std::size_t i = 0; i < base[qi].size(); ++i) base[qi][i] += delta * queries_[qi].columns[j][i];
  }

  /// Mean NDCG with weight j shifted by delta from the state giving `base`.
  double metric(const std::vector<std::vector<double>>& base, std::size_t j, double delta) const {
    double total = 0.0;
    std::vector<std::size_t> order;
    std::vector<double> s;
    for (std::size_t qi = 0; qi < queries_.size(); ++qi) {
      const auto& q = queries_[qi];
      s = base[qi];
      if (delta != 0.0)
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += delta * q.columns[j][i];
      order.resize(s.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return s[a] != s[b] ? s[a] > s[b] : q.doc_ids[a] < q.doc_ids[b];
      });
      if (q.idcg <= 0.0) continue;
      double dcg = 0.0;
      for (std::size_t r = 0; r < std::min(cutoff_, order.size()); ++r)
        dcg += q.gains[order[r]] / std::log2(static_cast<double>(r) + 2.0);
      total += dcg / q.idcg;
    }
    return queries_.empty() ? 0.0 : total / static_cast<double>(queries_.size());
  }

private:
  std::vector<Prepared> queries_;
  std::size_t cutoff_;
};

}  // namespace

FusionModel coordinate_ascent(const FeatureTable& table, const RelevanceJudgments& qrels,
                              const CoordinateAscentConfig& cfg, Rng& rng, AscentTrace* trace) {
  std::size_t nf = 0;
  bool usable = false;
  for (const auto& q : table) {
    if (q.rows.size() != q.doc_ids.size()) throw std::invalid_argument("coordinate_ascent: ragged feature table");
    for (const auto& row : q.rows) {
      if (nf == 0) nf = row.size();
      if (row.size() != nf) throw std::invalid_argument("coordinate_ascent: inconsistent feature width");
      for (double v : row)
        if (!std::isfinite(v)) throw std::invalid_argument("coordinate_ascent: non-finite feature");
    }
    if (qrels.has_query(q.query_id) && q.doc_ids.size() >= 2) {
      std::size_t judged = 0;
      for (const auto& d : q.doc_ids) judged += qrels.for_query(q.query_id).contains(d) ? 1 : 0;
      usable = usable || judged >= 2;
    }
  }
  if (!usable || nf == 0)
    throw std::invalid_argument("coordinate_ascent: need a query with at least two judged candidates");

  FusionModel model;
  model.cutoff = cfg.cutoff;
  model.mean.assign(nf, 0.0);
  model.stddev.assign(nf, 0.0);
  std::size_t rows = 0;
  for (const auto& q : table)
    for (const auto& row : q.rows) {
      ++rows;
      for (std::size_t j = 0; j < nf; ++j) model.mean[j] += row[j];
    }
  for (double& m : model.mean) m /= static_cast<double>(rows);
  for (const auto& q : table)
    for (const auto& row : q.rows)
      for (std::size_t j = 0; j < nf; ++j) model.stddev[j] += (row[j] - model.mean[j]) * (row[j] - model.mean[j]);
  for (double& s : model.stddev) {
    s = std::sqrt(s / static_cast<double>(rows));
    if (s < 1e-12) s = 1.0;
  }

  const Evaluator eval(table, qrels, model, cfg.cutoff);

  std::vector<std::vector<double>> starts;
  for (const auto& raw : cfg.warm_starts) {
    if (raw.size() != nf) throw std::invalid_argument("coordinate_ascent: warm start width mismatch");
    std::vector<double> w(nf);
    for (std::size_t j = 0; j < nf; ++j) w[j] = raw[j] * model.stddev[j];
    starts.push_back(std::move(w));
  }
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    std::vector<double> w(nf);
    for (double& x : w) x = rng.uniform(-1.0, 1.0);
    starts.push_back(std::move(w));
  }
  if (starts.empty()) throw std::invalid_argument("coordinate_ascent: no starting points");

  double best_metric = -1.0;
  std::vector<double> best;
  for (auto w : starts) {
    auto base = eval.scores(w);
    double current = eval.metric(base, 0, 0.0);
    std::vector<double> history;
    for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      bool improved = false;
      for (std::size_t j = 0; j < nf; ++j) {
        double magnitude = std::abs(w[j]);
        if (magnitude < 1e-12) {
          double sum = 0.0;
          std::size_t cnt = 0;
          for (double x : w)
            if (std::abs(x) >= 1e-12) sum += std::abs(x), ++cnt;
          magnitude = cnt ? sum / static_cast<double>(cnt) : 1.0;
        }
        std::vector<double> deltas{-2.0 * w[j]};
        for (double s : cfg.steps) {
          deltas.push_back(s * magnitude);
          deltas.push_back(-s * magnitude);
        }
        double best_delta = 0.0, best_here = current;
        for (double d : deltas) {
          if (d == 0.0) continue;
          const double m = eval.metric(base, j, d);
          if (m > best_here) {
            best_here = m;
            best_delta = d;
          }
        }
        if (best_delta != 0.0) {
          w[j] += best_delta;
          eval.shift(base, j, best_delta);
          current = best_here;
          improved = true;
        }
      }
      history.push_back(current);
      if (!improved) break;
    }
    if (trace) trace->sweeps.push_back(history);
    if (current > best_metric) {
      best_metric = current;
      best = w;
    }
  }
  if (std::all_of(best.begin(), best.end(), [](double x) { return x == 0.0; })) best[0] = 1.0;
  model.weights = best;
  model.train_metric = best_metric;
  return model;
}

}  // namespace anchorrank
