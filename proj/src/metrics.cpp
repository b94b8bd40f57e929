#include "anchorrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace anchorrank {

namespace {

std::vector<int> ranked_grades(const RankedList& list, const RelevanceJudgments& qrels) {
  const auto& judged = qrels.for_query(list.query_id);
  RankedList sorted = list;
  sorted.sort();
  std::vector<int> grades;
  grades.reserve(sorted.docs.size());
  for (std::size_t r = 0; r < sorted.docs.size(); ++r) {
    if (r > 0 && sorted.docs[r].doc_id == sorted.docs[r - 1].doc_id)
      throw std::invalid_argument("ranked list for '" + list.query_id + "' repeats '" + sorted.docs[r].doc_id + "'");
    auto it = judged.find(sorted.docs[r].doc_id);
    grades.push_back(it == judged.end() ? 0 : it->second);
  }
  return grades;
}

double dcg(const std::vector<int>& grades, std::size_t k) {
  double total = 0.0;
  const std::size_t n = std::min(k, grades.size());
  for (std::size_t r = 0; r < n; ++r)
    total += (std::exp2(static_cast<double>(grades[r])) - 1.0) / std::log2(static_cast<double>(r) + 2.0);
  return total;
}

}  // namespace

double ndcg_at_k(const RankedList& list, const RelevanceJudgments& qrels, std::size_t k) {
  if (k == 0) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  const auto grades = ranked_grades(list, qrels);
  std::vector<int> ideal;
  for (const auto& [doc, g] : qrels.for_query(list.query_id)) ideal.push_back(g);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg(ideal, k);
  if (idcg <= 0.0) return 0.0;
  return dcg(grades, k) / idcg;
}

double err_at_k(const RankedList& list, const RelevanceJudgments& qrels, std::size_t k, int max_grade) {
  if (k == 0) throw std::invalid_argument("err_at_k: k must be >= 1");
  const auto grades = ranked_grades(list, qrels);
  const double denom = std::exp2(static_cast<double>(max_grade));
  double err = 0.0, keep_going = 1.0;
  const std::size_t n = std::min(k, grades.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (grades[r] > max_grade)
      throw std::invalid_argument("err_at_k: grade " + std::to_string(grades[r]) + " exceeds max_grade");
    const double stop = (std::exp2(static_cast<double>(grades[r])) - 1.0) / denom;
    err += keep_going * stop / static_cast<double>(r + 1);
    keep_going *= 1.0 - stop;
  }
  return err;
}

namespace {
MetricSummary summarize(const Run& run, const std::function<double(const RankedList&)>& metric) {
  MetricSummary s;
  double total = 0.0;
  for (const auto& list : run) {
    s.query_ids.push_back(list.query_id);
    s.per_query.push_back(metric(list));
    total += s.per_query.back();
  }
  s.mean = run.empty() ? 0.0 : total / static_cast<double>(run.size());
  return s;
}
}  // namespace

MetricSummary mean_ndcg(const Run& run, const RelevanceJudgments& qrels, std::size_t k) {
  return summarize(run, [&](const RankedList& l) { return ndcg_at_k(l, qrels, k); });
}

MetricSummary mean_err(const Run& run, const RelevanceJudgments& qrels, std::size_t k, int max_grade) {
  return summarize(run, [&](const RankedList& l) { return err_at_k(l, qrels, k, max_grade); });
}

double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t resamples, Rng& rng) {
  if (a.size() != b.size()) throw std::invalid_argument("permutation_test: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("permutation_test: need at least two paired values");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = a[i] - b[i];
    observed += diff[i];
  }
  observed = std::abs(observed / static_cast<double>(n));
  // Guards equality against summation-order noise.
  const double slack = 1e-12 * (1.0 + observed);
  std::size_t extreme = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += rng.coin() ? diff[i] : -diff[i];
    if (std::abs(s / static_cast<double>(n)) >= observed - slack) ++extreme;
  }
  return static_cast<double>(1 + extreme) / static_cast<double>(1 + resamples);
}

std::vector<std::vector<std::string>> kfold_split(const std::vector<std::string>& query_ids, std::size_t folds,
                                                  std::uint64_t seed) {
  if (folds == 0) throw std::invalid_argument("kfold_split: folds must be >= 1");
  if (query_ids.size() < folds)
    throw std::invalid_argument("kfold_split: " + std::to_string(query_ids.size()) + " queries for " +
                                std::to_string(folds) + " folds");
  std::vector<std::string> order = query_ids;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::string>> out(folds);
  for (std::size_t i = 0; i < order.size(); ++i) out[i % folds].push_back(order[i]);
  return out;
}

}  // namespace anchorrank
