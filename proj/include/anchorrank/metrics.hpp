#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "anchorrank/rng.hpp"
#include "anchorrank/trec.hpp"

namespace anchorrank {

/// NDCG@k with gain 2^g - 1 and log2(rank + 1) discount. The ideal ordering
/// uses every judged document of the query; a query with no positive grade
/// scores 0. Ties in score are broken by ascending doc_id. Throws
/// std::out_of_range if the query has no judgments.
double ndcg_at_k(const RankedList& list, const RelevanceJudgments& qrels, std::size_t k);

/// Expected reciprocal rank at k with stop probability (2^g - 1) / 2^max_grade.
double err_at_k(const RankedList& list, const RelevanceJudgments& qrels, std::size_t k, int max_grade);

struct MetricSummary {
  std::vector<std::string> query_ids;
  std::vector<double> per_query;
  double mean = 0.0;
};

MetricSummary mean_ndcg(const Run& run, const RelevanceJudgments& qrels, std::size_t k);
MetricSummary mean_err(const Run& run, const RelevanceJudgments& qrels, std::size_t k, int max_grade);

/// Two-sided paired sign-flip randomization test on mean(A - B).
double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t resamples, Rng& rng);

/// Seeded shuffle then round-robin; returns fold -> query ids.
std::vector<std::vector<std::string>> kfold_split(const std::vector<std::string>& query_ids, std::size_t folds,
                                                  std::uint64_t seed);

}  // namespace anchorrank
