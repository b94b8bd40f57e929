#pragma once

#include <string>
#include <vector>

#include "anchorrank/rng.hpp"
#include "anchorrank/trec.hpp"

namespace anchorrank {

/// Feature rows for one query's candidates.
struct QueryFeatures {
  std::string query_id;
  std::vector<std::string> doc_ids;
  std::vector<std::vector<double>> rows;
};

using FeatureTable = std::vector<QueryFeatures>;

struct FusionModel {
  std::vector<double> weights;  // over z-normalized features
  std::vector<double> mean;
  std::vector<double> stddev;
  double train_metric = 0.0;
  std::size_t cutoff = 20;

  double score(const std::vector<double>& row) const;
  Run rank(const FeatureTable& table) const;
};

struct CoordinateAscentConfig {
  std::size_t cutoff = 20;
  std::size_t restarts = 5;
  std::size_t max_sweeps = 25;
  std::vector<double> steps{0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
  /// Extra starting points (raw feature space) tried before the random restarts.
  std::vector<std::vector<double>> warm_starts;
};

struct AscentTrace {
  /// Training metric after each sweep, per start.
  std::vector<std::vector<double>> sweeps;
};

/// Maximizes mean NDCG@cutoff of a linear feature combination by cyclic
/// single-weight line search.
FusionModel coordinate_ascent(const FeatureTable& table, const RelevanceJudgments& qrels,
                              const CoordinateAscentConfig& cfg, Rng& rng, AscentTrace* trace = nullptr);

}  // namespace anchorrank
