#pragma once

// Comparison training modes. Both reuse the selection loop and consume the
// anchor stream in the same seeded order, so runs pair up seed by seed.

#include "anchorrank/trainer.hpp"

namespace anchorrank {

/// Every anchor pair is selected; the policy never exists.
TrainResult train_all_anchor(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg,
                             std::vector<std::size_t> only_folds = {});

/// Warm-up only, then a fixed filter: anchors with prob_select >= threshold
/// form the stream. An empty kept set is a TrainingError.
TrainResult train_discriminator_select(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg,
                                       double threshold = 0.5, std::vector<std::size_t> only_folds = {});

}  // namespace anchorrank
