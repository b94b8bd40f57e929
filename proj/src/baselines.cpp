#include "anchorrank/baselines.hpp"

namespace anchorrank {

TrainResult train_all_anchor(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg,
                             std::vector<std::size_t> only_folds) {
  TrainOptions opt;
  opt.mode = TrainMode::all_anchor;
  opt.only_folds = std::move(only_folds);
  return full_train(ds, model, cfg, opt);
}

TrainResult train_discriminator_select(const Dataset& ds, const ModelConfig& model, const TrainConfig& cfg,
                                       double threshold, std::vector<std::size_t> only_folds) {
  TrainOptions opt;
  opt.mode = TrainMode::discriminator;
  opt.threshold = threshold;
  opt.only_folds = std::move(only_folds);
  return full_train(ds, model, cfg, opt);
}

}  // namespace anchorrank
