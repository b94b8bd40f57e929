#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "anchorrank/autodiff.hpp"

namespace anchorrank {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update. Zeroes the gradient and advances the step
/// counter. Throws NumericError on a non-finite gradient.
void adam_step(ParamSlot& slot, double lr, const AdamConfig& cfg = {});

/// Clears moments and step counter, keeping the value.
void reset_optimizer(ParamSlot& slot);

// Parameter checkpoints: magic, format version, slot count, then for each
// slot its name, shape and raw little-endian doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, std::span<const ParamSlot* const> slots);
/// Loads values into `slots` by name; every slot must be present with a matching shape.
void load_checkpoint(const std::filesystem::path& path, std::span<ParamSlot* const> slots);

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace anchorrank
