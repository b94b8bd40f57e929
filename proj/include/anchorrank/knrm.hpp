#pragma once

// Convolutional kernel-pooling feature stack: n-gram CNNs over a shared
// embedding table, cross-window cosine matrices, Gaussian kernel pooling.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "anchorrank/autodiff.hpp"
#include "anchorrank/kernels.hpp"
#include "anchorrank/rng.hpp"

namespace anchorrank {

struct KnrmShape {
  std::size_t dim = 300;
  std::size_t filters = 128;
  std::size_t max_gram = 3;
  KernelConfig kernels = KernelConfig::standard();

  std::size_t feature_dim() const { return max_gram * max_gram * kernels.size(); }
};

/// Gram embeddings of one text for every window size, PAD-only rows removed.
struct GramSet {
  std::vector<Tensor> grams;
};

class KnrmStack {
public:
  KnrmStack() = default;
  KnrmStack(const std::string& prefix, const KnrmShape& shape, Rng& rng);

  const KnrmShape& shape() const { return shape_; }
  std::size_t feature_dim() const { return shape_.feature_dim(); }

  /// Feature vector on a tape; `emb` is the embedding table node.
  Var features(Tape& tape, Var emb, std::span<const int> q, std::span<const int> d);

  // Tape-free path with identical arithmetic, used for evaluation.
  GramSet encode(const Tensor& emb, std::span<const int> tokens) const;
  Tensor features(const GramSet& q, const GramSet& d) const;
  Tensor features(const Tensor& emb, std::span<const int> q, std::span<const int> d) const;

  std::vector<ParamSlot*> slots();
  std::vector<const ParamSlot*> slots() const;

  // Exposed for tests.
  std::vector<ParamSlot> filters;
  std::vector<ParamSlot> biases;

private:
  KnrmShape shape_;
};

/// Positions of windows of width `h` that contain a non-PAD token.
std::vector<std::size_t> live_windows(std::span<const int> tokens, std::size_t h);

/// Xavier-uniform initialisation.
Tensor xavier(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace anchorrank
