#include "anchorrank/knrm.hpp"

#include <cmath>
#include <stdexcept>

#include "anchorrank/text.hpp"

namespace anchorrank {

Tensor xavier(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

std::vector<std::size_t> live_windows(std::span<const int> tokens, std::size_t h) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t w = 0; w < h && i + w < tokens.size(); ++w) {
      if (tokens[i + w] != Vocabulary::kPad) {
        live.push_back(i);
        break;
      }
    }
  }
  return live;
}

KnrmStack::KnrmStack(const std::string& prefix, const KnrmShape& shape, Rng& rng) : shape_(shape) {
  shape_.kernels.validate();
  for (std::size_t h = 1; h <= shape_.max_gram; ++h) {
    filters.emplace_back(prefix + ".conv" + std::to_string(h) + ".w", xavier(h * shape_.dim, shape_.filters, rng));
    biases.emplace_back(prefix + ".conv" + std::to_string(h) + ".b", Tensor({shape_.filters}));
  }
}

namespace {

void require_text(std::span<const int> tokens, const char* which) {
  if (tokens.empty() || live_windows(tokens, 1).empty())
    throw std::invalid_argument(std::string("features: empty ") + which);
}

Tensor gather(const Tensor& emb, std::span<const int> tokens) {
  Tensor out({tokens.size(), emb.cols()});
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    require_shape(tokens[r] >= 0 && static_cast<std::size_t>(tokens[r]) < emb.rows(), "token id out of range");
    auto src = emb.row(static_cast<std::size_t>(tokens[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Tensor keep_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  if (rows.size() == x.rows()) return x;
  Tensor out({rows.size(), x.cols()});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = x.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

Var KnrmStack::features(Tape& tape, Var emb, std::span<const int> q, std::span<const int> d) {
  require_text(q, "query");
  require_text(d, "document");
  const Var eq = ops::gather_rows(emb, q);
  const Var ed = ops::gather_rows(emb, d);
  std::vector<Var> gq, gd;
  for (std::size_t h = 1; h <= shape_.max_gram; ++h) {
    const Var w = tape.param(filters[h - 1]);
    const Var b = tape.param(biases[h - 1]);
    Var a = ops::conv1d_grams(eq, w, b, h);
    Var c = ops::conv1d_grams(ed, w, b, h);
    if (auto live = live_windows(q, h); live.size() != q.size()) a = ops::select_rows(a, live);
    if (auto live = live_windows(d, h); live.size() != d.size()) c = ops::select_rows(c, live);
    gq.push_back(a);
    gd.push_back(c);
  }
  std::vector<Var> blocks;
  for (const Var& a : gq)
    for (const Var& c : gd) blocks.push_back(ops::kernel_pool(ops::cosine_matrix(a, c), shape_.kernels));
  return ops::concat(blocks);
}

GramSet KnrmStack::encode(const Tensor& emb, std::span<const int> tokens) const {
  require_text(tokens, "text");
  const Tensor e = gather(emb, tokens);
  GramSet out;
  for (std::size_t h = 1; h <= shape_.max_gram; ++h) {
    Tensor g = kernels::conv1d_grams(e, filters[h - 1].value, biases[h - 1].value, h);
    out.grams.push_back(keep_rows(g, live_windows(tokens, h)));
  }
  return out;
}

Tensor KnrmStack::features(const GramSet& q, const GramSet& d) const {
  const std::size_t K = shape_.kernels.size();
  Tensor phi({feature_dim()});
  std::size_t offset = 0;
  for (const Tensor& a : q.grams)
    for (const Tensor& c : d.grams) {
      const Tensor block = kernels::kernel_pool(kernels::cosine_matrix(a, c), shape_.kernels);
      for (std::size_t k = 0; k < K; ++k) phi[offset + k] = block[k];
      offset += K;
    }
  return phi;
}

Tensor KnrmStack::features(const Tensor& emb, std::span<const int> q, std::span<const int> d) const {
  return features(encode(emb, q), encode(emb, d));
}

std::vector<ParamSlot*> KnrmStack::slots() {
  std::vector<ParamSlot*> out;
  for (std::size_t h = 0; h < filters.size(); ++h) {
    out.push_back(&filters[h]);
    out.push_back(&biases[h]);
  }
  return out;
}

std::vector<const ParamSlot*> KnrmStack::slots() const {
  std::vector<const ParamSlot*> out;
  for (std::size_t h = 0; h < filters.size(); ++h) {
    out.push_back(&filters[h]);
    out.push_back(&biases[h]);
  }
  return out;
}

}  // namespace anchorrank
