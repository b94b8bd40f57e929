#include "anchorrank/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace anchorrank {

void KernelConfig::validate() const {
  require_shape(mu.size() == sigma.size() && !mu.empty(), "kernel config: mu and sigma must be non-empty and equal length");
  std::size_t exact = 0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    require_shape(sigma[k] > 0.0, "kernel config: widths must be positive");
    if (mu[k] == 1.0) ++exact;
  }
  require_shape(exact == 1, "kernel config: exactly one exact-match kernel (mu = 1) required");
}

KernelConfig KernelConfig::standard(std::size_t soft) {
  KernelConfig cfg;
  cfg.mu.push_back(1.0);
  cfg.sigma.push_back(1e-3);
  const double step = 2.0 / static_cast<double>(soft);
  for (std::size_t k = 0; k < soft; ++k) {
    cfg.mu.push_back(-1.0 + step / 2.0 + step * static_cast<double>(k));
    cfg.sigma.push_back(0.1);
  }
  return cfg;
}

namespace kernels {

namespace {
std::atomic<Exec> g_mode{Exec::parallel};
}

Exec exec_mode() { return g_mode.load(); }
void set_exec_mode(Exec mode) { g_mode.store(mode); }

#define ANCHORRANK_DISPATCH(call) \
  return exec_mode() == Exec::serial ? ref::call : par::call

Tensor conv1d_grams(const Tensor& E, const Tensor& W, const Tensor& bias, std::size_t h) {
  ANCHORRANK_DISPATCH(conv1d_grams(E, W, bias, h));
}
void conv1d_grams_backward(const Tensor& E, const Tensor& W, std::size_t h, const Tensor& out,
                           const Tensor& d_out, Tensor* d_E, Tensor* d_W, Tensor* d_bias) {
  ANCHORRANK_DISPATCH(conv1d_grams_backward(E, W, h, out, d_out, d_E, d_W, d_bias));
}
Tensor cosine_matrix(const Tensor& A, const Tensor& B) { ANCHORRANK_DISPATCH(cosine_matrix(A, B)); }
void cosine_matrix_backward(const Tensor& A, const Tensor& B, const Tensor& M, const Tensor& d_M,
                            Tensor* d_A, Tensor* d_B) {
  ANCHORRANK_DISPATCH(cosine_matrix_backward(A, B, M, d_M, d_A, d_B));
}
Tensor kernel_pool(const Tensor& M, const KernelConfig& cfg) { ANCHORRANK_DISPATCH(kernel_pool(M, cfg)); }
void kernel_pool_backward(const Tensor& M, const KernelConfig& cfg, const Tensor& d_phi, Tensor* d_M) {
  ANCHORRANK_DISPATCH(kernel_pool_backward(M, cfg, d_phi, d_M));
}
Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act) {
  ANCHORRANK_DISPATCH(dense(x, W, b, act));
}
void dense_backward(const Tensor& x, const Tensor& W, const Tensor& y, Activation act,
                    const Tensor& d_y, Tensor* d_x, Tensor* d_W, Tensor* d_b) {
  ANCHORRANK_DISPATCH(dense_backward(x, W, y, act, d_y, d_x, d_W, d_b));
}

#undef ANCHORRANK_DISPATCH

}  // namespace kernels

int configured_threads() {
  const char* env = std::getenv("RANKER_THREADS");
  if (!env || !*env) return 1;
  try {
    const int n = std::stoi(env);
    return n >= 1 ? n : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

void apply_thread_config() {
#ifdef _OPENMP
  omp_set_num_threads(configured_threads());
#endif
}

}  // namespace anchorrank
