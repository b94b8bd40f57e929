#pragma once

// Forward and adjoint kernels for the ranking network.
//
// Every kernel exists twice: `ref` is the plain serial loop nest used as the
// reference in tests, `par` partitions output elements across OpenMP threads.
// Each output element is accumulated in the same order by both, so results do
// not depend on the thread count.

#include <cstddef>
#include <vector>

#include "anchorrank/tensor.hpp"

namespace anchorrank {

/// Gaussian kernel means and widths for soft-TF pooling.
struct KernelConfig {
  std::vector<double> mu;
  std::vector<double> sigma;

  std::size_t size() const { return mu.size(); }
  void validate() const;

  /// One exact-match kernel (mu=1, sigma=1e-3) followed by `soft` kernels
  /// evenly spaced on (-1, 1) with width 0.1.
  static KernelConfig standard(std::size_t soft = 20);
};

/// Lower clamp applied to each kernel's row sum before the log.
inline constexpr double kPoolFloor = 1e-10;
/// Cosine convention: a row with norm below this yields similarity 0.
inline constexpr double kNormFloor = 1e-12;

enum class Activation { none, tanh, relu };

enum class Exec { serial, parallel };

namespace kernels {

namespace ref {

// out[i] = relu(concat(E[i..i+h-1]) . W + bias), rows past the end of E are zero.
Tensor conv1d_grams(const Tensor& E, const Tensor& W, const Tensor& bias, std::size_t h);
void conv1d_grams_backward(const Tensor& E, const Tensor& W, std::size_t h, const Tensor& out,
                           const Tensor& d_out, Tensor* d_E, Tensor* d_W, Tensor* d_bias);

Tensor cosine_matrix(const Tensor& A, const Tensor& B);
void cosine_matrix_backward(const Tensor& A, const Tensor& B, const Tensor& M, const Tensor& d_M,
                            Tensor* d_A, Tensor* d_B);

Tensor kernel_pool(const Tensor& M, const KernelConfig& cfg);
void kernel_pool_backward(const Tensor& M, const KernelConfig& cfg, const Tensor& d_phi,
                          Tensor* d_M);

// y = act(W x + b) with W of shape out x in.
Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act);
void dense_backward(const Tensor& x, const Tensor& W, const Tensor& y, Activation act,
                    const Tensor& d_y, Tensor* d_x, Tensor* d_W, Tensor* d_b);

}  // namespace ref

namespace par {

Tensor conv1d_grams(const Tensor& E, const Tensor& W, const Tensor& bias, std::size_t h);
void conv1d_grams_backward(const Tensor& E, const Tensor& W, std::size_t h, const Tensor& out,
                           const Tensor& d_out, Tensor* d_E, Tensor* d_W, Tensor* d_bias);

Tensor cosine_matrix(const Tensor& A, const Tensor& B);
void cosine_matrix_backward(const Tensor& A, const Tensor& B, const Tensor& M, const Tensor& d_M,
                            Tensor* d_A, Tensor* d_B);

Tensor kernel_pool(const Tensor& M, const KernelConfig& cfg);
void kernel_pool_backward(const Tensor& M, const KernelConfig& cfg, const Tensor& d_phi,
                          Tensor* d_M);

Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act);
void dense_backward(const Tensor& x, const Tensor& W, const Tensor& y, Activation act,
                    const Tensor& d_y, Tensor* d_x, Tensor* d_W, Tensor* d_b);

}  // namespace par

// Dispatch on the process-wide execution mode.
Exec exec_mode();
void set_exec_mode(Exec mode);

Tensor conv1d_grams(const Tensor& E, const Tensor& W, const Tensor& bias, std::size_t h);
void conv1d_grams_backward(const Tensor& E, const Tensor& W, std::size_t h, const Tensor& out,
                           const Tensor& d_out, Tensor* d_E, Tensor* d_W, Tensor* d_bias);
Tensor cosine_matrix(const Tensor& A, const Tensor& B);
void cosine_matrix_backward(const Tensor& A, const Tensor& B, const Tensor& M, const Tensor& d_M,
                            Tensor* d_A, Tensor* d_B);
Tensor kernel_pool(const Tensor& M, const KernelConfig& cfg);
void kernel_pool_backward(const Tensor& M, const KernelConfig& cfg, const Tensor& d_phi,
                          Tensor* d_M);
Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act);
void dense_backward(const Tensor& x, const Tensor& W, const Tensor& y, Activation act,
                    const Tensor& d_y, Tensor* d_x, Tensor* d_W, Tensor* d_b);

}  // namespace kernels

/// Number of OpenMP threads used by the parallel kernels and by
/// per-query evaluation. Read from RANKER_THREADS, default 1.
int configured_threads();
void apply_thread_config();

}  // namespace anchorrank
