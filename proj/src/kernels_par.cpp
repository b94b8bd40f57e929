#include <cmath>
#include <cstdint>

#include "anchorrank/kernels.hpp"

namespace anchorrank::kernels::par {

namespace {

// Loop bounds are signed for OpenMP.
using idx = std::int64_t;

double apply(Activation act, double z) {
  switch (act) {
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::none: break;
  }
  return z;
}

double derivative(Activation act, double y) {
  switch (act) {
    case Activation::tanh: return 1.0 - y * y;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::none: break;
  }
  return 1.0;
}

}  // namespace

Tensor conv1d_grams(const Tensor& E, const Tensor& W, const Tensor& bias, std::size_t h) {
  require_shape(E.rank() == 2 && E.rows() >= 1, "conv1d_grams: input must be a non-empty matrix");
  require_shape(h >= 1, "conv1d_grams: window must be >= 1");
  require_shape(W.rank() == 2 && W.rows() == h * E.cols(),
                "conv1d_grams: filter rows must equal window * dim, got " + W.shape_string() +
                    " for input " + E.shape_string());
  require_shape(bias.size() == W.cols(), "conv1d_grams: bias length must equal filter count");
  const idx m = static_cast<idx>(E.rows());
  const std::size_t dim = E.cols(), F = W.cols();
  Tensor out({E.rows(), F});
  const double* e = E.data();
  const double* w = W.data();
#pragma omp parallel for schedule(static)
  for (idx i = 0; i < m; ++i) {
    double* acc = out.data() + static_cast<std::size_t>(i) * F;
    for (std::size_t wi = 0; wi < h && static_cast<idx>(wi) + i < m; ++wi) {
      const double* erow = e + (static_cast<std::size_t>(i) + wi) * dim;
      for (std::size_t c = 0; c < dim; ++c) {
        const double ev = erow[c];
        const double* wrow = w + (wi * dim + c) * F;
        for (std::size_t f = 0; f < F; ++f) acc[f] += ev * wrow[f];
      }
    }
    for (std::size_t f = 0; f < F; ++f) {
      const double z = acc[f] + bias[f];
      acc[f] = z > 0.0 ? z : 0.0;
    }
  }
  return out;
}

void conv1d_grams_backward(const Tensor& E, const Tensor& W, std::size_t h, const Tensor& out,
                           const Tensor& d_out, Tensor* d_E, Tensor* d_W, Tensor* d_bias) {
  const std::size_t m = E.rows(), dim = E.cols(), F = W.cols();
  require_shape(out.same_shape(d_out) && out.rows() == m && out.cols() == F,
                "conv1d_grams_backward: gradient shape mismatch");
  Tensor d_pre({m, F});
  for (std::size_t t = 0; t < m * F; ++t) d_pre[t] = out[t] > 0.0 ? d_out[t] : 0.0;

  if (d_bias) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t f = 0; f < F; ++f) (*d_bias)[f] += d_pre.at(i, f);
  }
  if (d_W) {
    const idx rows = static_cast<idx>(h * dim);
#pragma omp parallel for schedule(static)
    for (idx r = 0; r < rows; ++r) {
      const std::size_t wi = static_cast<std::size_t>(r) / dim, c = static_cast<std::size_t>(r) % dim;
      double* g = d_W->data() + static_cast<std::size_t>(r) * F;
      for (std::size_t i = 0; i + wi < m; ++i) {
        const double ev = E.at(i + wi, c);
        const double* dp = d_pre.data() + i * F;
        for (std::size_t f = 0; f < F; ++f) g[f] += ev * dp[f];
      }
    }
  }
  if (d_E) {
#pragma omp parallel for schedule(static)
    for (idx ri = 0; ri < static_cast<idx>(m); ++ri) {
      const std::size_t r = static_cast<std::size_t>(ri);
      for (std::size_t c = 0; c < dim; ++c) {
        double acc = 0.0;
        for (std::size_t wi = 0; wi < h && wi <= r; ++wi) {
          const double* wrow = W.data() + (wi * dim + c) * F;
          const double* dp = d_pre.data() + (r - wi) * F;
          for (std::size_t f = 0; f < F; ++f) acc += wrow[f] * dp[f];
        }
        d_E->at(r, c) += acc;
      }
    }
  }
}

namespace {
std::vector<double> row_norms(const Tensor& A) {
  std::vector<double> norms(A.rows());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (double v : A.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  return norms;
}
}  // namespace

Tensor cosine_matrix(const Tensor& A, const Tensor& B) {
  require_shape(A.rank() == 2 && B.rank() == 2 && A.cols() == B.cols() && A.cols() >= 1,
                "cosine_matrix: operands must share a non-zero column count");
  const std::size_t n = B.rows(), F = A.cols();
  const auto na = row_norms(A), nb = row_norms(B);
  Tensor M({A.rows(), n});
#pragma omp parallel for schedule(static)
  for (idx ii = 0; ii < static_cast<idx>(A.rows()); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double* a = A.data() + i * F;
    for (std::size_t j = 0; j < n; ++j) {
      const double* b = B.data() + j * F;
      double dot = 0.0;
      for (std::size_t f = 0; f < F; ++f) dot += a[f] * b[f];
      M.at(i, j) = (na[i] < kNormFloor || nb[j] < kNormFloor) ? 0.0 : dot / (na[i] * nb[j]);
    }
  }
  return M;
}

void cosine_matrix_backward(const Tensor& A, const Tensor& B, const Tensor& M, const Tensor& d_M,
                            Tensor* d_A, Tensor* d_B) {
  const std::size_t m = A.rows(), n = B.rows(), F = A.cols();
  require_shape(M.same_shape(d_M) && M.rows() == m && M.cols() == n,
                "cosine_matrix_backward: gradient shape mismatch");
  const auto na = row_norms(A), nb = row_norms(B);
  if (d_A) {
#pragma omp parallel for schedule(static)
    for (idx ii = 0; ii < static_cast<idx>(m); ++ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      if (na[i] < kNormFloor) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (nb[j] < kNormFloor) continue;
        const double g = d_M.at(i, j);
        const double inv = 1.0 / (na[i] * nb[j]);
        const double ca = M.at(i, j) / (na[i] * na[i]);
        for (std::size_t f = 0; f < F; ++f) d_A->at(i, f) += g * (B.at(j, f) * inv - A.at(i, f) * ca);
      }
    }
  }
  if (d_B) {
#pragma omp parallel for schedule(static)
    for (idx jj = 0; jj < static_cast<idx>(n); ++jj) {
      const std::size_t j = static_cast<std::size_t>(jj);
      if (nb[j] < kNormFloor) continue;
      for (std::size_t i = 0; i < m; ++i) {
        if (na[i] < kNormFloor) continue;
        const double g = d_M.at(i, j);
        const double inv = 1.0 / (na[i] * nb[j]);
        const double cb = M.at(i, j) / (nb[j] * nb[j]);
        for (std::size_t f = 0; f < F; ++f) d_B->at(j, f) += g * (A.at(i, f) * inv - B.at(j, f) * cb);
      }
    }
  }
}

Tensor kernel_pool(const Tensor& M, const KernelConfig& cfg) {
  require_shape(M.rank() == 2 && M.rows() >= 1 && M.cols() >= 1, "kernel_pool: empty matrix");
  const std::size_t m = M.rows(), n = M.cols();
  const idx K = static_cast<idx>(cfg.size());
  Tensor phi({cfg.size()});
#pragma omp parallel for schedule(static)
  for (idx kk = 0; kk < K; ++kk) {
    const std::size_t k = static_cast<std::size_t>(kk);
    const double mu = cfg.mu[k];
    const double denom = 2.0 * cfg.sigma[k] * cfg.sigma[k];
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = M.data() + i * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double diff = row[j] - mu;
        s += std::exp(-(diff * diff) / denom);
      }
      total += std::log(s > kPoolFloor ? s : kPoolFloor);
    }
    phi[k] = total;
  }
  return phi;
}

void kernel_pool_backward(const Tensor& M, const KernelConfig& cfg, const Tensor& d_phi, Tensor* d_M) {
  const std::size_t m = M.rows(), n = M.cols(), K = cfg.size();
  require_shape(d_phi.size() == K && d_M && d_M->same_shape(M), "kernel_pool_backward: shape mismatch");
#pragma omp parallel for schedule(static)
  for (idx ii = 0; ii < static_cast<idx>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double* row = M.data() + i * n;
    double* grow = d_M->data() + i * n;
    std::vector<double> w(n);
    for (std::size_t k = 0; k < K; ++k) {
      const double mu = cfg.mu[k];
      const double denom = 2.0 * cfg.sigma[k] * cfg.sigma[k];
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double diff = row[j] - mu;
        w[j] = std::exp(-(diff * diff) / denom);
        s += w[j];
      }
      if (!(s > kPoolFloor)) continue;
      const double scale = d_phi[k] / s;
      const double inv_var = 1.0 / (cfg.sigma[k] * cfg.sigma[k]);
      for (std::size_t j = 0; j < n; ++j) grow[j] += scale * w[j] * (-(row[j] - mu) * inv_var);
    }
  }
}

Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act) {
  require_shape(W.rank() == 2 && W.cols() == x.size() && b.size() == W.rows(),
                "dense: W " + W.shape_string() + " does not conform with x " + x.shape_string() +
                    " and b " + b.shape_string());
  const std::size_t in = W.cols();
  Tensor y({W.rows()});
#pragma omp parallel for schedule(static)
  for (idx oo = 0; oo < static_cast<idx>(W.rows()); ++oo) {
    const std::size_t o = static_cast<std::size_t>(oo);
    const double* wrow = W.data() + o * in;
    double z = 0.0;
    for (std::size_t c = 0; c < in; ++c) z += wrow[c] * x[c];
    y[o] = apply(act, z + b[o]);
  }
  return y;
}

void dense_backward(const Tensor& x, const Tensor& W, const Tensor& y, Activation act,
                    const Tensor& d_y, Tensor* d_x, Tensor* d_W, Tensor* d_b) {
  const std::size_t out = W.rows(), in = W.cols();
  require_shape(d_y.size() == out && y.size() == out, "dense_backward: gradient shape mismatch");
  std::vector<double> dz(out);
  for (std::size_t o = 0; o < out; ++o) dz[o] = d_y[o] * derivative(act, y[o]);
  if (d_b)
    for (std::size_t o = 0; o < out; ++o) (*d_b)[o] += dz[o];
  if (d_W) {
#pragma omp parallel for schedule(static)
    for (idx oo = 0; oo < static_cast<idx>(out); ++oo) {
      const std::size_t o = static_cast<std::size_t>(oo);
      double* g = d_W->data() + o * in;
      for (std::size_t c = 0; c < in; ++c) g[c] += dz[o] * x[c];
    }
  }
  if (d_x) {
#pragma omp parallel for schedule(static)
    for (idx cc = 0; cc < static_cast<idx>(in); ++cc) {
      const std::size_t c = static_cast<std::size_t>(cc);
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += W.at(o, c) * dz[o];
      (*d_x)[c] += acc;
    }
  }
}

}  // namespace anchorrank::kernels::par
