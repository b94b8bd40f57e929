#include <cmath>

#include "anchorrank/kernels.hpp"

namespace anchorrank::kernels::ref {

namespace {

void check_conv(const Tensor& E, const Tensor& W, const Tensor& bias, std::size_t h) {
  require_shape(E.rank() == 2 && E.rows() >= 1, "conv1d_grams: input must be a non-empty matrix");
  require_shape(h >= 1, "conv1d_grams: window must be >= 1");
  require_shape(W.rank() == 2 && W.rows() == h * E.cols(),
                "conv1d_grams: filter rows must equal window * dim, got " + W.shape_string() +
                    " for input " + E.shape_string());
  require_shape(bias.size() == W.cols(), "conv1d_grams: bias length must equal filter count");
}

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
  check_conv(E, W, bias, h);
  const std::size_t m = E.rows(), dim = E.cols(), F = W.cols();
  Tensor out({m, F});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t f = 0; f < F; ++f) {
      double acc = 0.0;
      for (std::size_t w = 0; w < h && i + w < m; ++w) {
        for (std::size_t c = 0; c < dim; ++c) acc += E.at(i + w, c) * W.at(w * dim + c, f);
      }
      acc += bias[f];
      out.at(i, f) = acc > 0.0 ? acc : 0.0;
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
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t f = 0; f < F; ++f) d_pre.at(i, f) = out.at(i, f) > 0.0 ? d_out.at(i, f) : 0.0;

  if (d_bias) {
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t i = 0; i < m; ++i) (*d_bias)[f] += d_pre.at(i, f);
  }
  if (d_W) {
    for (std::size_t w = 0; w < h; ++w)
      for (std::size_t c = 0; c < dim; ++c)
        for (std::size_t f = 0; f < F; ++f)
          for (std::size_t i = 0; i + w < m; ++i) d_W->at(w * dim + c, f) += E.at(i + w, c) * d_pre.at(i, f);
  }
  if (d_E) {
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < dim; ++c) {
        double acc = 0.0;
        for (std::size_t w = 0; w < h && w <= r; ++w)
          for (std::size_t f = 0; f < F; ++f) acc += W.at(w * dim + c, f) * d_pre.at(r - w, f);
        d_E->at(r, c) += acc;
      }
  }
}

Tensor cosine_matrix(const Tensor& A, const Tensor& B) {
  require_shape(A.rank() == 2 && B.rank() == 2 && A.cols() == B.cols() && A.cols() >= 1,
                "cosine_matrix: operands must share a non-zero column count");
  const std::size_t m = A.rows(), n = B.rows(), F = A.cols();
  Tensor M({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        dot += A.at(i, f) * B.at(j, f);
        na += A.at(i, f) * A.at(i, f);
        nb += B.at(j, f) * B.at(j, f);
      }
      na = std::sqrt(na);
      nb = std::sqrt(nb);
      M.at(i, j) = (na < kNormFloor || nb < kNormFloor) ? 0.0 : dot / (na * nb);
    }
  }
  return M;
}

void cosine_matrix_backward(const Tensor& A, const Tensor& B, const Tensor& M, const Tensor& d_M,
                            Tensor* d_A, Tensor* d_B) {
  const std::size_t m = A.rows(), n = B.rows(), F = A.cols();
  require_shape(M.same_shape(d_M) && M.rows() == m && M.cols() == n,
                "cosine_matrix_backward: gradient shape mismatch");
  std::vector<double> na(m), nb(n);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t f = 0; f < F; ++f) s += A.at(i, f) * A.at(i, f);
    na[i] = std::sqrt(s);
  }
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t f = 0; f < F; ++f) s += B.at(j, f) * B.at(j, f);
    nb[j] = std::sqrt(s);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (na[i] < kNormFloor || nb[j] < kNormFloor) continue;
      const double g = d_M.at(i, j);
      const double inv = 1.0 / (na[i] * nb[j]);
      const double ca = M.at(i, j) / (na[i] * na[i]);
      const double cb = M.at(i, j) / (nb[j] * nb[j]);
      for (std::size_t f = 0; f < F; ++f) {
        if (d_A) d_A->at(i, f) += g * (B.at(j, f) * inv - A.at(i, f) * ca);
        if (d_B) d_B->at(j, f) += g * (A.at(i, f) * inv - B.at(j, f) * cb);
      }
    }
  }
}

Tensor kernel_pool(const Tensor& M, const KernelConfig& cfg) {
  require_shape(M.rank() == 2 && M.rows() >= 1 && M.cols() >= 1, "kernel_pool: empty matrix");
  const std::size_t m = M.rows(), n = M.cols(), K = cfg.size();
  Tensor phi({K});
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = 2.0 * cfg.sigma[k] * cfg.sigma[k];
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double diff = M.at(i, j) - cfg.mu[k];
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
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      const double denom = 2.0 * cfg.sigma[k] * cfg.sigma[k];
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double diff = M.at(i, j) - cfg.mu[k];
        s += std::exp(-(diff * diff) / denom);
      }
      if (!(s > kPoolFloor)) continue;
      const double scale = d_phi[k] / s;
      const double inv_var = 1.0 / (cfg.sigma[k] * cfg.sigma[k]);
      for (std::size_t j = 0; j < n; ++j) {
        const double diff = M.at(i, j) - cfg.mu[k];
        d_M->at(i, j) += scale * std::exp(-(diff * diff) / denom) * (-diff * inv_var);
      }
    }
  }
}

Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act) {
  require_shape(W.rank() == 2 && W.cols() == x.size() && b.size() == W.rows(),
                "dense: W " + W.shape_string() + " does not conform with x " + x.shape_string() +
                    " and b " + b.shape_string());
  const std::size_t out = W.rows(), in = W.cols();
  Tensor y({out});
  for (std::size_t o = 0; o < out; ++o) {
    double z = 0.0;
    for (std::size_t c = 0; c < in; ++c) z += W.at(o, c) * x[c];
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
  if (d_W)
    for (std::size_t o = 0; o < out; ++o)
      for (std::size_t c = 0; c < in; ++c) d_W->at(o, c) += dz[o] * x[c];
  if (d_x)
    for (std::size_t c = 0; c < in; ++c) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += W.at(o, c) * dz[o];
      (*d_x)[c] += acc;
    }
}

}  // namespace anchorrank::kernels::ref
