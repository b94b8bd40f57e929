#include "anchorrank/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace anchorrank {

ParamSlot::ParamSlot(std::string slot_name, Tensor init)
    : name(std::move(slot_name)),
      value(std::move(init)),
      gradient(value.shape()),
      moment1(value.shape()),
      moment2(value.shape()) {}

const Tensor& Var::value() const { return tape->value(id); }

double Var::scalar() const {
  const Tensor& v = value();
  require_shape(v.size() == 1, "scalar(): node holds " + v.shape_string());
  return v[0];
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(ParamSlot& slot) {
  Node n;
  n.slot = &slot;
  n.version = slot.version;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::vector<std::size_t> inputs,
               std::function<void(Tape&, std::size_t)> adjoint) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].needs_grad; });
  if (n.needs_grad) n.adjoint = std::move(adjoint);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.slot ? n.slot->value : n.value;
}

const Tensor& Tape::grad(std::size_t id) const { return nodes_[id].grad; }

Tensor& Tape::grad_acc(std::size_t id) {
  Node& n = nodes_[id];
  if (n.slot) return n.slot->gradient;
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var out) {
  if (out.tape != this) throw GraphError("backward: variable belongs to another tape");
  if (consumed_) throw GraphError("backward: tape already consumed");
  for (const Node& n : nodes_) {
    if (n.slot && n.slot->version != n.version)
      throw GraphError("backward: parameter '" + n.slot->name + "' was mutated after the graph was recorded");
  }
  consumed_ = true;
  Node& root = nodes_[out.id];
  require_shape(value(out.id).size() == 1, "backward: output must be a scalar");
  if (!root.needs_grad) return;
  grad_acc(out.id)[0] += 1.0;
  for (std::size_t id = out.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.adjoint || n.grad.size() == 0) continue;
    n.adjoint(*this, id);
  }
}

namespace ops {

namespace {
Tape& tape_of(std::initializer_list<Var> vars) {
  Tape* t = vars.begin()->tape;
  for (const Var& v : vars)
    if (v.tape != t) throw GraphError("operands recorded on different tapes");
  return *t;
}
}  // namespace

Var gather_rows(Var table, std::span<const int> ids) {
  Tape& t = *table.tape;
  const Tensor& tv = t.value(table.id);
  const std::size_t dim = tv.cols();
  Tensor out({ids.size(), dim});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    require_shape(ids[r] >= 0 && static_cast<std::size_t>(ids[r]) < tv.rows(), "gather_rows: id out of range");
    std::copy_n(tv.row(static_cast<std::size_t>(ids[r])).data(), dim, out.row(r).data());
  }
  std::vector<int> keep(ids.begin(), ids.end());
  return t.push(std::move(out), {table.id}, [src = table.id, keep = std::move(keep)](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      auto dst = acc.row(static_cast<std::size_t>(keep[r]));
      auto gr = g.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += gr[c];
    }
  });
}

Var select_rows(Var x, std::span<const std::size_t> rows) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x.id);
  const std::size_t cols = xv.cols();
  Tensor out({rows.size(), cols});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_shape(rows[r] < xv.rows(), "select_rows: row out of range");
    std::copy_n(xv.row(rows[r]).data(), cols, out.row(r).data());
  }
  std::vector<std::size_t> keep(rows.begin(), rows.end());
  return t.push(std::move(out), {x.id}, [src = x.id, keep = std::move(keep)](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      auto dst = acc.row(keep[r]);
      auto gr = g.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += gr[c];
    }
  });
}

Var conv1d_grams(Var E, Var filters, Var bias, std::size_t h) {
  Tape& t = tape_of({E, filters, bias});
  Tensor out = kernels::conv1d_grams(E.value(), filters.value(), bias.value(), h);
  return t.push(std::move(out), {E.id, filters.id, bias.id},
                [e = E.id, w = filters.id, b = bias.id, h](Tape& tp, std::size_t self) {
                  kernels::conv1d_grams_backward(tp.value(e), tp.value(w), h, tp.value(self), tp.grad(self),
                                                 tp.needs_grad(e) ? &tp.grad_acc(e) : nullptr,
                                                 tp.needs_grad(w) ? &tp.grad_acc(w) : nullptr,
                                                 tp.needs_grad(b) ? &tp.grad_acc(b) : nullptr);
                });
}

Var cosine_matrix(Var A, Var B) {
  Tape& t = tape_of({A, B});
  Tensor out = kernels::cosine_matrix(A.value(), B.value());
  return t.push(std::move(out), {A.id, B.id}, [a = A.id, b = B.id](Tape& tp, std::size_t self) {
    kernels::cosine_matrix_backward(tp.value(a), tp.value(b), tp.value(self), tp.grad(self),
                                    tp.needs_grad(a) ? &tp.grad_acc(a) : nullptr,
                                    tp.needs_grad(b) ? &tp.grad_acc(b) : nullptr);
  });
}

Var kernel_pool(Var M, const KernelConfig& cfg) {
  Tape& t = *M.tape;
  Tensor out = kernels::kernel_pool(M.value(), cfg);
  return t.push(std::move(out), {M.id}, [m = M.id, cfg](Tape& tp, std::size_t self) {
    kernels::kernel_pool_backward(tp.value(m), cfg, tp.grad(self), &tp.grad_acc(m));
  });
}

Var dense(Var x, Var W, Var b, Activation act) {
  Tape& t = tape_of({x, W, b});
  Tensor out = kernels::dense(x.value(), W.value(), b.value(), act);
  return t.push(std::move(out), {x.id, W.id, b.id}, [x = x.id, w = W.id, b = b.id, act](Tape& tp, std::size_t self) {
    kernels::dense_backward(tp.value(x), tp.value(w), tp.value(self), act, tp.grad(self),
                            tp.needs_grad(x) ? &tp.grad_acc(x) : nullptr,
                            tp.needs_grad(w) ? &tp.grad_acc(w) : nullptr,
                            tp.needs_grad(b) ? &tp.grad_acc(b) : nullptr);
  });
}

Var max_over_rows(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = x.value();
  require_shape(xv.rank() == 2 && xv.rows() >= 1, "max_over_rows: empty input");
  const std::size_t m = xv.rows(), F = xv.cols();
  Tensor out({F});
  std::vector<std::size_t> arg(F, 0);
  for (std::size_t f = 0; f < F; ++f) {
    double best = xv.at(0, f);
    for (std::size_t i = 1; i < m; ++i)
      if (xv.at(i, f) > best) {
        best = xv.at(i, f);
        arg[f] = i;
      }
    out[f] = best;
  }
  return t.push(std::move(out), {x.id}, [src = x.id, arg = std::move(arg)](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t f = 0; f < arg.size(); ++f) acc.at(arg[f], f) += g[f];
  });
}

Var concat(std::span<const Var> parts) {
  require_shape(!parts.empty(), "concat: no operands");
  Tape& t = *parts.front().tape;
  std::vector<std::size_t> ids, offsets;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape != &t) throw GraphError("operands recorded on different tapes");
    ids.push_back(p.id);
    offsets.push_back(total);
    total += p.value().size();
  }
  Tensor out({total});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    std::copy_n(v.data(), v.size(), out.data() + offsets[k]);
  }
  auto inputs = ids;
  return t.push(std::move(out), std::move(inputs), [ids, offsets](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.needs_grad(ids[k])) continue;
      Tensor& acc = tp.grad_acc(ids[k]);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[offsets[k] + i];
    }
  });
}

Var sum(Var x) {
  Tape& t = *x.tape;
  double s = 0.0;
  for (double v : x.value().span()) s += v;
  return t.push(Tensor({1}, s), {x.id}, [src = x.id](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g;
  });
}

namespace {
Var binary(Var a, Var b, double sign) {
  Tape& t = tape_of({a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_shape(av.size() == bv.size(), "add/sub: size mismatch");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + sign * bv[i];
  return t.push(std::move(out), {a.id, b.id}, [a = a.id, b = b.id, sign](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.needs_grad(a)) {
      Tensor& acc = tp.grad_acc(a);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }
    if (tp.needs_grad(b)) {
      Tensor& acc = tp.grad_acc(b);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += sign * g[i];
    }
  });
}
}  // namespace

Var add(Var a, Var b) { return binary(a, b, 1.0); }
Var sub(Var a, Var b) { return binary(a, b, -1.0); }

Var scale(Var x, double factor) {
  Tape& t = *x.tape;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  return t.push(std::move(out), {x.id}, [src = x.id, factor](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += factor * g[i];
  });
}

Var hinge(Var x, double margin) {
  Tape& t = *x.tape;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, margin - out[i]);
  return t.push(std::move(out), {x.id}, [src = x.id](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (y[i] > 0.0) acc[i] -= g[i];
  });
}

Var softmax(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = x.value();
  require_shape(xv.size() >= 1, "softmax: empty input");
  Tensor out(xv.shape());
  const double peak = *std::max_element(xv.span().begin(), xv.span().end());
  double z = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out[i] = std::exp(xv[i] - peak);
    z += out[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= z;
  return t.push(std::move(out), {x.id}, [src = x.id](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t i = 0; i < y.size(); ++i) acc[i] += y[i] * (g[i] - dot);
  });
}

Var log(Var x) {
  Tape& t = *x.tape;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) throw NumericError("log: non-positive input");
    out[i] = std::log(out[i]);
  }
  return t.push(std::move(out), {x.id}, [src = x.id](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& xv = tp.value(src);
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] / xv[i];
  });
}

Var log_softmax(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = x.value();
  require_shape(xv.size() >= 1, "log_softmax: empty input");
  const double peak = *std::max_element(xv.span().begin(), xv.span().end());
  double z = 0.0;
  for (double v : xv.span()) z += std::exp(v - peak);
  const double lse = peak + std::log(z);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] - lse;
  return t.push(std::move(out), {x.id}, [src = x.id](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    double gsum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gsum += g[i];
    Tensor& acc = tp.grad_acc(src);
    for (std::size_t i = 0; i < y.size(); ++i) acc[i] += g[i] - std::exp(y[i]) * gsum;
  });
}

Var pick(Var x, std::size_t index) {
  Tape& t = *x.tape;
  require_shape(index < x.value().size(), "pick: index out of range");
  return t.push(Tensor({1}, x.value()[index]), {x.id}, [src = x.id, index](Tape& tp, std::size_t self) {
    tp.grad_acc(src)[index] += tp.grad(self)[0];
  });
}

}  // namespace ops
}  // namespace anchorrank
