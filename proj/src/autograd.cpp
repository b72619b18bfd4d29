#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gvhoi/autograd/ops.hpp"

namespace gvhoi::ag {

namespace {
thread_local bool g_grad_enabled = true;

using idx = std::ptrdiff_t;

template <class S>
bool wants(const Node<S>& self, std::size_t i) {
  return self.parents[i]->requires_grad;
}

template <class S>
Tensor<S>& pgrad(Node<S>& self, std::size_t i) {
  return self.parents[i]->ensure_grad();
}

template <class S>
const Tensor<S>& pval(const Node<S>& self, std::size_t i) {
  return self.parents[i]->value;
}

void check_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

template <class S>
Shape with_last(const Shape& s, int last) {
  Shape out = s.empty() ? Shape{1} : s;
  out.back() = last;
  return out;
}

template <class S, class Fwd, class Deriv>
Var<S> unary(const Var<S>& x, Fwd fwd, Deriv deriv) {
  Tensor<S> y(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = fwd(xv[i]);
  return make_result<S>(std::move(y), {x}, [deriv](Node<S>& self) {
    auto& gx = pgrad(self, 0);
    const auto& xv = pval(self, 0);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += self.grad[i] * deriv(xv[i], self.value[i]);
  });
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <class S>
Var<S> linear(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
  const int in = w.value().dim(1);
  const int out = w.value().dim(0);
  if (x.value().cols() != in) {
    throw ShapeError("linear: input width " + std::to_string(x.value().cols()) + " != " + std::to_string(in));
  }
  const bool has_bias = b.defined();
  if (has_bias && b.value().numel() != static_cast<std::size_t>(out)) throw ShapeError("linear: bias width");
  const int rows = x.value().rows();
  Tensor<S> y(with_last<S>(x.shape(), out));
  kernels::gemm_nt(rows, out, in, x.value().ptr(), w.value().ptr(), y.ptr(), false);
  if (has_bias) {
    const S* bv = b.value().ptr();
    for (int r = 0; r < rows; ++r) {
      S* yr = y.ptr() + static_cast<idx>(r) * out;
      for (int o = 0; o < out; ++o) yr[o] += bv[o];
    }
  }
  std::vector<Var<S>> parents{x, w};
  if (has_bias) parents.push_back(b);
  return make_result<S>(std::move(y), std::move(parents), [rows, in, out, has_bias](Node<S>& self) {
    const S* dy = self.grad.ptr();
    if (wants(self, 0)) {
      kernels::gemm_nn(rows, in, out, dy, pval(self, 1).ptr(), pgrad(self, 0).ptr(), true);
    }
    if (wants(self, 1)) {
      kernels::gemm_tn(out, in, rows, dy, pval(self, 0).ptr(), pgrad(self, 1).ptr(), true);
    }
    if (has_bias && wants(self, 2)) {
      auto& gb = pgrad(self, 2);
      for (int r = 0; r < rows; ++r) {
        const S* dyr = dy + static_cast<idx>(r) * out;
        for (int o = 0; o < out; ++o) gb[static_cast<std::size_t>(o)] += dyr[o];
      }
    }
  });
}

template <class S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  return add_scaled(a, S(1), b, S(1));
}

template <class S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  return add_scaled(a, S(1), b, S(-1));
}

template <class S>
Var<S> add_scaled(const Var<S>& a, S sa, const Var<S>& b, S sb) {
  check_same(a.shape(), b.shape(), "add_scaled");
  Tensor<S> y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = sa * a.value()[i] + sb * b.value()[i];
  return make_result<S>(std::move(y), {a, b}, [sa, sb](Node<S>& self) {
    if (wants(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += sa * self.grad[i];
    }
    if (wants(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += sb * self.grad[i];
    }
  });
}

template <class S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  check_same(a.shape(), b.shape(), "mul");
  Tensor<S> y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_result<S>(std::move(y), {a, b}, [](Node<S>& self) {
    if (wants(self, 0)) {
      auto& g = pgrad(self, 0);
      const auto& bv = pval(self, 1);
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (wants(self, 1)) {
      auto& g = pgrad(self, 1);
      const auto& av = pval(self, 0);
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

template <class S>
Var<S> scale(const Var<S>& a, S s) {
  Tensor<S> y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = s * a.value()[i];
  return make_result<S>(std::move(y), {a}, [s](Node<S>& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += s * self.grad[i];
  });
}

template <class S>
Var<S> add_const(const Var<S>& x, const Tensor<S>& c) {
  check_same(x.shape(), c.shape, "add_const");
  Tensor<S> y(x.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = x.value()[i] + c[i];
  return make_result<S>(std::move(y), {x}, [](Node<S>& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
  });
}

template <class S>
Var<S> relu(const Var<S>& x) {
  return unary(x, [](S v) { return v > S(0) ? v : S(0); }, [](S v, S) { return v > S(0) ? S(1) : S(0); });
}

template <class S>
Var<S> sigmoid(const Var<S>& x) {
  return unary(
      x,
      [](S v) {
        if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
        const S e = std::exp(v);
        return e / (S(1) + e);
      },
      [](S, S y) { return y * (S(1) - y); });
}

template <class S>
Var<S> tanh(const Var<S>& x) {
  return unary(x, [](S v) { return std::tanh(v); }, [](S, S y) { return S(1) - y * y; });
}

template <class S>
Var<S> leaky_relu(const Var<S>& x, S slope) {
  return unary(x, [slope](S v) { return v > S(0) ? v : slope * v; },
               [slope](S v, S) { return v > S(0) ? S(1) : slope; });
}

template <class S>
Var<S> mask_rows(const Var<S>& x, const std::vector<S>& weight) {
  const int rows = x.value().rows();
  const int cols = x.value().cols();
  if (static_cast<int>(weight.size()) != rows) throw ShapeError("mask_rows: weight count != rows");
  Tensor<S> y(x.shape());
  for (int r = 0; r < rows; ++r) {
    const S w = weight[static_cast<std::size_t>(r)];
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      y[i] = w * x.value()[i];
    }
  }
  return make_result<S>(std::move(y), {x}, [weight, rows, cols](Node<S>& self) {
    auto& g = pgrad(self, 0);
    for (int r = 0; r < rows; ++r) {
      const S w = weight[static_cast<std::size_t>(r)];
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * cols + c;
        g[i] += w * self.grad[i];
      }
    }
  });
}

template <class S>
Var<S> reshape(const Var<S>& x, Shape shape) {
  Tensor<S> y = x.value().reshaped(std::move(shape));
  return make_result<S>(std::move(y), {x}, [](Node<S>& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
  });
}

template <class S>
Var<S> concat_last(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw ShapeError("concat_last: no inputs");
  const int rows = parts[0].value().rows();
  std::vector<int> widths;
  int total = 0;
  for (const auto& p : parts) {
    if (p.value().rows() != rows) throw ShapeError("concat_last: row count mismatch");
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor<S> y(with_last<S>(parts[0].shape(), total));
  int off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const int w = widths[k];
    const S* src = parts[k].value().ptr();
    for (int r = 0; r < rows; ++r) {
      std::copy(src + static_cast<idx>(r) * w, src + static_cast<idx>(r + 1) * w,
                y.ptr() + static_cast<idx>(r) * total + off);
    }
    off += w;
  }
  return make_result<S>(std::move(y), parts, [widths, rows, total](Node<S>& self) {
    int off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const int w = widths[k];
      if (wants(self, k)) {
        S* g = pgrad(self, k).ptr();
        for (int r = 0; r < rows; ++r) {
          const S* src = self.grad.ptr() + static_cast<idx>(r) * total + off;
          S* dst = g + static_cast<idx>(r) * w;
          for (int c = 0; c < w; ++c) dst[c] += src[c];
        }
      }
      off += w;
    }
  });
}

template <class S>
Var<S> slice_last(const Var<S>& x, int start, int len) {
  const int cols = x.value().cols();
  const int rows = x.value().rows();
  if (start < 0 || len < 0 || start + len > cols) throw ShapeError("slice_last: out of range");
  Tensor<S> y(with_last<S>(x.shape(), len));
  for (int r = 0; r < rows; ++r) {
    const S* src = x.value().ptr() + static_cast<idx>(r) * cols + start;
    std::copy(src, src + len, y.ptr() + static_cast<idx>(r) * len);
  }
  return make_result<S>(std::move(y), {x}, [rows, cols, start, len](Node<S>& self) {
    S* g = pgrad(self, 0).ptr();
    for (int r = 0; r < rows; ++r) {
      const S* src = self.grad.ptr() + static_cast<idx>(r) * len;
      S* dst = g + static_cast<idx>(r) * cols + start;
      for (int c = 0; c < len; ++c) dst[c] += src[c];
    }
  });
}

template <class S>
Var<S> gather_rows(const Var<S>& x, const std::vector<int>& rows) {
  const int cols = x.value().cols();
  const int n_rows = x.value().rows();
  Tensor<S> y(Shape{static_cast<int>(rows.size()), cols});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int r = rows[k];
    if (r < 0 || r >= n_rows) throw ShapeError("gather_rows: index out of range");
    const S* src = x.value().ptr() + static_cast<idx>(r) * cols;
    std::copy(src, src + cols, y.ptr() + static_cast<idx>(k) * cols);
  }
  return make_result<S>(std::move(y), {x}, [rows, cols](Node<S>& self) {
    S* g = pgrad(self, 0).ptr();
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const S* src = self.grad.ptr() + static_cast<idx>(k) * cols;
      S* dst = g + static_cast<idx>(rows[k]) * cols;
      for (int c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
}

template <class S>
Var<S> row_mean(const Var<S>& x) {
  const int rows = x.value().rows();
  const int cols = x.value().cols();
  Tensor<S> y(with_last<S>(x.shape(), 1));
  for (int r = 0; r < rows; ++r) {
    S sum = 0;
    const S* src = x.value().ptr() + static_cast<idx>(r) * cols;
    for (int c = 0; c < cols; ++c) sum += src[c];
    y[static_cast<std::size_t>(r)] = sum / static_cast<S>(cols);
  }
  return make_result<S>(std::move(y), {x}, [rows, cols](Node<S>& self) {
    S* g = pgrad(self, 0).ptr();
    for (int r = 0; r < rows; ++r) {
      const S d = self.grad[static_cast<std::size_t>(r)] / static_cast<S>(cols);
      for (int c = 0; c < cols; ++c) g[static_cast<idx>(r) * cols + c] += d;
    }
  });
}

template <class S>
Var<S> expand_cols(const Var<S>& x, int cols) {
  if (x.value().cols() != 1) throw ShapeError("expand_cols: input must have one column");
  const int rows = x.value().rows();
  Tensor<S> y(with_last<S>(x.shape(), cols));
  for (int r = 0; r < rows; ++r) {
    std::fill(y.ptr() + static_cast<idx>(r) * cols, y.ptr() + static_cast<idx>(r + 1) * cols,
              x.value()[static_cast<std::size_t>(r)]);
  }
  return make_result<S>(std::move(y), {x}, [rows, cols](Node<S>& self) {
    auto& g = pgrad(self, 0);
    for (int r = 0; r < rows; ++r) {
      S sum = 0;
      for (int c = 0; c < cols; ++c) sum += self.grad[static_cast<std::size_t>(r) * cols + c];
      g[static_cast<std::size_t>(r)] += sum;
    }
  });
}

template <class S>
Var<S> sum_all(const Var<S>& x) {
  S sum = 0;
  for (S v : x.value().data) sum += v;
  return make_result<S>(Tensor<S>(Shape{1}, sum), {x}, [](Node<S>& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[0];
  });
}

template <class S>
Var<S> softmax_cross_entropy_sum(const Var<S>& logits, const std::vector<int>& labels) {
  const int rows = logits.value().rows();
  const int cols = logits.value().cols();
  if (static_cast<int>(labels.size()) != rows) throw ShapeError("cross entropy: label count != rows");
  Tensor<S> probs(Shape{rows, cols});
  S total = 0;
  for (int r = 0; r < rows; ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0) continue;
    if (label >= cols) throw ShapeError("cross entropy: label out of range");
    const S* l = logits.value().ptr() + static_cast<idx>(r) * cols;
    S* p = probs.ptr() + static_cast<idx>(r) * cols;
    S mx = l[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, l[c]);
    S z = 0;
    for (int c = 0; c < cols; ++c) {
      p[c] = std::exp(l[c] - mx);
      z += p[c];
    }
    for (int c = 0; c < cols; ++c) p[c] /= z;
    total += (mx + std::log(z)) - l[label];
  }
  return make_result<S>(Tensor<S>(Shape{1}, total), {logits},
                        [probs = std::move(probs), labels, rows, cols](Node<S>& self) {
                          auto& g = pgrad(self, 0);
                          const S up = self.grad[0];
                          for (int r = 0; r < rows; ++r) {
                            const int label = labels[static_cast<std::size_t>(r)];
                            if (label < 0) continue;
                            const S* p = probs.ptr() + static_cast<idx>(r) * cols;
                            S* gr = g.ptr() + static_cast<idx>(r) * cols;
                            for (int c = 0; c < cols; ++c) gr[c] += up * (p[c] - (c == label ? S(1) : S(0)));
                          }
                        });
}

template <class S>
Var<S> gumbel_softmax(const Var<S>& logits, const Tensor<S>& noise, S tau, bool hard) {
  if (!(tau > S(0))) throw std::invalid_argument("gumbel_softmax: temperature must be positive");
  if (!noise.empty()) check_same(noise.shape, logits.shape(), "gumbel_softmax noise");
  const int rows = logits.value().rows();
  const int cols = logits.value().cols();
  Tensor<S> soft(logits.shape());
  for (int r = 0; r < rows; ++r) {
    const S* l = logits.value().ptr() + static_cast<idx>(r) * cols;
    S* y = soft.ptr() + static_cast<idx>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      y[c] = (l[c] + (noise.empty() ? S(0) : noise[static_cast<std::size_t>(r) * cols + c])) / tau;
    }
    S mx = y[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, y[c]);
    S z = 0;
    for (int c = 0; c < cols; ++c) {
      y[c] = std::exp(y[c] - mx);
      z += y[c];
    }
    for (int c = 0; c < cols; ++c) y[c] /= z;
  }
  Tensor<S> out = soft;
  if (hard) {
    for (int r = 0; r < rows; ++r) {
      S* y = out.ptr() + static_cast<idx>(r) * cols;
      int best = 0;
      for (int c = 1; c < cols; ++c) {
        if (y[c] > y[best]) best = c;
      }
      for (int c = 0; c < cols; ++c) y[c] = c == best ? S(1) : S(0);
    }
  }
  return make_result<S>(std::move(out), {logits}, [soft = std::move(soft), rows, cols, tau](Node<S>& self) {
    auto& g = pgrad(self, 0);
    for (int r = 0; r < rows; ++r) {
      const S* y = soft.ptr() + static_cast<idx>(r) * cols;
      const S* dy = self.grad.ptr() + static_cast<idx>(r) * cols;
      S inner = 0;
      for (int c = 0; c < cols; ++c) inner += y[c] * dy[c];
      S* gr = g.ptr() + static_cast<idx>(r) * cols;
      for (int c = 0; c < cols; ++c) gr[c] += y[c] * (dy[c] - inner) / tau;
    }
  });
}

template <class S>
Var<S> graph_attention(const Var<S>& h, const std::vector<std::uint8_t>& mask, const Var<S>& attn, int heads,
                       const kernels::GatOptions& opt, Tensor<S>* alpha_out) {
  if (h.value().rank() != 3) throw ShapeError("graph_attention: h must be [T, N, C]");
  kernels::GatShape sh{h.value().dim(0), h.value().dim(1), h.value().dim(2), heads};
  if (heads < 1 || sh.channels % heads != 0) throw ShapeError("graph_attention: channels not divisible by heads");
  if (mask.size() != static_cast<std::size_t>(sh.frames) * sh.nodes) throw ShapeError("graph_attention: mask size");
  const bool uses_attn = opt.scoring != kernels::GatScoring::uniform;
  if (uses_attn && attn.value().numel() != 2 * static_cast<std::size_t>(sh.channels)) {
    throw ShapeError("graph_attention: attention vector must have 2*C entries");
  }
  Tensor<S> out(h.shape());
  auto alpha = std::make_shared<Tensor<S>>(Shape{sh.frames, heads, sh.nodes, sh.nodes});
  Tensor<S> zero_attn(Shape{2 * sh.channels});
  const S* attn_ptr = uses_attn ? attn.value().ptr() : zero_attn.ptr();
  kernels::gat_forward(sh, opt, h.value().ptr(), mask.data(), attn_ptr, out.ptr(), alpha->ptr());
  if (alpha_out) *alpha_out = *alpha;

  std::vector<Var<S>> parents{h};
  if (uses_attn) parents.push_back(attn);
  return make_result<S>(std::move(out), std::move(parents), [sh, opt, mask, alpha, uses_attn](Node<S>& self) {
    const auto& hv = pval(self, 0);
    Tensor<S> dh_local;
    S* dh;
    if (wants(self, 0)) {
      dh = pgrad(self, 0).ptr();
    } else {
      dh_local = Tensor<S>(hv.shape);
      dh = dh_local.ptr();
    }
    Tensor<S> dattn(Shape{2 * sh.channels});
    Tensor<S> zero_attn(Shape{2 * sh.channels});
    const S* attn_ptr = uses_attn ? pval(self, 1).ptr() : zero_attn.ptr();
    kernels::gat_backward(sh, opt, hv.ptr(), mask.data(), attn_ptr, alpha->ptr(), self.grad.ptr(), dh,
                          dattn.ptr());
    if (uses_attn && wants(self, 1)) {
      auto& ga = pgrad(self, 1);
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += dattn[i];
    }
  });
}

template <class S>
Var<S> neighbor_context(const Var<S>& s, const std::vector<std::uint8_t>& mask, kernels::NeighborQuery query,
                        Tensor<S>* weight_out) {
  if (s.value().rank() != 3) throw ShapeError("neighbor_context: s must be [T, E, C]");
  kernels::NeighborShape sh{s.value().dim(0), s.value().dim(1), s.value().dim(2)};
  if (sh.entities < 2) throw ShapeError("neighbor_context: needs at least two entities");
  if (mask.size() != static_cast<std::size_t>(sh.frames) * sh.entities) throw ShapeError("neighbor_context: mask size");
  const int nb = sh.entities - 1;
  Tensor<S> ctx(s.shape());
  auto weight = std::make_shared<Tensor<S>>(Shape{sh.frames, sh.entities, nb});
  auto probs = std::make_shared<Tensor<S>>(Shape{sh.frames, sh.entities, nb, nb});
  kernels::neighbor_forward(sh, query, s.value().ptr(), mask.data(), ctx.ptr(), weight->ptr(), probs->ptr());
  if (weight_out) *weight_out = *weight;
  return make_result<S>(std::move(ctx), {s}, [sh, query, mask, weight, probs](Node<S>& self) {
    kernels::neighbor_backward(sh, query, pval(self, 0).ptr(), mask.data(), weight->ptr(), probs->ptr(),
                               self.grad.ptr(), pgrad(self, 0).ptr());
  });
}

template <class S>
Var<S> gru_sequence(const Var<S>& xp, const Var<S>& w_hh, const Var<S>& b_hh, bool reverse) {
  if (xp.value().rank() != 3) throw ShapeError("gru_sequence: xp must be [T, B, 3H]");
  const int steps = xp.value().dim(0);
  const int batch = xp.value().dim(1);
  const int hidden = w_hh.value().dim(1);
  const int h3 = 3 * hidden;
  if (xp.value().dim(2) != h3 || w_hh.value().dim(0) != h3) throw ShapeError("gru_sequence: gate width mismatch");
  if (b_hh.value().numel() != static_cast<std::size_t>(h3)) throw ShapeError("gru_sequence: bias width");

  const idx step_h = static_cast<idx>(batch) * hidden;
  const idx step_x = static_cast<idx>(batch) * h3;
  Tensor<S> out(Shape{steps, batch, hidden});
  // Per-step caches: reset, update, candidate, and the recurrent part of the candidate pre-activation.
  auto cache = std::make_shared<Tensor<S>>(Shape{4, steps, batch, hidden});
  S* rc = cache->ptr();
  S* zc = rc + steps * step_h;
  S* nc = zc + steps * step_h;
  S* hnc = nc + steps * step_h;

  std::vector<S> hp(static_cast<std::size_t>(step_x));
  std::vector<S> h_prev(static_cast<std::size_t>(step_h), S(0));
  const S* w = w_hh.value().ptr();
  const S* bh = b_hh.value().ptr();
  auto sig = [](S v) {
    if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
    const S e = std::exp(v);
    return e / (S(1) + e);
  };
  for (int k = 0; k < steps; ++k) {
    const int t = reverse ? steps - 1 - k : k;
    kernels::gemm_nt(batch, h3, hidden, h_prev.data(), w, hp.data(), false);
    const S* x = xp.value().ptr() + t * step_x;
    S* h = out.ptr() + t * step_h;
    for (int b = 0; b < batch; ++b) {
      const S* xb = x + static_cast<idx>(b) * h3;
      const S* hb = hp.data() + static_cast<idx>(b) * h3;
      for (int j = 0; j < hidden; ++j) {
        const idx o = t * step_h + static_cast<idx>(b) * hidden + j;
        const S r = sig(xb[j] + hb[j] + bh[j]);
        const S z = sig(xb[hidden + j] + hb[hidden + j] + bh[hidden + j]);
        const S hn = hb[2 * hidden + j] + bh[2 * hidden + j];
        const S n = std::tanh(xb[2 * hidden + j] + r * hn);
        const S hprev = h_prev[static_cast<std::size_t>(b) * hidden + j];
        rc[o] = r;
        zc[o] = z;
        nc[o] = n;
        hnc[o] = hn;
        h[static_cast<idx>(b) * hidden + j] = (S(1) - z) * n + z * hprev;
      }
    }
    std::copy(h, h + step_h, h_prev.begin());
  }

  return make_result<S>(
      std::move(out), {xp, w_hh, b_hh},
      [cache, steps, batch, hidden, h3, step_h, step_x, reverse](Node<S>& self) {
        const S* rc = cache->ptr();
        const S* zc = rc + steps * step_h;
        const S* nc = zc + steps * step_h;
        const S* hnc = nc + steps * step_h;
        const S* w = pval(self, 1).ptr();
        const S* hs = self.value.ptr();
        Tensor<S> dxp_local;
        S* dxp;
        if (wants(self, 0)) {
          dxp = pgrad(self, 0).ptr();
        } else {
          dxp_local = Tensor<S>(pval(self, 0).shape);
          dxp = dxp_local.ptr();
        }
        Tensor<S> dw(Shape{h3, hidden});
        std::vector<S> db(static_cast<std::size_t>(h3), S(0));
        std::vector<S> dh_next(static_cast<std::size_t>(step_h), S(0));
        std::vector<S> dhp(static_cast<std::size_t>(step_x));
        std::vector<S> zeros(static_cast<std::size_t>(step_h), S(0));

        for (int k = steps - 1; k >= 0; --k) {
          const int t = reverse ? steps - 1 - k : k;
          const int t_prev = reverse ? t + 1 : t - 1;
          const S* hprev = k == 0 ? zeros.data() : hs + t_prev * step_h;
          const S* dout = self.grad.ptr() + t * step_h;
          S* dx = dxp + t * step_x;
          for (int b = 0; b < batch; ++b) {
            for (int j = 0; j < hidden; ++j) {
              const idx o = t * step_h + static_cast<idx>(b) * hidden + j;
              const std::size_t bj = static_cast<std::size_t>(b) * hidden + j;
              const S dh = dout[bj] + dh_next[bj];
              const S r = rc[o], z = zc[o], n = nc[o], hn = hnc[o];
              const S hp_ = hprev[bj];
              const S dn = dh * (S(1) - z);
              const S dz = dh * (hp_ - n);
              const S dan = dn * (S(1) - n * n);
              const S dr = dan * hn;
              const S dar = dr * r * (S(1) - r);
              const S daz = dz * z * (S(1) - z);
              S* dxb = dx + static_cast<idx>(b) * h3;
              dxb[j] += dar;
              dxb[hidden + j] += daz;
              dxb[2 * hidden + j] += dan;
              S* dhb = dhp.data() + static_cast<idx>(b) * h3;
              dhb[j] = dar;
              dhb[hidden + j] = daz;
              dhb[2 * hidden + j] = dan * r;
              dh_next[bj] = dh * z;
            }
          }
          kernels::gemm_tn(h3, hidden, batch, dhp.data(), hprev, dw.ptr(), true);
          for (int b = 0; b < batch; ++b) {
            for (int q = 0; q < h3; ++q) db[static_cast<std::size_t>(q)] += dhp[static_cast<std::size_t>(b) * h3 + q];
          }
          kernels::gemm_nn(batch, hidden, h3, dhp.data(), w, dh_next.data(), true);
        }
        if (wants(self, 1)) {
          auto& g = pgrad(self, 1);
          for (std::size_t i = 0; i < g.numel(); ++i) g[i] += dw[i];
        }
        if (wants(self, 2)) {
          auto& g = pgrad(self, 2);
          for (std::size_t i = 0; i < g.numel(); ++i) g[i] += db[i];
        }
      });
}

template <class S>
Var<S> temporal_depthwise3(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
  if (x.value().rank() != 3) throw ShapeError("temporal_depthwise3: x must be [T, N, C]");
  const int steps = x.value().dim(0);
  const int nodes = x.value().dim(1);
  const int ch = x.value().dim(2);
  require_shape(w.value(), Shape{3, ch}, "temporal_depthwise3 weight");
  if (b.value().numel() != static_cast<std::size_t>(ch)) throw ShapeError("temporal_depthwise3: bias width");
  const idx frame = static_cast<idx>(nodes) * ch;
  Tensor<S> y(x.shape());
  const S* xv = x.value().ptr();
  const S* wv = w.value().ptr();
  const S* bv = b.value().ptr();
  for (int t = 0; t < steps; ++t) {
    for (int n = 0; n < nodes; ++n) {
      for (int c = 0; c < ch; ++c) {
        S acc = bv[c];
        for (int d = -1; d <= 1; ++d) {
          const int ts = t + d;
          if (ts < 0 || ts >= steps) continue;
          acc += wv[(d + 1) * ch + c] * xv[ts * frame + static_cast<idx>(n) * ch + c];
        }
        y[static_cast<std::size_t>(t * frame + static_cast<idx>(n) * ch + c)] = acc;
      }
    }
  }
  return make_result<S>(std::move(y), {x, w, b}, [steps, nodes, ch, frame](Node<S>& self) {
    const S* xv = pval(self, 0).ptr();
    const S* wv = pval(self, 1).ptr();
    const S* dy = self.grad.ptr();
    const bool gx = wants(self, 0), gw = wants(self, 1), gb = wants(self, 2);
    S* dx = gx ? pgrad(self, 0).ptr() : nullptr;
    S* dw = gw ? pgrad(self, 1).ptr() : nullptr;
    S* db = gb ? pgrad(self, 2).ptr() : nullptr;
    for (int t = 0; t < steps; ++t) {
      for (int n = 0; n < nodes; ++n) {
        for (int c = 0; c < ch; ++c) {
          const S g = dy[t * frame + static_cast<idx>(n) * ch + c];
          if (gb) db[c] += g;
          for (int d = -1; d <= 1; ++d) {
            const int ts = t + d;
            if (ts < 0 || ts >= steps) continue;
            const idx src = ts * frame + static_cast<idx>(n) * ch + c;
            if (gw) dw[(d + 1) * ch + c] += g * xv[src];
            if (gx) dx[src] += g * wv[(d + 1) * ch + c];
          }
        }
      }
    }
  });
}

template <class S>
Var<S> block_pool(const Var<S>& x, const std::vector<std::vector<int>>& blocks) {
  if (x.value().rank() != 3) throw ShapeError("block_pool: x must be [T, slots, C]");
  const int steps = x.value().dim(0);
  const int slots = x.value().dim(1);
  const int ch = x.value().dim(2);
  const int nb = static_cast<int>(blocks.size());
  for (const auto& blk : blocks) {
    if (blk.empty()) throw ShapeError("block_pool: empty block");
    for (int s : blk) {
      if (s < 0 || s >= slots) throw ShapeError("block_pool: slot out of range");
    }
  }
  Tensor<S> y(Shape{1, nb * ch});
  const S* xv = x.value().ptr();
  for (int k = 0; k < nb; ++k) {
    const auto& blk = blocks[static_cast<std::size_t>(k)];
    const S inv = S(1) / static_cast<S>(static_cast<std::size_t>(steps) * blk.size());
    for (int c = 0; c < ch; ++c) {
      S sum = 0;
      for (int t = 0; t < steps; ++t) {
        for (int s : blk) sum += xv[(static_cast<idx>(t) * slots + s) * ch + c];
      }
      y[static_cast<std::size_t>(k * ch + c)] = sum * inv;
    }
  }
  return make_result<S>(std::move(y), {x}, [blocks, steps, slots, ch](Node<S>& self) {
    S* g = pgrad(self, 0).ptr();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto& blk = blocks[k];
      const S inv = S(1) / static_cast<S>(static_cast<std::size_t>(steps) * blk.size());
      for (int c = 0; c < ch; ++c) {
        const S d = self.grad[k * static_cast<std::size_t>(ch) + static_cast<std::size_t>(c)] * inv;
        for (int t = 0; t < steps; ++t) {
          for (int s : blk) g[(static_cast<idx>(t) * slots + s) * ch + c] += d;
        }
      }
    }
  });
}

template <class S>
Var<S> channel_scale(const Var<S>& x, const Var<S>& a, const std::vector<int>& slot_block) {
  if (x.value().rank() != 3) throw ShapeError("channel_scale: x must be [T, slots, C]");
  const int steps = x.value().dim(0);
  const int slots = x.value().dim(1);
  const int ch = x.value().dim(2);
  if (static_cast<int>(slot_block.size()) != slots) throw ShapeError("channel_scale: slot map size");
  const int n_blocks = static_cast<int>(a.value().numel()) / ch;
  for (int b : slot_block) {
    if (b >= n_blocks) throw ShapeError("channel_scale: block index out of range");
  }
  Tensor<S> y(x.shape());
  const S* xv = x.value().ptr();
  const S* av = a.value().ptr();
  for (int t = 0; t < steps; ++t) {
    for (int s = 0; s < slots; ++s) {
      const int b = slot_block[static_cast<std::size_t>(s)];
      const idx off = (static_cast<idx>(t) * slots + s) * ch;
      for (int c = 0; c < ch; ++c) y[static_cast<std::size_t>(off + c)] = b < 0 ? xv[off + c] : av[b * ch + c] * xv[off + c];
    }
  }
  return make_result<S>(std::move(y), {x, a}, [slot_block, steps, slots, ch](Node<S>& self) {
    const S* xv = pval(self, 0).ptr();
    const S* av = pval(self, 1).ptr();
    const S* dy = self.grad.ptr();
    S* dx = wants(self, 0) ? pgrad(self, 0).ptr() : nullptr;
    S* da = wants(self, 1) ? pgrad(self, 1).ptr() : nullptr;
    for (int t = 0; t < steps; ++t) {
      for (int s = 0; s < slots; ++s) {
        const int b = slot_block[static_cast<std::size_t>(s)];
        const idx off = (static_cast<idx>(t) * slots + s) * ch;
        for (int c = 0; c < ch; ++c) {
          if (b < 0) {
            if (dx) dx[off + c] += dy[off + c];
            continue;
          }
          if (dx) dx[off + c] += av[b * ch + c] * dy[off + c];
          if (da) da[b * ch + c] += xv[off + c] * dy[off + c];
        }
      }
    }
  });
}

#define GVHOI_INSTANTIATE_OPS(S)                                                                          \
  template Var<S> linear<S>(const Var<S>&, const Var<S>&, const Var<S>&);                                 \
  template Var<S> add<S>(const Var<S>&, const Var<S>&);                                                   \
  template Var<S> sub<S>(const Var<S>&, const Var<S>&);                                                   \
  template Var<S> mul<S>(const Var<S>&, const Var<S>&);                                                   \
  template Var<S> scale<S>(const Var<S>&, S);                                                             \
  template Var<S> add_scaled<S>(const Var<S>&, S, const Var<S>&, S);                                     \
  template Var<S> add_const<S>(const Var<S>&, const Tensor<S>&);                                          \
  template Var<S> relu<S>(const Var<S>&);                                                                 \
  template Var<S> sigmoid<S>(const Var<S>&);                                                              \
  template Var<S> tanh<S>(const Var<S>&);                                                                 \
  template Var<S> leaky_relu<S>(const Var<S>&, S);                                                        \
  template Var<S> mask_rows<S>(const Var<S>&, const std::vector<S>&);                                     \
  template Var<S> reshape<S>(const Var<S>&, Shape);                                                       \
  template Var<S> concat_last<S>(const std::vector<Var<S>>&);                                             \
  template Var<S> slice_last<S>(const Var<S>&, int, int);                                                 \
  template Var<S> gather_rows<S>(const Var<S>&, const std::vector<int>&);                                 \
  template Var<S> row_mean<S>(const Var<S>&);                                                             \
  template Var<S> expand_cols<S>(const Var<S>&, int);                                                     \
  template Var<S> sum_all<S>(const Var<S>&);                                                              \
  template Var<S> softmax_cross_entropy_sum<S>(const Var<S>&, const std::vector<int>&);                   \
  template Var<S> gumbel_softmax<S>(const Var<S>&, const Tensor<S>&, S, bool);                            \
  template Var<S> graph_attention<S>(const Var<S>&, const std::vector<std::uint8_t>&, const Var<S>&, int, \
                                     const kernels::GatOptions&, Tensor<S>*);                             \
  template Var<S> neighbor_context<S>(const Var<S>&, const std::vector<std::uint8_t>&,                    \
                                      kernels::NeighborQuery, Tensor<S>*);                                \
  template Var<S> gru_sequence<S>(const Var<S>&, const Var<S>&, const Var<S>&, bool);                     \
  template Var<S> temporal_depthwise3<S>(const Var<S>&, const Var<S>&, const Var<S>&);                    \
  template Var<S> block_pool<S>(const Var<S>&, const std::vector<std::vector<int>>&);                     \
  template Var<S> channel_scale<S>(const Var<S>&, const Var<S>&, const std::vector<int>&);

GVHOI_INSTANTIATE_OPS(float)
GVHOI_INSTANTIATE_OPS(double)

}  // namespace gvhoi::ag
