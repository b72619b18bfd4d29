#pragma once

#include <cstdint>
#include <vector>

#include "gvhoi/autograd/var.hpp"
#include "gvhoi/kernels/kernels.hpp"

namespace gvhoi::ag {

// Most ops treat a tensor as [rows, cols] with cols = last extent.

// y = x W^T + b over the last axis. W is [out, in]; b is [out] or undefined.
template <class S>
Var<S> linear(const Var<S>& x, const Var<S>& w, const Var<S>& b);

template <class S>
Var<S> add(const Var<S>& a, const Var<S>& b);
template <class S>
Var<S> sub(const Var<S>& a, const Var<S>& b);
template <class S>
Var<S> mul(const Var<S>& a, const Var<S>& b);
template <class S>
Var<S> scale(const Var<S>& a, S s);
// sa * a + sb * b
template <class S>
Var<S> add_scaled(const Var<S>& a, S sa, const Var<S>& b, S sb);
// x + c for a constant tensor c of the same shape.
template <class S>
Var<S> add_const(const Var<S>& x, const Tensor<S>& c);

template <class S>
Var<S> relu(const Var<S>& x);
template <class S>
Var<S> sigmoid(const Var<S>& x);
template <class S>
Var<S> tanh(const Var<S>& x);
template <class S>
Var<S> leaky_relu(const Var<S>& x, S slope);

// Multiplies row r (a last-axis vector) by the constant weight[r].
template <class S>
Var<S> mask_rows(const Var<S>& x, const std::vector<S>& weight);

template <class S>
Var<S> reshape(const Var<S>& x, Shape shape);

// Concatenation and slicing along the last axis.
template <class S>
Var<S> concat_last(const std::vector<Var<S>>& parts);
template <class S>
Var<S> slice_last(const Var<S>& x, int start, int len);

// Selects rows (last-axis vectors) by index; result is [indices.size(), cols].
template <class S>
Var<S> gather_rows(const Var<S>& x, const std::vector<int>& rows);

// [rows, cols] -> [rows, 1] mean over cols, and its broadcasting inverse.
template <class S>
Var<S> row_mean(const Var<S>& x);
template <class S>
Var<S> expand_cols(const Var<S>& x, int cols);

template <class S>
Var<S> sum_all(const Var<S>& x);

// Sum over rows of -log softmax(logits)[label]; rows with label < 0 are skipped.
template <class S>
Var<S> softmax_cross_entropy_sum(const Var<S>& logits, const std::vector<int>& labels);

// softmax((logits + noise) / tau) per row. noise may be empty (zero noise).
// hard: forward emits the one-hot argmax (lowest index on ties) and the
// backward pass uses the soft relaxation's gradient (straight-through).
template <class S>
Var<S> gumbel_softmax(const Var<S>& logits, const Tensor<S>& noise, S tau, bool hard);

// Masked graph attention; see kernels::gat_forward. h is [T, N, C], mask
// [T*N], attn [2C] (ignored for uniform scoring). When alpha_out is non-null
// the attention coefficients [T, heads, N, N] are copied there.
template <class S>
Var<S> graph_attention(const Var<S>& h, const std::vector<std::uint8_t>& mask, const Var<S>& attn,
                       int heads, const kernels::GatOptions& opt, Tensor<S>* alpha_out = nullptr);

// Interdependent-entity context; see kernels::neighbor_forward. s is [T, E, C].
template <class S>
Var<S> neighbor_context(const Var<S>& s, const std::vector<std::uint8_t>& mask,
                        kernels::NeighborQuery query, Tensor<S>* weight_out = nullptr);

// GRU over time with precomputed input projections.
//   xp [T, B, 3H] = x W_ih^T + b_ih, gate order (reset, update, new)
//   w_hh [3H, H], b_hh [3H]
// Returns hidden states [T, B, H]; reverse runs from T-1 down to 0.
template <class S>
Var<S> gru_sequence(const Var<S>& xp, const Var<S>& w_hh, const Var<S>& b_hh, bool reverse);

// Depthwise temporal convolution, width 3, zero padded. x [T, N, C],
// w [3, C] (taps for t-1, t, t+1), b [C].
template <class S>
Var<S> temporal_depthwise3(const Var<S>& x, const Var<S>& w, const Var<S>& b);

// Mean over time and over the slots of each block. x is [T, slots, C];
// result [1, blocks.size() * C].
template <class S>
Var<S> block_pool(const Var<S>& x, const std::vector<std::vector<int>>& blocks);

// y[t,s,c] = a[slot_block[s], c] * x[t,s,c]; slots with slot_block < 0 are
// passed through unchanged. x [T, slots, C], a [1, n_blocks * C].
template <class S>
Var<S> channel_scale(const Var<S>& x, const Var<S>& a, const std::vector<int>& slot_block);

}  // namespace gvhoi::ag
