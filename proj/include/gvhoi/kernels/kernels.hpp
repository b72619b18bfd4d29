#pragma once

// Hot loops of the pipeline. Two implementations of every kernel:
//
//   gvhoi::kernels::*            OpenMP-parallel, cache-friendly loop order
//   gvhoi::kernels::reference::* naive serial loops, kept for testing
//
// Both accumulate every output element in the same order, so their results
// are bit-identical (tests assert exact equality). Cross-frame reductions in
// the parallel versions go through per-frame partial buffers that are summed
// serially in frame order, which keeps results independent of thread count.

#include <cstdint>

namespace gvhoi::kernels {

// C[m,n] = (accumulate ? C : 0) + A[m,k] * B[k,n]
template <class S>
void gemm_nn(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate);

// C[m,n] = (accumulate ? C : 0) + A[m,k] * B[n,k]^T
template <class S>
void gemm_nt(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate);

// C[m,n] = (accumulate ? C : 0) + A[k,m]^T * B[k,n]
template <class S>
void gemm_tn(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate);

enum class GatScoring : std::uint8_t { v1, v2, uniform };

struct GatShape {
  int frames = 0;
  int nodes = 0;     // all keypoints of all entities in a frame
  int channels = 0;  // C1
  int heads = 1;
};

struct GatOptions {
  GatScoring scoring = GatScoring::v1;
  bool include_self_in_sum = false;
  double leaky_slope = 0.2;
};

// Masked graph attention over a fully connected graph per frame.
//   h     [frames, nodes, channels]  projected keypoint features
//   mask  [frames, nodes]            1 = valid keypoint
//   attn  [2 * channels]             [a_left | a_right]; head h owns the
//                                    channel slice [h*c/heads, (h+1)*c/heads)
//   out   [frames, nodes, channels]
//   alpha [frames, heads, nodes, nodes]
template <class S>
void gat_forward(const GatShape& shape, const GatOptions& opt, const S* h, const std::uint8_t* mask,
                 const S* attn, S* out, S* alpha);

// Accumulates into dh [frames,nodes,channels] and dattn [2*channels].
template <class S>
void gat_backward(const GatShape& shape, const GatOptions& opt, const S* h, const std::uint8_t* mask,
                  const S* attn, const S* alpha, const S* dout, S* dh, S* dattn);

enum class NeighborQuery : std::uint8_t { neighbor, target };

struct NeighborShape {
  int frames = 0;
  int entities = 0;
  int channels = 0;
};

// Dot-product neighbor attention and mean reduction of the weighted neighbor
// stack, per frame and target entity.
//   s      [frames, entities, channels]   neighbor features S^u
//   mask   [frames, entities]
//   ctx    [frames, entities, channels]   mean_j W_j * S_j over valid neighbors
//   weight [frames, entities, entities-1] W (canonical neighbor order)
//   probs  [frames, entities, entities-1, entities-1] softmax cache
template <class S>
void neighbor_forward(const NeighborShape& shape, NeighborQuery query, const S* s,
                      const std::uint8_t* mask, S* ctx, S* weight, S* probs);

template <class S>
void neighbor_backward(const NeighborShape& shape, NeighborQuery query, const S* s,
                       const std::uint8_t* mask, const S* weight, const S* probs, const S* dctx,
                       S* ds);

namespace reference {

template <class S>
void gemm_nn(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate);
template <class S>
void gemm_nt(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate);
template <class S>
void gemm_tn(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate);

template <class S>
void gat_forward(const GatShape& shape, const GatOptions& opt, const S* h, const std::uint8_t* mask,
                 const S* attn, S* out, S* alpha);
template <class S>
void gat_backward(const GatShape& shape, const GatOptions& opt, const S* h, const std::uint8_t* mask,
                  const S* attn, const S* alpha, const S* dout, S* dh, S* dattn);

template <class S>
void neighbor_forward(const NeighborShape& shape, NeighborQuery query, const S* s,
                      const std::uint8_t* mask, S* ctx, S* weight, S* probs);
template <class S>
void neighbor_backward(const NeighborShape& shape, NeighborQuery query, const S* s,
                       const std::uint8_t* mask, const S* weight, const S* probs, const S* dctx,
                       S* ds);

}  // namespace reference

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace gvhoi::kernels
