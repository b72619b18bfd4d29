#include "gvhoi/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gvhoi::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

using idx = std::ptrdiff_t;

template <class S>
inline S leaky(S x, S slope) {
  return x > S(0) ? x : slope * x;
}

template <class S>
inline S leaky_grad(S x, S slope) {
  return x > S(0) ? S(1) : slope;
}

// ---------------------------------------------------------------------------
// GAT, one frame. alpha is [heads, n, n] for this frame.

template <class S>
void gat_frame_forward(const GatShape& sh, const GatOptions& opt, const S* h, const std::uint8_t* m,
                       const S* attn, S* out, S* alpha, std::vector<S>& scratch) {
  const int n = sh.nodes;
  const int c = sh.channels;
  const int ch = c / sh.heads;
  const S slope = static_cast<S>(opt.leaky_slope);
  const S* a_l = attn;
  const S* a_r = attn + c;

  std::fill(out, out + static_cast<idx>(n) * c, S(0));
  std::fill(alpha, alpha + static_cast<idx>(sh.heads) * n * n, S(0));

  int n_valid = 0;
  for (int i = 0; i < n; ++i) n_valid += m[i] ? 1 : 0;
  if (n_valid == 0) return;

  scratch.resize(2 * static_cast<std::size_t>(n));
  S* s1 = scratch.data();
  S* s2 = scratch.data() + n;

  for (int hd = 0; hd < sh.heads; ++hd) {
    const int c0 = hd * ch;
    S* al = alpha + static_cast<idx>(hd) * n * n;

    if (opt.scoring == GatScoring::v1) {
      for (int i = 0; i < n; ++i) {
        S l = 0, r = 0;
        const S* hi = h + static_cast<idx>(i) * c + c0;
        for (int q = 0; q < ch; ++q) {
          l += a_l[c0 + q] * hi[q];
          r += a_r[c0 + q] * hi[q];
        }
        s1[i] = l;
        s2[i] = r;
      }
    }

    for (int i = 0; i < n; ++i) {
      if (!m[i]) continue;
      S* row = al + static_cast<idx>(i) * n;
      if (opt.scoring == GatScoring::uniform) {
        const S w = S(1) / static_cast<S>(n_valid);
        for (int j = 0; j < n; ++j) row[j] = m[j] ? w : S(0);
      } else {
        S mx = -std::numeric_limits<S>::infinity();
        for (int j = 0; j < n; ++j) {
          if (!m[j]) continue;
          S e;
          if (opt.scoring == GatScoring::v1) {
            e = leaky(s1[i] + s2[j], slope);
          } else {
            e = 0;
            const S* hi = h + static_cast<idx>(i) * c + c0;
            const S* hj = h + static_cast<idx>(j) * c + c0;
            for (int q = 0; q < ch; ++q) e += a_l[c0 + q] * leaky(hi[q] + hj[q], slope);
          }
          row[j] = e;
          mx = std::max(mx, e);
        }
        S z = 0;
        for (int j = 0; j < n; ++j) {
          if (!m[j]) continue;
          row[j] = std::exp(row[j] - mx);
          z += row[j];
        }
        for (int j = 0; j < n; ++j) row[j] = m[j] ? row[j] / z : S(0);
      }

      S* oi = out + static_cast<idx>(i) * c + c0;
      for (int j = 0; j < n; ++j) {
        if (!m[j]) continue;
        const S w = row[j];
        const S* hj = h + static_cast<idx>(j) * c + c0;
        for (int q = 0; q < ch; ++q) oi[q] += w * hj[q];
      }
      if (opt.include_self_in_sum) {
        const S w = row[i];
        const S* hi = h + static_cast<idx>(i) * c + c0;
        for (int q = 0; q < ch; ++q) oi[q] += w * hi[q];
      }
    }
  }
}

// dattn_frame receives this frame's partial [2c] (overwritten).
template <class S>
void gat_frame_backward(const GatShape& sh, const GatOptions& opt, const S* h, const std::uint8_t* m,
                        const S* attn, const S* alpha, const S* dout, S* dh, S* dattn_frame,
                        std::vector<S>& scratch) {
  const int n = sh.nodes;
  const int c = sh.channels;
  const int ch = c / sh.heads;
  const S slope = static_cast<S>(opt.leaky_slope);
  const S* a_l = attn;
  const S* a_r = attn + c;
  std::fill(dattn_frame, dattn_frame + 2 * static_cast<idx>(c), S(0));

  scratch.resize(static_cast<std::size_t>(n) * n + 4 * static_cast<std::size_t>(n));
  S* dscore = scratch.data();  // [n, n]
  S* s1 = dscore + static_cast<idx>(n) * n;
  S* s2 = s1 + n;
  S* ds1 = s2 + n;
  S* ds2 = ds1 + n;

  for (int hd = 0; hd < sh.heads; ++hd) {
    const int c0 = hd * ch;
    const S* al = alpha + static_cast<idx>(hd) * n * n;

    // Value path and d alpha.
    for (int i = 0; i < n; ++i) {
      S* drow = dscore + static_cast<idx>(i) * n;
      std::fill(drow, drow + n, S(0));
      if (!m[i]) continue;
      const S* row = al + static_cast<idx>(i) * n;
      const S* doi = dout + static_cast<idx>(i) * c + c0;
      for (int j = 0; j < n; ++j) {
        if (!m[j]) continue;
        const S* hj = h + static_cast<idx>(j) * c + c0;
        S* dhj = dh + static_cast<idx>(j) * c + c0;
        S dot = 0;
        for (int q = 0; q < ch; ++q) {
          dot += doi[q] * hj[q];
          dhj[q] += row[j] * doi[q];
        }
        drow[j] = dot;
      }
      if (opt.include_self_in_sum) {
        const S* hi = h + static_cast<idx>(i) * c + c0;
        S* dhi = dh + static_cast<idx>(i) * c + c0;
        S dot = 0;
        for (int q = 0; q < ch; ++q) {
          dot += doi[q] * hi[q];
          dhi[q] += row[i] * doi[q];
        }
        drow[i] += dot;
      }
    }
    if (opt.scoring == GatScoring::uniform) continue;

    // Softmax backward: d alpha -> d score, in place.
    for (int i = 0; i < n; ++i) {
      if (!m[i]) continue;
      const S* row = al + static_cast<idx>(i) * n;
      S* drow = dscore + static_cast<idx>(i) * n;
      S inner = 0;
      for (int j = 0; j < n; ++j) inner += row[j] * drow[j];
      for (int j = 0; j < n; ++j) drow[j] = m[j] ? row[j] * (drow[j] - inner) : S(0);
    }

    if (opt.scoring == GatScoring::v1) {
      for (int i = 0; i < n; ++i) {
        S l = 0, r = 0;
        const S* hi = h + static_cast<idx>(i) * c + c0;
        for (int q = 0; q < ch; ++q) {
          l += a_l[c0 + q] * hi[q];
          r += a_r[c0 + q] * hi[q];
        }
        s1[i] = l;
        s2[i] = r;
        ds1[i] = 0;
        ds2[i] = 0;
      }
      for (int i = 0; i < n; ++i) {
        if (!m[i]) continue;
        const S* drow = dscore + static_cast<idx>(i) * n;
        for (int j = 0; j < n; ++j) {
          if (!m[j]) continue;
          const S dz = drow[j] * leaky_grad(s1[i] + s2[j], slope);
          ds1[i] += dz;
          ds2[j] += dz;
        }
      }
      for (int i = 0; i < n; ++i) {
        const S* hi = h + static_cast<idx>(i) * c + c0;
        S* dhi = dh + static_cast<idx>(i) * c + c0;
        for (int q = 0; q < ch; ++q) {
          dattn_frame[c0 + q] += ds1[i] * hi[q];
          dattn_frame[c + c0 + q] += ds2[i] * hi[q];
          dhi[q] += ds1[i] * a_l[c0 + q] + ds2[i] * a_r[c0 + q];
        }
      }
    } else {
      for (int i = 0; i < n; ++i) {
        if (!m[i]) continue;
        const S* drow = dscore + static_cast<idx>(i) * n;
        const S* hi = h + static_cast<idx>(i) * c + c0;
        S* dhi = dh + static_cast<idx>(i) * c + c0;
        for (int j = 0; j < n; ++j) {
          if (!m[j]) continue;
          const S de = drow[j];
          const S* hj = h + static_cast<idx>(j) * c + c0;
          S* dhj = dh + static_cast<idx>(j) * c + c0;
          for (int q = 0; q < ch; ++q) {
            const S z = hi[q] + hj[q];
            dattn_frame[c0 + q] += de * leaky(z, slope);
            const S g = de * a_l[c0 + q] * leaky_grad(z, slope);
            dhi[q] += g;
            dhj[q] += g;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Interdependent entity graph, one frame.

inline int neighbor_entity(int e, int j) { return j < e ? j : j + 1; }

template <class S>
void neighbor_frame_forward(const NeighborShape& sh, NeighborQuery query, const S* s,
                            const std::uint8_t* m, S* ctx, S* weight, S* probs) {
  const int ne = sh.entities;
  const int c = sh.channels;
  const int nb = ne - 1;
  const S inv_sqrt_d = S(1) / std::sqrt(static_cast<S>(c));
  std::fill(ctx, ctx + static_cast<idx>(ne) * c, S(0));
  std::fill(weight, weight + static_cast<idx>(ne) * nb, S(0));
  std::fill(probs, probs + static_cast<idx>(ne) * nb * nb, S(0));

  std::vector<S> logits(static_cast<std::size_t>(nb));
  for (int e = 0; e < ne; ++e) {
    S* w = weight + static_cast<idx>(e) * nb;
    S* pe = probs + static_cast<idx>(e) * nb * nb;
    int n_valid = 0;
    for (int j = 0; j < nb; ++j) n_valid += m[neighbor_entity(e, j)] ? 1 : 0;
    if (n_valid == 0) {
      std::fill(w, w + nb, S(1));
      continue;
    }
    if (!m[e]) continue;

    auto softmax_into = [&](const S* query_vec, S* p) {
      S mx = -std::numeric_limits<S>::infinity();
      for (int j = 0; j < nb; ++j) {
        const int uj = neighbor_entity(e, j);
        if (!m[uj]) continue;
        const S* sj = s + static_cast<idx>(uj) * c;
        S dot = 0;
        for (int q = 0; q < c; ++q) dot += sj[q] * query_vec[q];
        logits[j] = dot * inv_sqrt_d;
        mx = std::max(mx, logits[j]);
      }
      S z = 0;
      for (int j = 0; j < nb; ++j) {
        if (!m[neighbor_entity(e, j)]) continue;
        p[j] = std::exp(logits[j] - mx);
        z += p[j];
      }
      for (int j = 0; j < nb; ++j) p[j] = m[neighbor_entity(e, j)] ? p[j] / z : S(0);
    };

    if (query == NeighborQuery::neighbor) {
      for (int u = 0; u < nb; ++u) {
        const int uu = neighbor_entity(e, u);
        if (!m[uu]) continue;
        S* p = pe + static_cast<idx>(u) * nb;
        softmax_into(s + static_cast<idx>(uu) * c, p);
        for (int j = 0; j < nb; ++j) w[j] += p[j];
      }
    } else {
      S* p = pe;
      softmax_into(s + static_cast<idx>(e) * c, p);
      for (int j = 0; j < nb; ++j) w[j] = static_cast<S>(n_valid) * p[j];
    }

    S* ce = ctx + static_cast<idx>(e) * c;
    const S inv_n = S(1) / static_cast<S>(n_valid);
    for (int j = 0; j < nb; ++j) {
      const int uj = neighbor_entity(e, j);
      if (!m[uj]) continue;
      const S* sj = s + static_cast<idx>(uj) * c;
      const S wj = w[j] * inv_n;
      for (int q = 0; q < c; ++q) ce[q] += wj * sj[q];
    }
  }
}

template <class S>
void neighbor_frame_backward(const NeighborShape& sh, NeighborQuery query, const S* s,
                             const std::uint8_t* m, const S* weight, const S* probs, const S* dctx,
                             S* ds) {
  const int ne = sh.entities;
  const int c = sh.channels;
  const int nb = ne - 1;
  const S inv_sqrt_d = S(1) / std::sqrt(static_cast<S>(c));
  std::vector<S> dw(static_cast<std::size_t>(nb));
  std::vector<S> dl(static_cast<std::size_t>(nb));

  for (int e = 0; e < ne; ++e) {
    if (!m[e]) continue;
    int n_valid = 0;
    for (int j = 0; j < nb; ++j) n_valid += m[neighbor_entity(e, j)] ? 1 : 0;
    if (n_valid == 0) continue;
    const S inv_n = S(1) / static_cast<S>(n_valid);
    const S* w = weight + static_cast<idx>(e) * nb;
    const S* pe = probs + static_cast<idx>(e) * nb * nb;
    const S* dce = dctx + static_cast<idx>(e) * c;

    for (int j = 0; j < nb; ++j) {
      const int uj = neighbor_entity(e, j);
      dw[j] = 0;
      if (!m[uj]) continue;
      const S* sj = s + static_cast<idx>(uj) * c;
      S* dsj = ds + static_cast<idx>(uj) * c;
      S dot = 0;
      const S wj = w[j] * inv_n;
      for (int q = 0; q < c; ++q) {
        dot += dce[q] * sj[q];
        dsj[q] += wj * dce[q];
      }
      dw[j] = dot * inv_n;
    }

    // Backward through one softmax whose query vector is query_vec.
    auto softmax_back = [&](const S* p, const S* dp_in, S scale, int query_entity) {
      S inner = 0;
      for (int j = 0; j < nb; ++j) inner += p[j] * scale * dp_in[j];
      for (int j = 0; j < nb; ++j) {
        dl[j] = m[neighbor_entity(e, j)] ? p[j] * (scale * dp_in[j] - inner) : S(0);
      }
      const S* qv = s + static_cast<idx>(query_entity) * c;
      S* dqv = ds + static_cast<idx>(query_entity) * c;
      for (int j = 0; j < nb; ++j) {
        const int uj = neighbor_entity(e, j);
        if (!m[uj]) continue;
        const S g = dl[j] * inv_sqrt_d;
        const S* sj = s + static_cast<idx>(uj) * c;
        S* dsj = ds + static_cast<idx>(uj) * c;
        for (int q = 0; q < c; ++q) {
          dsj[q] += g * qv[q];
          dqv[q] += g * sj[q];
        }
      }
    };

    if (query == NeighborQuery::neighbor) {
      for (int u = 0; u < nb; ++u) {
        const int uu = neighbor_entity(e, u);
        if (!m[uu]) continue;
        softmax_back(pe + static_cast<idx>(u) * nb, dw.data(), S(1), uu);
      }
    } else {
      softmax_back(pe, dw.data(), static_cast<S>(n_valid), e);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Parallel kernels

template <class S>
void gemm_nn(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate) {
#pragma omp parallel
  {
    std::vector<S> acc(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      std::fill(acc.begin(), acc.end(), S(0));
      const S* ai = a + static_cast<idx>(i) * k;
      for (int p = 0; p < k; ++p) {
        const S av = ai[p];
        const S* bp = b + static_cast<idx>(p) * n;
        S* accp = acc.data();
        for (int j = 0; j < n; ++j) accp[j] += av * bp[j];
      }
      S* ci = c + static_cast<idx>(i) * n;
      if (accumulate) {
        for (int j = 0; j < n; ++j) ci[j] += acc[static_cast<std::size_t>(j)];
      } else {
        std::copy(acc.begin(), acc.end(), ci);
      }
    }
  }
}

template <class S>
void gemm_nt(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate) {
  std::vector<S> bt(static_cast<std::size_t>(k) * n);
  for (int j = 0; j < n; ++j) {
    for (int p = 0; p < k; ++p) bt[static_cast<std::size_t>(p) * n + j] = b[static_cast<idx>(j) * k + p];
  }
  gemm_nn(m, n, k, a, bt.data(), c, accumulate);
}

template <class S>
void gemm_tn(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate) {
#pragma omp parallel
  {
    std::vector<S> acc(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      std::fill(acc.begin(), acc.end(), S(0));
      for (int p = 0; p < k; ++p) {
        const S av = a[static_cast<idx>(p) * m + i];
        const S* bp = b + static_cast<idx>(p) * n;
        S* accp = acc.data();
        for (int j = 0; j < n; ++j) accp[j] += av * bp[j];
      }
      S* ci = c + static_cast<idx>(i) * n;
      if (accumulate) {
        for (int j = 0; j < n; ++j) ci[j] += acc[static_cast<std::size_t>(j)];
      } else {
        std::copy(acc.begin(), acc.end(), ci);
      }
    }
  }
}

template <class S>
void gat_forward(const GatShape& sh, const GatOptions& opt, const S* h, const std::uint8_t* mask,
                 const S* attn, S* out, S* alpha) {
  const idx frame_feat = static_cast<idx>(sh.nodes) * sh.channels;
  const idx frame_alpha = static_cast<idx>(sh.heads) * sh.nodes * sh.nodes;
#pragma omp parallel
  {
    std::vector<S> scratch;
#pragma omp for schedule(static)
    for (int t = 0; t < sh.frames; ++t) {
      gat_frame_forward(sh, opt, h + t * frame_feat, mask + static_cast<idx>(t) * sh.nodes, attn,
                        out + t * frame_feat, alpha + t * frame_alpha, scratch);
    }
  }
}

template <class S>
void gat_backward(const GatShape& sh, const GatOptions& opt, const S* h, const std::uint8_t* mask,
                  const S* attn, const S* alpha, const S* dout, S* dh, S* dattn) {
  const idx frame_feat = static_cast<idx>(sh.nodes) * sh.channels;
  const idx frame_alpha = static_cast<idx>(sh.heads) * sh.nodes * sh.nodes;
  const idx na = 2 * static_cast<idx>(sh.channels);
  std::vector<S> partial(static_cast<std::size_t>(sh.frames * na));
#pragma omp parallel
  {
    std::vector<S> scratch;
#pragma omp for schedule(static)
    for (int t = 0; t < sh.frames; ++t) {
      gat_frame_backward(sh, opt, h + t * frame_feat, mask + static_cast<idx>(t) * sh.nodes, attn,
                         alpha + t * frame_alpha, dout + t * frame_feat, dh + t * frame_feat,
                         partial.data() + t * na, scratch);
    }
  }
  for (int t = 0; t < sh.frames; ++t) {
    for (idx q = 0; q < na; ++q) dattn[q] += partial[static_cast<std::size_t>(t * na + q)];
  }
}

template <class S>
void neighbor_forward(const NeighborShape& sh, NeighborQuery query, const S* s,
                      const std::uint8_t* mask, S* ctx, S* weight, S* probs) {
  const idx ff = static_cast<idx>(sh.entities) * sh.channels;
  const idx nb = sh.entities - 1;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < sh.frames; ++t) {
    neighbor_frame_forward(sh, query, s + t * ff, mask + static_cast<idx>(t) * sh.entities,
                           ctx + t * ff, weight + t * sh.entities * nb,
                           probs + t * sh.entities * nb * nb);
  }
}

template <class S>
void neighbor_backward(const NeighborShape& sh, NeighborQuery query, const S* s,
                       const std::uint8_t* mask, const S* weight, const S* probs, const S* dctx,
                       S* ds) {
  const idx ff = static_cast<idx>(sh.entities) * sh.channels;
  const idx nb = sh.entities - 1;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < sh.frames; ++t) {
    neighbor_frame_backward(sh, query, s + t * ff, mask + static_cast<idx>(t) * sh.entities,
                            weight + t * sh.entities * nb, probs + t * sh.entities * nb * nb,
                            dctx + t * ff, ds + t * ff);
  }
}

// ---------------------------------------------------------------------------
// Serial reference

namespace reference {

template <class S>
void gemm_nn(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      S sum = 0;
      for (int p = 0; p < k; ++p) sum += a[static_cast<idx>(i) * k + p] * b[static_cast<idx>(p) * n + j];
      S& out = c[static_cast<idx>(i) * n + j];
      out = accumulate ? out + sum : sum;
    }
  }
}

template <class S>
void gemm_nt(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      S sum = 0;
      for (int p = 0; p < k; ++p) sum += a[static_cast<idx>(i) * k + p] * b[static_cast<idx>(j) * k + p];
      S& out = c[static_cast<idx>(i) * n + j];
      out = accumulate ? out + sum : sum;
    }
  }
}

template <class S>
void gemm_tn(int m, int n, int k, const S* a, const S* b, S* c, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      S sum = 0;
      for (int p = 0; p < k; ++p) sum += a[static_cast<idx>(p) * m + i] * b[static_cast<idx>(p) * n + j];
      S& out = c[static_cast<idx>(i) * n + j];
      out = accumulate ? out + sum : sum;
    }
  }
}

template <class S>
void gat_forward(const GatShape& sh, const GatOptions& opt, const S* h, const std::uint8_t* mask,
                 const S* attn, S* out, S* alpha) {
  const idx frame_feat = static_cast<idx>(sh.nodes) * sh.channels;
  const idx frame_alpha = static_cast<idx>(sh.heads) * sh.nodes * sh.nodes;
  std::vector<S> scratch;
  for (int t = 0; t < sh.frames; ++t) {
    gat_frame_forward(sh, opt, h + t * frame_feat, mask + static_cast<idx>(t) * sh.nodes, attn,
                      out + t * frame_feat, alpha + t * frame_alpha, scratch);
  }
}

template <class S>
void gat_backward(const GatShape& sh, const GatOptions& opt, const S* h, const std::uint8_t* mask,
                  const S* attn, const S* alpha, const S* dout, S* dh, S* dattn) {
  const idx frame_feat = static_cast<idx>(sh.nodes) * sh.channels;
  const idx frame_alpha = static_cast<idx>(sh.heads) * sh.nodes * sh.nodes;
  const idx na = 2 * static_cast<idx>(sh.channels);
  std::vector<S> partial(static_cast<std::size_t>(na));
  std::vector<S> scratch;
  for (int t = 0; t < sh.frames; ++t) {
    gat_frame_backward(sh, opt, h + t * frame_feat, mask + static_cast<idx>(t) * sh.nodes, attn,
                       alpha + t * frame_alpha, dout + t * frame_feat, dh + t * frame_feat,
                       partial.data(), scratch);
    for (idx q = 0; q < na; ++q) dattn[q] += partial[static_cast<std::size_t>(q)];
  }
}

template <class S>
void neighbor_forward(const NeighborShape& sh, NeighborQuery query, const S* s,
                      const std::uint8_t* mask, S* ctx, S* weight, S* probs) {
  const idx ff = static_cast<idx>(sh.entities) * sh.channels;
  const idx nb = sh.entities - 1;
  for (int t = 0; t < sh.frames; ++t) {
    neighbor_frame_forward(sh, query, s + t * ff, mask + static_cast<idx>(t) * sh.entities,
                           ctx + t * ff, weight + t * sh.entities * nb,
                           probs + t * sh.entities * nb * nb);
  }
}

template <class S>
void neighbor_backward(const NeighborShape& sh, NeighborQuery query, const S* s,
                       const std::uint8_t* mask, const S* weight, const S* probs, const S* dctx,
                       S* ds) {
  const idx ff = static_cast<idx>(sh.entities) * sh.channels;
  const idx nb = sh.entities - 1;
  for (int t = 0; t < sh.frames; ++t) {
    neighbor_frame_backward(sh, query, s + t * ff, mask + static_cast<idx>(t) * sh.entities,
                            weight + t * sh.entities * nb, probs + t * sh.entities * nb * nb,
                            dctx + t * ff, ds + t * ff);
  }
}

}  // namespace reference

}  // namespace gvhoi::kernels

#define GVHOI_INSTANTIATE_KERNELS(NS, S)                                                           \
  template void NS::gemm_nn<S>(int, int, int, const S*, const S*, S*, bool);                       \
  template void NS::gemm_nt<S>(int, int, int, const S*, const S*, S*, bool);                       \
  template void NS::gemm_tn<S>(int, int, int, const S*, const S*, S*, bool);                       \
  template void NS::gat_forward<S>(const GatShape&, const GatOptions&, const S*,                   \
                                   const std::uint8_t*, const S*, S*, S*);                         \
  template void NS::gat_backward<S>(const GatShape&, const GatOptions&, const S*,                  \
                                    const std::uint8_t*, const S*, const S*, const S*, S*, S*);    \
  template void NS::neighbor_forward<S>(const NeighborShape&, NeighborQuery, const S*,             \
                                        const std::uint8_t*, S*, S*, S*);                          \
  template void NS::neighbor_backward<S>(const NeighborShape&, NeighborQuery, const S*,            \
                                         const std::uint8_t*, const S*, const S*, const S*, S*);

GVHOI_INSTANTIATE_KERNELS(gvhoi::kernels, float)
GVHOI_INSTANTIATE_KERNELS(gvhoi::kernels, double)
GVHOI_INSTANTIATE_KERNELS(gvhoi::kernels::reference, float)
GVHOI_INSTANTIATE_KERNELS(gvhoi::kernels::reference, double)

