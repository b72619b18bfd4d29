#include "gvhoi/temporal_head.hpp"

#include <algorithm>
#include <cmath>

namespace gvhoi {

double temperature_at(const GumbelConfig& cfg, long step) {
  return std::max(cfg.min_temperature, cfg.temperature * std::exp(-cfg.anneal_rate * static_cast<double>(step)));
}

template <class S>
GruParams<S> GruParams<S>::make(ParamSet<S>& ps, const CounterRng& rng, const std::string& name, int in,
                                int hidden) {
  GruParams p;
  p.ih = Linear<S>::make(ps, rng, name + ".ih", in, 3 * hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.w_hh = ps.add(name + ".w_hh", uniform_init<S>(Shape{3 * hidden, hidden}, bound, rng.fork(name + ".w_hh")));
  p.b_hh = ps.add(name + ".b_hh", Tensor<S>(Shape{3 * hidden}));
  return p;
}

template <class S>
HeadParams<S> HeadParams<S>::make(ParamSet<S>& ps, const CounterRng& rng, const HeadConfig& cfg, int c3, int n_sub,
                                  int n_affordances) {
  if (n_sub < 1) throw ConfigError("temporal head needs at least one human sub-activity class");
  const int hidden = cfg.hidden > 0 ? cfg.hidden : std::max(1, c3 / 2);
  const int in = c3 + (cfg.boundary_mode == BoundaryMode::concat ? 1 : 0);
  HeadParams p;
  p.boundary = Linear<S>::make(ps, rng, "boundary", c3, 2);
  p.gru_fwd = GruParams<S>::make(ps, rng, "gru_fwd", in, hidden);
  p.gru_bwd = GruParams<S>::make(ps, rng, "gru_bwd", in, hidden);
  p.classifier_human = Linear<S>::make(ps, rng, "cls_human", 2 * hidden, n_sub);
  if (n_affordances > 0) p.classifier_object = Linear<S>::make(ps, rng, "cls_object", 2 * hidden, n_affordances);
  return p;
}

template <class S>
Tensor<S> gumbel_noise(const CounterRng& rng, int rows, int cols) {
  Tensor<S> t(Shape{rows, cols});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(rng.gumbel(i));
  return t;
}

template <class S>
Var<S> gumbel_softmax(const Var<S>& logits, const Tensor<S>& noise, const GumbelConfig& cfg, double tau) {
  if (!(tau > 0.0)) throw ConfigError("gumbel temperature must be positive");
  return ag::gumbel_softmax(logits, noise, static_cast<S>(tau), cfg.hard);
}

template <class S>
BoundaryOutput<S> boundary_sample(const Var<S>& refined, const HeadParams<S>& params, const GumbelConfig& cfg,
                                  double tau, const Tensor<S>& noise) {
  const auto& shape = refined.shape();
  if (shape.size() != 3) throw ShapeError("boundary_sample: expected [T, E, C3]");
  const int frames = shape[0];
  const int entities = shape[1];
  const int rows = frames * entities;
  Var<S> logits = ag::reshape(params.boundary(refined), Shape{rows, 2});
  Var<S> y = gumbel_softmax(logits, noise, cfg, tau);
  Var<S> b = ag::slice_last(y, 1, 1);
  // Frame 0 always opens a segment: zero the sampled value there and add 1.
  std::vector<S> keep(static_cast<std::size_t>(rows), S(1));
  Tensor<S> first(Shape{rows, 1});
  for (int e = 0; e < entities; ++e) {
    keep[static_cast<std::size_t>(e)] = S(0);
    first[static_cast<std::size_t>(e)] = S(1);
  }
  b = ag::add_const(ag::mask_rows(b, keep), first);
  BoundaryOutput<S> out;
  out.decisions.resize(static_cast<std::size_t>(rows));
  const auto& yv = y.value();
  for (int r = 0; r < rows; ++r) {
    out.decisions[static_cast<std::size_t>(r)] =
        r < entities || yv[static_cast<std::size_t>(r) * 2 + 1] > yv[static_cast<std::size_t>(r) * 2] ? 1 : 0;
  }
  out.probability = ag::reshape(b, Shape{frames, entities, 1});
  return out;
}

template <class S>
BoundaryOutput<S> uniform_boundary(int frames, int entities) {
  Tensor<S> half(Shape{frames, entities, 1});
  half.fill(S(0.5));
  BoundaryOutput<S> out;
  out.probability = Var<S>(std::move(half));
  out.decisions.assign(static_cast<std::size_t>(frames) * entities, 0);
  for (int e = 0; e < entities && frames > 0; ++e) out.decisions[static_cast<std::size_t>(e)] = 1;
  return out;
}

template <class S>
HeadOutput<S> bigru_classify(const Var<S>& refined, const Var<S>& boundary, const HeadParams<S>& params,
                             int human_slots) {
  const auto& shape = refined.shape();
  if (shape.size() != 3) throw ShapeError("bigru_classify: expected [T, E, C3]");
  const int frames = shape[0];
  const int entities = shape[1];
  if (human_slots < 0 || human_slots > entities) throw ShapeError("bigru_classify: human slot count out of range");
  Var<S> x = boundary.defined() ? ag::concat_last<S>({refined, boundary}) : refined;
  if (x.value().cols() != params.gru_fwd.ih.in()) {
    throw ShapeError("bigru_classify: input width " + std::to_string(x.value().cols()) + " does not match " +
                     std::to_string(params.gru_fwd.ih.in()));
  }
  Var<S> hf = ag::gru_sequence(params.gru_fwd.ih(x), params.gru_fwd.w_hh, params.gru_fwd.b_hh, false);
  Var<S> hb = ag::gru_sequence(params.gru_bwd.ih(x), params.gru_bwd.w_hh, params.gru_bwd.b_hh, true);
  const int width = 2 * params.gru_fwd.hidden();
  Var<S> h = ag::reshape(ag::concat_last<S>({hf, hb}), Shape{frames * entities, width});

  HeadOutput<S> out;
  for (int t = 0; t < frames; ++t) {
    for (int e = 0; e < entities; ++e) (e < human_slots ? out.human_rows : out.object_rows).push_back(t * entities + e);
  }
  if (!out.human_rows.empty()) out.human_logits = params.classifier_human(ag::gather_rows(h, out.human_rows));
  if (!out.object_rows.empty() && params.has_object_classifier()) {
    out.object_logits = params.classifier_object(ag::gather_rows(h, out.object_rows));
  }
  return out;
}

template <class S>
LossBreakdown<S> head_loss(const HeadOutput<S>& out, const std::vector<int>& labels) {
  auto pick = [&](const std::vector<int>& rows, int& count) {
    std::vector<int> sel(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<std::size_t>(rows[i]) >= labels.size()) throw ShapeError("head_loss: label vector too short");
      sel[i] = labels[static_cast<std::size_t>(rows[i])];
      if (sel[i] >= 0) ++count;
    }
    return sel;
  };
  LossBreakdown<S> lb;
  std::vector<Var<S>> terms;
  if (out.human_logits.defined()) {
    const auto sel = pick(out.human_rows, lb.human_count);
    if (lb.human_count > 0) {
      Var<S> ce = ag::softmax_cross_entropy_sum(out.human_logits, sel);
      lb.human = static_cast<double>(ce.value()[0]) / lb.human_count;
      terms.push_back(ce);
    }
  }
  if (out.object_logits.defined()) {
    const auto sel = pick(out.object_rows, lb.object_count);
    if (lb.object_count > 0) {
      Var<S> ce = ag::softmax_cross_entropy_sum(out.object_logits, sel);
      lb.object = static_cast<double>(ce.value()[0]) / lb.object_count;
      terms.push_back(ce);
    }
  }
  const int total = lb.human_count + lb.object_count;
  if (total == 0) throw DataError("loss: no valid labels");
  Var<S> sum = terms.size() == 1 ? terms[0] : ag::add(terms[0], terms[1]);
  lb.total = ag::scale(sum, S(1) / static_cast<S>(total));
  return lb;
}

template <class S>
std::vector<int> argmax_rows(const Tensor<S>& logits) {
  const int rows = logits.rows();
  const int cols = logits.cols();
  std::vector<int> out(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const S* l = logits.ptr() + static_cast<std::size_t>(r) * cols;
    int best = 0;
    for (int c = 1; c < cols; ++c) {
      if (l[c] > l[best]) best = c;
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

SegmentTimeline predict_known_segments(const std::vector<int>& frame_pred, const SegmentTimeline& gt_segments) {
  SegmentTimeline out;
  for (const auto& seg : gt_segments) {
    if (seg.length() <= 0) throw DataError("predict_known_segments: empty segment");
    if (seg.start < 0 || static_cast<std::size_t>(seg.end) >= frame_pred.size()) {
      throw DataError("predict_known_segments: segment outside prediction range");
    }
    int max_class = 0;
    for (int t = seg.start; t <= seg.end; ++t) max_class = std::max(max_class, frame_pred[static_cast<std::size_t>(t)]);
    std::vector<int> votes(static_cast<std::size_t>(max_class) + 1, 0);
    for (int t = seg.start; t <= seg.end; ++t) {
      if (frame_pred[static_cast<std::size_t>(t)] >= 0) ++votes[static_cast<std::size_t>(frame_pred[static_cast<std::size_t>(t)])];
    }
    // max_element returns the first maximum, i.e. the lowest class on ties.
    const int label = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    out.push_back({seg.start, seg.end, label});
  }
  return out;
}

#define GVHOI_INSTANTIATE_HEAD(S)                                                                                \
  template struct GruParams<S>;                                                                                 \
  template struct HeadParams<S>;                                                                                \
  template Tensor<S> gumbel_noise<S>(const CounterRng&, int, int);                                              \
  template Var<S> gumbel_softmax<S>(const Var<S>&, const Tensor<S>&, const GumbelConfig&, double);              \
  template BoundaryOutput<S> boundary_sample<S>(const Var<S>&, const HeadParams<S>&, const GumbelConfig&, double, \
                                                const Tensor<S>&);                                              \
  template BoundaryOutput<S> uniform_boundary<S>(int, int);                                                     \
  template HeadOutput<S> bigru_classify<S>(const Var<S>&, const Var<S>&, const HeadParams<S>&, int);            \
  template LossBreakdown<S> head_loss<S>(const HeadOutput<S>&, const std::vector<int>&);                        \
  template std::vector<int> argmax_rows<S>(const Tensor<S>&);

GVHOI_INSTANTIATE_HEAD(float)
GVHOI_INSTANTIATE_HEAD(double)

}  // namespace gvhoi
