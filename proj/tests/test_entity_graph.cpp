#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "gvhoi/entity_graph.hpp"
#include "oracles.hpp"

using namespace gvhoi;

namespace {

int neighbor_of(int target, int j) { return j < target ? j : j + 1; }

// Neighbor weights straight from the definition: for each valid neighbor u,
// softmax over valid neighbors j of s_j . s_u / sqrt(d), summed over u.
std::vector<double> oracle_weights(const std::vector<std::vector<double>>& s, const std::vector<std::uint8_t>& valid,
                                   int target) {
  const int e_n = static_cast<int>(s.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(s[0].size()));
  std::vector<double> w(static_cast<std::size_t>(e_n - 1), 0.0);
  std::vector<int> support;
  for (int j = 0; j < e_n - 1; ++j) {
    if (valid[static_cast<std::size_t>(neighbor_of(target, j))]) support.push_back(j);
  }
  if (support.empty()) return std::vector<double>(w.size(), 1.0);
  for (int u : support) {
    const auto& q = s[static_cast<std::size_t>(neighbor_of(target, u))];
    std::vector<double> logits;
    for (int j : support) {
      const auto& k = s[static_cast<std::size_t>(neighbor_of(target, j))];
      logits.push_back(std::inner_product(k.begin(), k.end(), q.begin(), 0.0) * scale);
    }
    const auto p = oracle::softmax(logits);
    for (std::size_t i = 0; i < support.size(); ++i) w[static_cast<std::size_t>(support[i])] += p[i];
  }
  return w;
}

Tensor<double> to_tensor(const std::vector<std::vector<double>>& rows) {
  Tensor<double> t({static_cast<int>(rows.size()), static_cast<int>(rows[0].size())});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) t[i * rows[i].size() + k] = rows[i][k];
  }
  return t;
}

template <class S>
FusedEntityFeatures<S> fused_of(const Tensor<S>& x, std::vector<std::uint8_t> mask) {
  FusedEntityFeatures<S> f;
  f.values = Var<S>(x);
  f.entity_mask = std::move(mask);
  return f;
}

}  // namespace

TEST(NeighborAttention, IdenticalNeighborsGiveAllOnes) {
  RngStream rng(CounterRng(31));
  for (int trial = 0; trial < 200; ++trial) {
    const int c = rng.range(1, 6);
    const auto row = oracle::random_tensor<double>({1, c}, 700 + trial, 2.0);
    Tensor<double> s({3, c});
    for (int e = 0; e < 3; ++e) {
      for (int k = 0; k < c; ++k) s.at({e, k}) = row.at({0, k});
    }
    // Target's own row differs; only neighbor rows have to agree.
    for (int k = 0; k < c; ++k) s.at({trial % 3, k}) += 1.0;
    const auto w = neighbor_attention(s, {1, 1, 1}, trial % 3);
    ASSERT_EQ(w.size(), 2u);
    for (double v : w) ASSERT_NEAR(v, 1.0, 1e-12);
  }
}

TEST(NeighborAttention, SingleValidNeighborAndNoneValid) {
  const auto s = oracle::random_tensor<double>({3, 2}, 1);
  EXPECT_EQ(neighbor_attention(s, {1, 0, 1}, 0), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(neighbor_attention(s, {1, 0, 0}, 0), (std::vector<double>{1.0, 1.0}));
  EXPECT_THROW(neighbor_attention(Tensor<double>({1, 2}), {1}, 0), ShapeError);
}

TEST(NeighborAttention, HandSetFeaturesMatchScalarOracle) {
  const std::vector<std::vector<double>> s{{1.0, -0.5}, {0.25, 2.0}, {-1.5, 0.75}};
  for (int target = 0; target < 3; ++target) {
    const auto got = neighbor_attention(to_tensor(s), {1, 1, 1}, target);
    const auto want = oracle_weights(s, {1, 1, 1}, target);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(got[j], want[j], 1e-14);
  }
}

TEST(NeighborAttention, RandomInstancesMatchOracle) {
  RngStream rng(CounterRng(32));
  for (int trial = 0; trial < 200; ++trial) {
    const int e_n = rng.range(2, 6), c = rng.range(1, 5);
    std::vector<std::vector<double>> s(static_cast<std::size_t>(e_n), std::vector<double>(static_cast<std::size_t>(c)));
    for (auto& row : s) {
      for (auto& v : row) v = 2.0 * rng.normal();
    }
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(e_n));
    for (auto& v : valid) v = rng.uniform() < 0.75;
    const int target = static_cast<int>(rng.below(static_cast<std::uint64_t>(e_n)));
    const auto got = neighbor_attention(to_tensor(s), valid, target);
    const auto want = oracle_weights(s, valid, target);
    for (std::size_t j = 0; j < want.size(); ++j) ASSERT_NEAR(got[j], want[j], 1e-12) << "trial " << trial;
  }
}

TEST(EntityGraph, AggregateNeighborsDropsTargetAndZerosInvalid) {
  const Tensor<double> s({3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(aggregate_neighbors(s, {1, 1, 1}, 1).data, (std::vector<double>{1, 2, 5, 6}));
  EXPECT_EQ(aggregate_neighbors(s, {1, 1, 0}, 0).data, (std::vector<double>{3, 4, 0, 0}));
}

TEST(EntityGraph, NeighborFeatureMatchesFormula) {
  ParamSet<double> ps;
  const auto params = IegParams<double>::make(ps, CounterRng(3), 3);
  const auto x = oracle::random_tensor<double>({2, 3, 3}, 4);
  for (auto ctx : {NeighborContext::channel_gap, NeighborContext::channel}) {
    IegConfig cfg;
    cfg.lambda = 0.3;
    cfg.context = ctx;
    const auto s = neighbor_feature(Var<double>(x), params, cfg, 3).value();
    for (int r = 0; r < 6; ++r) {
      std::vector<double> wx(3, 0.0);
      for (int o = 0; o < 3; ++o) {
        for (int i = 0; i < 3; ++i) wx[static_cast<std::size_t>(o)] += params.w3.w.value().at({o, i}) * x[static_cast<std::size_t>(r * 3 + i)];
      }
      const double mean = (wx[0] + wx[1] + wx[2]) / 3.0;
      for (int o = 0; o < 3; ++o) {
        const double term = ctx == NeighborContext::channel_gap ? mean : wx[static_cast<std::size_t>(o)];
        EXPECT_NEAR(s[static_cast<std::size_t>(r * 3 + o)], 0.3 * x[static_cast<std::size_t>(r * 3 + o)] + 0.7 * term / 2.0, 1e-14);
      }
    }
  }
  IegConfig cfg;
  EXPECT_THROW(neighbor_feature(Var<double>(Tensor<double>({1, 1, 3})), params, cfg, 1), ShapeError);
}

TEST(EntityGraph, TwoEntitiesWithLambdaOneDoublesFeature) {
  ParamSet<double> ps;
  const auto params = IegParams<double>::make(ps, CounterRng(3), 2);
  IegConfig cfg;
  cfg.lambda = 1.0;
  const Tensor<double> x({1, 2, 2}, std::vector<double>{0.5, -1.0, 0.5, -1.0});
  const auto out = refine(fused_of(x, {1, 1}), params, cfg).values.value();
  EXPECT_EQ(out.data, (std::vector<double>{1.0, -2.0, 1.0, -2.0}));
}

TEST(EntityGraph, RefineMatchesEndToEndOracle) {
  ParamSet<double> ps;
  const auto params = IegParams<double>::make(ps, CounterRng(9), 2);
  IegConfig cfg;
  cfg.lambda = 0.5;
  const auto x = oracle::random_tensor<double>({1, 3, 2}, 10);
  const std::vector<std::uint8_t> mask{1, 1, 1};
  const auto refined = refine(fused_of(x, mask), params, cfg);
  const auto s_t = neighbor_feature(Var<double>(x), params, cfg, 3).value();
  std::vector<std::vector<double>> s(3, std::vector<double>(2));
  for (int e = 0; e < 3; ++e) {
    for (int k = 0; k < 2; ++k) s[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)] = s_t[static_cast<std::size_t>(e * 2 + k)];
  }
  for (int e = 0; e < 3; ++e) {
    const auto w = oracle_weights(s, mask, e);
    for (int k = 0; k < 2; ++k) {
      double ctx = 0;
      for (int j = 0; j < 2; ++j) ctx += w[static_cast<std::size_t>(j)] * s[static_cast<std::size_t>(neighbor_of(e, j))][static_cast<std::size_t>(k)] / 2.0;
      EXPECT_NEAR(refined.values.value().at({0, e, k}), x.at({0, e, k}) + ctx, 1e-14);
    }
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(refined.neighbor_attn.at({0, e, j}), w[static_cast<std::size_t>(j)], 1e-14);
  }
}

TEST(EntityGraph, IdenticalEntitiesStayIdentical) {
  ParamSet<double> ps;
  const auto params = IegParams<double>::make(ps, CounterRng(9), 3);
  Tensor<double> x({2, 4, 3});
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = static_cast<double>(i % 3) - 0.7;
  const auto out = refine(fused_of(x, std::vector<std::uint8_t>(8, 1)), params, IegConfig{}).values.value();
  for (int t = 0; t < 2; ++t) {
    for (int e = 1; e < 4; ++e) {
      for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(out.at({t, e, k}), out.at({t, 0, k}));
    }
  }
}

TEST(EntityGraph, NeighborPermutationInvariance) {
  for (int trial = 0; trial < 50; ++trial) {
    const int e_n = 5, c = 4;
    ParamSet<float> ps;
    const auto params = IegParams<float>::make(ps, CounterRng(trial), c);
    const auto x = oracle::random_tensor<float>({2, e_n, c}, 300 + trial);
    std::vector<std::uint8_t> mask(2 * e_n, 1);
    mask[static_cast<std::size_t>(1 + trial % (2 * e_n - 1))] = 0;
    // Fix entity 0 and shuffle the rest.
    std::vector<int> perm(e_n);
    std::iota(perm.begin(), perm.end(), 0);
    RngStream r(CounterRng(400 + trial));
    for (int i = e_n - 1; i > 1; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[1 + r.below(static_cast<std::uint64_t>(i))]);
    Tensor<float> px(x.shape);
    std::vector<std::uint8_t> pm(mask.size());
    for (int t = 0; t < 2; ++t) {
      for (int n = 0; n < e_n; ++n) {
        pm[static_cast<std::size_t>(t * e_n + n)] = mask[static_cast<std::size_t>(t * e_n + perm[static_cast<std::size_t>(n)])];
        for (int k = 0; k < c; ++k) px.at({t, n, k}) = x.at({t, perm[static_cast<std::size_t>(n)], k});
      }
    }
    const auto base = refine(fused_of(x, mask), params, IegConfig{}).values.value();
    const auto moved = refine(fused_of(px, pm), params, IegConfig{}).values.value();
    for (int t = 0; t < 2; ++t) {
      for (int n = 0; n < e_n; ++n) {
        for (int k = 0; k < c; ++k) ASSERT_NEAR(moved.at({t, n, k}), base.at({t, perm[static_cast<std::size_t>(n)], k}), 1e-5);
      }
    }
  }
}

TEST(EntityGraph, InvalidNeighborValuesHaveNoInfluence) {
  ParamSet<float> ps;
  const auto params = IegParams<float>::make(ps, CounterRng(1), 3);
  auto x = oracle::random_tensor<float>({2, 3, 3}, 12);
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 1, 0};
  const auto base = refine(fused_of(x, mask), params, IegConfig{}).values.value();
  for (int k = 0; k < 3; ++k) {
    x.at({0, 1, k}) = 99.0f;
    x.at({1, 2, k}) = -42.0f;
  }
  const auto moved = refine(fused_of(x, mask), params, IegConfig{}).values.value();
  EXPECT_EQ(moved.data, base.data);
}

TEST(EntityGraph, DisabledOrZeroContextPassesThrough) {
  ParamSet<double> ps;
  const auto params = IegParams<double>::make(ps, CounterRng(1), 2);
  const auto x = oracle::random_tensor<double>({2, 3, 2}, 13);
  IegConfig off;
  off.enabled = false;
  const auto a = refine(fused_of(x, std::vector<std::uint8_t>(6, 1)), params, off);
  EXPECT_EQ(a.values.value().data, x.data);
  EXPECT_EQ(a.neighbor_attn.numel(), 0u);
  IegConfig zero;
  zero.zero_neighbor_context = true;
  EXPECT_EQ(refine(fused_of(x, std::vector<std::uint8_t>(6, 1)), params, zero).values.value().data, x.data);
  // A single entity has no neighbors to attend to.
  const auto one = oracle::random_tensor<double>({2, 1, 2}, 14);
  EXPECT_EQ(refine(fused_of(one, {1, 1}), params, IegConfig{}).values.value().data, one.data);
}

TEST(EntityGraph, NeighborAttentionCsv) {
  Tensor<double> w({1, 3, 2}, std::vector<double>{0.5, 1.5, 1.0, 1.0, 2.0, 0.0});
  std::ostringstream os;
  write_neighbor_attn_csv(os, w, {1, 1, 0});
  EXPECT_EQ(os.str(), "frame,entity,neighbor,weight\n0,0,1,0.5\n0,1,0,1\n");
  std::ostringstream empty;
  write_neighbor_attn_csv(empty, Tensor<double>(), {});
  EXPECT_EQ(empty.str(), "frame,entity,neighbor,weight\n");
}
