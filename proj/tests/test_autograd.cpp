#include <gtest/gtest.h>

#include <functional>
#include <string>

#include "gvhoi/autograd/ops.hpp"
#include "oracles.hpp"

using namespace gvhoi;
using V = ag::Var<double>;

namespace {

// Central-difference check of d(sum(op(inputs) * r))/d input for every input
// scalar, with r a fixed random projection of the output.
void check_op(const std::string& name, std::vector<Tensor<double>> inputs, const std::function<V(const std::vector<V>&)>& op,
              double tol = 1e-7) {
  SCOPED_TRACE(name);
  std::vector<V> vars;
  for (const auto& t : inputs) vars.emplace_back(t, true);
  const V out = op(vars);
  const auto r = oracle::random_tensor<double>(out.shape(), 4242);
  ag::backward(ag::sum_all(ag::mul(out, V(r))));

  auto loss_at = [&](const std::vector<Tensor<double>>& xs) {
    std::vector<V> vs;
    for (const auto& t : xs) vs.emplace_back(t);
    return ag::sum_all(ag::mul(op(vs), V(r))).value()[0];
  };
  const double h = 1e-6;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    const Tensor<double> analytic = vars[a].has_grad() ? vars[a].grad() : Tensor<double>(inputs[a].shape);
    for (std::size_t i = 0; i < inputs[a].numel(); ++i) {
      auto up = inputs, down = inputs;
      up[a][i] += h;
      down[a][i] -= h;
      const double numeric = (loss_at(up) - loss_at(down)) / (2 * h);
      ASSERT_NEAR(analytic[i], numeric, tol * std::max(1.0, std::abs(numeric))) << "input " << a << " index " << i;
    }
  }
}

Tensor<double> rnd(Shape s, std::uint64_t seed, double scale = 1.0) { return oracle::random_tensor<double>(std::move(s), seed, scale); }

}  // namespace

TEST(Autograd, ElementwiseAndLinear) {
  check_op("linear", {rnd({2, 3, 4}, 1), rnd({5, 4}, 2), rnd({5}, 3)},
           [](const std::vector<V>& v) { return ag::linear(v[0], v[1], v[2]); });
  check_op("linear nobias", {rnd({3, 4}, 1), rnd({2, 4}, 2)},
           [](const std::vector<V>& v) { return ag::linear(v[0], v[1], V()); });
  check_op("add", {rnd({3, 2}, 4), rnd({3, 2}, 5)}, [](const std::vector<V>& v) { return ag::add(v[0], v[1]); });
  check_op("sub", {rnd({3, 2}, 4), rnd({3, 2}, 5)}, [](const std::vector<V>& v) { return ag::sub(v[0], v[1]); });
  check_op("mul", {rnd({3, 2}, 4), rnd({3, 2}, 5)}, [](const std::vector<V>& v) { return ag::mul(v[0], v[1]); });
  check_op("scale", {rnd({4}, 6)}, [](const std::vector<V>& v) { return ag::scale(v[0], -2.5); });
  check_op("add_scaled", {rnd({3, 2}, 4), rnd({3, 2}, 5)},
           [](const std::vector<V>& v) { return ag::add_scaled(v[0], 0.3, v[1], -1.7); });
  check_op("add_const", {rnd({3, 2}, 4)}, [](const std::vector<V>& v) { return ag::add_const(v[0], rnd({3, 2}, 9)); });
  check_op("relu", {rnd({4, 3}, 7)}, [](const std::vector<V>& v) { return ag::relu(v[0]); });
  check_op("sigmoid", {rnd({4, 3}, 7)}, [](const std::vector<V>& v) { return ag::sigmoid(v[0]); });
  check_op("tanh", {rnd({4, 3}, 7)}, [](const std::vector<V>& v) { return ag::tanh(v[0]); });
  check_op("leaky_relu", {rnd({4, 3}, 7)}, [](const std::vector<V>& v) { return ag::leaky_relu(v[0], 0.2); });
}

TEST(Autograd, ShapeOps) {
  check_op("mask_rows", {rnd({3, 2}, 1)}, [](const std::vector<V>& v) { return ag::mask_rows(v[0], std::vector<double>{1, 0, 0.5}); });
  check_op("reshape", {rnd({2, 3}, 1)}, [](const std::vector<V>& v) { return ag::reshape(v[0], Shape{3, 2}); });
  check_op("concat_last", {rnd({2, 3}, 1), rnd({2, 1}, 2)},
           [](const std::vector<V>& v) { return ag::concat_last<double>({v[0], v[1]}); });
  check_op("slice_last", {rnd({2, 5}, 1)}, [](const std::vector<V>& v) { return ag::slice_last(v[0], 1, 3); });
  check_op("gather_rows", {rnd({4, 2}, 1)}, [](const std::vector<V>& v) { return ag::gather_rows(v[0], {3, 0, 3}); });
  check_op("row_mean", {rnd({4, 3}, 1)}, [](const std::vector<V>& v) { return ag::row_mean(v[0]); });
  check_op("expand_cols", {rnd({4, 1}, 1)}, [](const std::vector<V>& v) { return ag::expand_cols(v[0], 3); });
}

TEST(Autograd, LossAndGumbel) {
  check_op("cross_entropy", {rnd({4, 3}, 1, 2.0)},
           [](const std::vector<V>& v) { return ag::softmax_cross_entropy_sum(v[0], {2, -1, 0, 1}); });
  const auto noise = rnd({3, 4}, 2);
  check_op("gumbel soft", {rnd({3, 4}, 1)},
           [&](const std::vector<V>& v) { return ag::gumbel_softmax(v[0], noise, 0.6, false); });
}

TEST(Autograd, GraphAttention) {
  auto mask = std::vector<std::uint8_t>{1, 1, 0, 1, 1, 0, 1, 1};
  for (auto scoring : {kernels::GatScoring::v1, kernels::GatScoring::v2}) {
    for (bool self : {false, true}) {
      for (int heads : {1, 2}) {
        kernels::GatOptions opt;
        opt.scoring = scoring;
        opt.include_self_in_sum = self;
        check_op("gat", {rnd({2, 4, 4}, 1), rnd({8}, 2)},
                 [&](const std::vector<V>& v) { return ag::graph_attention(v[0], mask, v[1], heads, opt); });
      }
    }
  }
  kernels::GatOptions uni;
  uni.scoring = kernels::GatScoring::uniform;
  check_op("gcn", {rnd({2, 4, 3}, 1)}, [&](const std::vector<V>& v) { return ag::graph_attention(v[0], mask, V(), 1, uni); });
}

TEST(Autograd, NeighborContext) {
  const std::vector<std::uint8_t> mask{1, 1, 1, 1, 0, 1};
  for (auto q : {kernels::NeighborQuery::neighbor, kernels::NeighborQuery::target}) {
    check_op("neighbor", {rnd({2, 3, 4}, 3)}, [&](const std::vector<V>& v) { return ag::neighbor_context(v[0], mask, q); });
  }
}

TEST(Autograd, RecurrenceAndTemporal) {
  for (bool reverse : {false, true}) {
    check_op("gru", {rnd({3, 2, 6}, 1), rnd({6, 2}, 2, 0.7), rnd({6}, 3)},
             [&](const std::vector<V>& v) { return ag::gru_sequence(v[0], v[1], v[2], reverse); });
  }
  check_op("depthwise3", {rnd({4, 2, 3}, 1), rnd({3, 3}, 2), rnd({3}, 3)},
           [](const std::vector<V>& v) { return ag::temporal_depthwise3(v[0], v[1], v[2]); });
}

TEST(Autograd, PoolingAndScaling) {
  check_op("block_pool", {rnd({3, 4, 2}, 1)},
           [](const std::vector<V>& v) { return ag::block_pool(v[0], {{0, 2}, {1}, {3}}); });
  check_op("channel_scale", {rnd({3, 4, 2}, 1), rnd({1, 6}, 2)},
           [](const std::vector<V>& v) { return ag::channel_scale(v[0], v[1], {0, 2, -1, 1}); });
}

TEST(Autograd, SharedSubgraphAccumulates) {
  // y = x * x + x uses x three times; dy/dx = 2x + 1.
  V x(Tensor<double>({2}, std::vector<double>{1.5, -2.0}), true);
  ag::backward(ag::sum_all(ag::add(ag::mul(x, x), x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -3.0);
  EXPECT_THROW(ag::backward(ag::add(x, x)), ShapeError);
}

TEST(Autograd, NoGradGuardSkipsTape) {
  V x(Tensor<double>({2}, 1.0), true);
  {
    ag::NoGradGuard guard;
    EXPECT_FALSE(ag::mul(x, x).requires_grad());
  }
  EXPECT_TRUE(ag::mul(x, x).requires_grad());
}

TEST(Autograd, ShapeErrors) {
  EXPECT_THROW(ag::linear(V(Tensor<double>({2, 3})), V(Tensor<double>({4, 2})), V()), ShapeError);
  EXPECT_THROW(ag::add(V(Tensor<double>({2})), V(Tensor<double>({3}))), ShapeError);
}
