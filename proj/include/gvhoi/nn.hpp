#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gvhoi/autograd/ops.hpp"
#include "gvhoi/core/rng.hpp"

namespace gvhoi {

using ag::Var;

// Ordered, named parameter set. Names are "<group>.<tensor>"; the group part
// addresses a submodule for gradient checks, freezing and ablations.
template <class S>
class ParamSet {
 public:
  Var<S> add(const std::string& name, Tensor<S> init) {
    for (const auto& [n, v] : entries_) {
      if (n == name) throw ConfigError("duplicate parameter name " + name);
    }
    Var<S> v(std::move(init), true);
    entries_.emplace_back(name, v);
    return v;
  }

  const std::vector<std::pair<std::string, Var<S>>>& entries() const { return entries_; }

  Var<S> find(const std::string& name) const {
    for (const auto& [n, v] : entries_) {
      if (n == name) return v;
    }
    throw ConfigError("no parameter named " + name);
  }

  static std::string group_of(const std::string& name) { return name.substr(0, name.find('.')); }

  std::vector<std::string> groups() const {
    std::vector<std::string> out;
    for (const auto& [n, v] : entries_) {
      const auto g = group_of(n);
      bool seen = false;
      for (const auto& x : out) seen = seen || x == g;
      if (!seen) out.push_back(g);
    }
    return out;
  }

  void zero_grad() {
    for (auto& [n, v] : entries_) v.zero_grad();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, v] : entries_) n += v.value().numel();
    return n;
  }

 private:
  std::vector<std::pair<std::string, Var<S>>> entries_;
};

template <class S>
Tensor<S> uniform_init(Shape shape, double bound, const CounterRng& rng) {
  Tensor<S> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>((2.0 * rng.uniform(i) - 1.0) * bound);
  return t;
}

inline double xavier_bound(int fan_in, int fan_out) { return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)); }

template <class S>
struct Linear {
  Var<S> w;  // [out, in]
  Var<S> b;  // [out], may be undefined

  static Linear make(ParamSet<S>& ps, const CounterRng& rng, const std::string& name, int in, int out,
                     bool bias = true) {
    Linear l;
    l.w = ps.add(name + ".w", uniform_init<S>(Shape{out, in}, xavier_bound(in, out), rng.fork(name + ".w")));
    if (bias) l.b = ps.add(name + ".b", Tensor<S>(Shape{out}));
    return l;
  }

  Var<S> operator()(const Var<S>& x) const { return ag::linear(x, w, b); }
  int in() const { return w.value().dim(1); }
  int out() const { return w.value().dim(0); }
};

// Two-layer perceptron: out = W2 relu(W1 x + b1) + b2.
template <class S>
struct Mlp2 {
  Linear<S> fc1;
  Linear<S> fc2;

  static Mlp2 make(ParamSet<S>& ps, const CounterRng& rng, const std::string& name, int in, int hidden, int out) {
    return {Linear<S>::make(ps, rng, name + ".fc1", in, hidden), Linear<S>::make(ps, rng, name + ".fc2", hidden, out)};
  }

  Var<S> operator()(const Var<S>& x) const { return fc2(ag::relu(fc1(x))); }
};

// Expands a [T * E] presence mask to per-row weights (1 or 0).
template <class S>
std::vector<S> row_weights(const std::vector<std::uint8_t>& mask) {
  std::vector<S> w(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) w[i] = mask[i] ? S(1) : S(0);
  return w;
}

}  // namespace gvhoi
