#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gvhoi/core/error.hpp"

namespace gvhoi {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Dense row-major tensor. Value type; copies are deep.
template <class S>
struct Tensor {
  Shape shape;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(Shape s, S fill = S(0)) : shape(std::move(s)), data(shape_numel(shape), fill) {}
  Tensor(Shape s, std::vector<S> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_numel(shape)) {
      throw ShapeError("tensor data size " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
  }

  std::size_t numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i < 0 ? rank() + i : i)); }
  bool empty() const { return data.empty(); }

  // Extent of the last axis; everything before it is treated as rows.
  int cols() const { return shape.empty() ? 1 : shape.back(); }
  int rows() const { return cols() == 0 ? 0 : static_cast<int>(numel() / static_cast<std::size_t>(cols())); }

  S* ptr() { return data.data(); }
  const S* ptr() const { return data.data(); }
  std::span<S> span() { return data; }
  std::span<const S> span() const { return data; }

  S& operator[](std::size_t i) { return data[i]; }
  const S& operator[](std::size_t i) const { return data[i]; }

  S& at(std::initializer_list<int> idx) { return data[offset(idx)]; }
  const S& at(std::initializer_list<int> idx) const { return data[offset(idx)]; }

  void fill(S v) { std::fill(data.begin(), data.end(), v); }

  Tensor reshaped(Shape s) const {
    if (shape_numel(s) != numel()) {
      throw ShapeError("cannot reshape " + shape_str(shape) + " to " + shape_str(s));
    }
    return Tensor(std::move(s), data);
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }

 private:
  std::size_t offset(std::initializer_list<int> idx) const {
    if (idx.size() != shape.size()) throw ShapeError("index rank mismatch for " + shape_str(shape));
    std::size_t off = 0;
    std::size_t i = 0;
    for (int v : idx) {
      off = off * static_cast<std::size_t>(shape[i]) + static_cast<std::size_t>(v);
      ++i;
    }
    return off;
  }
};


template <class S>
void require_shape(const Tensor<S>& t, const Shape& s, const char* what) {
  if (t.shape != s) {
    throw ShapeError(std::string(what) + ": expected " + shape_str(s) + ", got " + shape_str(t.shape));
  }
}

}  // namespace gvhoi
