#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "prefgen/common.hpp"

namespace prefgen {

// Dense NCHW batch tensor. Vectors ride along as [n, c, 1, 1].
template <class T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), v(std::size_t(n_) * c_ * h_ * w_, T(0)) {}

  std::size_t size() const { return v.size(); }
  std::size_t per_sample() const { return std::size_t(c) * h * w; }

  T& at(int i, int j, int y, int x) {
    return v[((std::size_t(i) * c + j) * h + y) * w + x];
  }
  const T& at(int i, int j, int y, int x) const {
    return v[((std::size_t(i) * c + j) * h + y) * w + x];
  }

  T* sample(int i) { return v.data() + std::size_t(i) * per_sample(); }
  const T* sample(int i) const { return v.data() + std::size_t(i) * per_sample(); }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }
};

}  // namespace prefgen
