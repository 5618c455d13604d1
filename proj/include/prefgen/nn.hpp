#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <vector>

#include "prefgen/common.hpp"
#include "prefgen/tensor.hpp"

namespace prefgen::nn {

template <class S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MapM = Eigen::Map<MatRM<S>>;
template <class S>
using CMapM = Eigen::Map<const MatRM<S>>;

template <class S>
struct Param {
  std::vector<S> w, g;
  Param() = default;
  explicit Param(std::size_t n) : w(n, S(0)), g(n, S(0)) {}
  void zero_grad() { std::fill(g.begin(), g.end(), S(0)); }
};

namespace detail {

template <class S>
void write_blob(std::ostream& out, const std::vector<S>& v) {
  std::uint64_t n = v.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(n * sizeof(S)));
}

template <class S>
void read_blob(std::istream& in, std::vector<S>& v) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n != v.size()) throw DataError("model state: parameter block size mismatch");
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(S)));
  if (!in) throw DataError("model state: truncated parameter block");
}

// gathers k*k patches of one sample into (channels*k*k) x (out_h*out_w),
// zero padding outside the image
template <class S>
void im2col(const S* x, int c, int h, int w, int k, int stride, int pad, int out_h, int out_w,
            S* col) {
  for (int ch = 0; ch < c; ++ch)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        S* row = col + (std::size_t(ch) * k * k + std::size_t(ki) * k + kj) *
                           (std::size_t(out_h) * out_w);
        for (int oi = 0; oi < out_h; ++oi) {
          int yi = oi * stride - pad + ki;
          for (int oj = 0; oj < out_w; ++oj) {
            int xj = oj * stride - pad + kj;
            row[std::size_t(oi) * out_w + oj] =
                (yi >= 0 && yi < h && xj >= 0 && xj < w)
                    ? x[(std::size_t(ch) * h + yi) * w + xj]
                    : S(0);
          }
        }
      }
}

// scatter-add adjoint of im2col
template <class S>
void col2im(const S* col, int c, int h, int w, int k, int stride, int pad, int out_h, int out_w,
            S* x) {
  for (int ch = 0; ch < c; ++ch)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        const S* row = col + (std::size_t(ch) * k * k + std::size_t(ki) * k + kj) *
                                 (std::size_t(out_h) * out_w);
        for (int oi = 0; oi < out_h; ++oi) {
          int yi = oi * stride - pad + ki;
          if (yi < 0 || yi >= h) continue;
          for (int oj = 0; oj < out_w; ++oj) {
            int xj = oj * stride - pad + kj;
            if (xj >= 0 && xj < w) x[(std::size_t(ch) * h + yi) * w + xj] += row[std::size_t(oi) * out_w + oj];
          }
        }
      }
}

}  // namespace detail

template <class S>
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor<S> forward(const Tensor<S>& x, bool train) = 0;
  virtual Tensor<S> backward(const Tensor<S>& gy) = 0;
  virtual void collect(std::vector<Param<S>*>&) {}
  virtual void init_params(Rng&) {}
  virtual void save_state(std::ostream&) const {}
  virtual void load_state(std::istream&) {}
};

template <class S>
class Linear : public Module<S> {
 public:
  Linear(int in, int out, bool bias = true)
      : in_(in), out_(out), has_bias_(bias), w_(std::size_t(in) * out), b_(bias ? out : 0) {}

  Tensor<S> forward(const Tensor<S>& x, bool) override {
    if (int(x.per_sample()) != in_)
      throw ConfigError("linear: expected " + std::to_string(in_) + " inputs, got " +
                        std::to_string(x.per_sample()));
    x_ = x;
    Tensor<S> y(x.n, out_, 1, 1);
    CMapM<S> X(x.v.data(), x.n, in_);
    CMapM<S> W(w_.w.data(), out_, in_);
    MapM<S> Y(y.v.data(), x.n, out_);
    Y.noalias() = X * W.transpose();
    if (has_bias_)
      Y.rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(b_.w.data(), out_);
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    CMapM<S> Gy(gy.v.data(), gy.n, out_);
    CMapM<S> X(x_.v.data(), x_.n, in_);
    CMapM<S> W(w_.w.data(), out_, in_);
    MapM<S>(w_.g.data(), out_, in_).noalias() += Gy.transpose() * X;
    if (has_bias_) {
      // scalar accumulation keeps the reduction order fixed regardless of
      // how the heap happens to align the gradient buffer
      for (int j = 0; j < out_; ++j) {
        S acc(0);
        for (int i = 0; i < gy.n; ++i) acc += gy.v[std::size_t(i) * out_ + j];
        b_.g[std::size_t(j)] += acc;
      }
    }
    Tensor<S> gx(x_.n, x_.c, x_.h, x_.w);
    MapM<S>(gx.v.data(), x_.n, in_).noalias() = Gy * W;
    return gx;
  }

  void collect(std::vector<Param<S>*>& ps) override {
    ps.push_back(&w_);
    if (has_bias_) ps.push_back(&b_);
  }
  void init_params(Rng& rng) override {
    for (auto& v : w_.w) v = S(rng.normal() * 0.02);
    std::fill(b_.w.begin(), b_.w.end(), S(0));
  }
  void save_state(std::ostream& out) const override {
    detail::write_blob(out, w_.w);
    detail::write_blob(out, b_.w);
  }
  void load_state(std::istream& in) override {
    detail::read_blob(in, w_.w);
    detail::read_blob(in, b_.w);
  }

  Param<S>& weight() { return w_; }
  Param<S>& bias() { return b_; }

 private:
  int in_, out_;
  bool has_bias_;
  Param<S> w_, b_;
  Tensor<S> x_;
};

template <class S>
class Conv2d : public Module<S> {
 public:
  Conv2d(int in_c, int out_c, int k, int stride, int pad, bool bias = true)
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad), has_bias_(bias),
        w_(std::size_t(out_c) * in_c * k * k), b_(bias ? out_c : 0) {}

  Tensor<S> forward(const Tensor<S>& x, bool) override {
    if (x.c != in_c_) throw ConfigError("conv: channel mismatch");
    x_ = x;
    out_h_ = (x.h + 2 * pad_ - k_) / stride_ + 1;
    out_w_ = (x.w + 2 * pad_ - k_) / stride_ + 1;
    if (out_h_ < 1 || out_w_ < 1) throw ConfigError("conv: kernel larger than padded input");
    Tensor<S> y(x.n, out_c_, out_h_, out_w_);
    const int rows = in_c_ * k_ * k_, cols = out_h_ * out_w_;
    std::vector<S> col(std::size_t(rows) * cols);
    CMapM<S> W(w_.w.data(), out_c_, rows);
    for (int i = 0; i < x.n; ++i) {
      detail::im2col(x.sample(i), in_c_, x.h, x.w, k_, stride_, pad_, out_h_, out_w_, col.data());
      CMapM<S> C(col.data(), rows, cols);
      MapM<S> Y(y.sample(i), out_c_, cols);
      Y.noalias() = W * C;
      if (has_bias_)
        Y.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(b_.w.data(), out_c_);
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    const int rows = in_c_ * k_ * k_, cols = out_h_ * out_w_;
    std::vector<S> col(std::size_t(rows) * cols), gcol(std::size_t(rows) * cols);
    CMapM<S> W(w_.w.data(), out_c_, rows);
    MapM<S> Gw(w_.g.data(), out_c_, rows);
    Tensor<S> gx(x_.n, x_.c, x_.h, x_.w);
    for (int i = 0; i < x_.n; ++i) {
      detail::im2col(x_.sample(i), in_c_, x_.h, x_.w, k_, stride_, pad_, out_h_, out_w_,
                     col.data());
      CMapM<S> Gy(gy.sample(i), out_c_, cols);
      Gw.noalias() += Gy * CMapM<S>(col.data(), rows, cols).transpose();
      if (has_bias_) {
        // scalar accumulation: Eigen's horizontal redux rounds differently
        // depending on buffer alignment, which breaks bit-reproducibility
        const S* gs = gy.sample(i);
        for (int oc = 0; oc < out_c_; ++oc) {
          S acc(0);
          const S* row = gs + std::size_t(oc) * cols;
          for (int p = 0; p < cols; ++p) acc += row[p];
          b_.g[std::size_t(oc)] += acc;
        }
      }
      MapM<S>(gcol.data(), rows, cols).noalias() = W.transpose() * Gy;
      detail::col2im(gcol.data(), in_c_, x_.h, x_.w, k_, stride_, pad_, out_h_, out_w_,
                     gx.sample(i));
    }
    return gx;
  }

  void collect(std::vector<Param<S>*>& ps) override {
    ps.push_back(&w_);
    if (has_bias_) ps.push_back(&b_);
  }
  void init_params(Rng& rng) override {
    for (auto& v : w_.w) v = S(rng.normal() * 0.02);
    std::fill(b_.w.begin(), b_.w.end(), S(0));
  }
  void save_state(std::ostream& out) const override {
    detail::write_blob(out, w_.w);
    detail::write_blob(out, b_.w);
  }
  void load_state(std::istream& in) override {
    detail::read_blob(in, w_.w);
    detail::read_blob(in, b_.w);
  }

 private:
  int in_c_, out_c_, k_, stride_, pad_;
  bool has_bias_;
  Param<S> w_, b_;
  Tensor<S> x_;
  int out_h_ = 0, out_w_ = 0;
};

// fractionally strided convolution: the adjoint of Conv2d with the same
// kernel/stride/pad, so out = (in - 1) * stride - 2 * pad + k
template <class S>
class ConvTranspose2d : public Module<S> {
 public:
  ConvTranspose2d(int in_c, int out_c, int k, int stride, int pad, bool bias = true)
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad), has_bias_(bias),
        w_(std::size_t(in_c) * out_c * k * k), b_(bias ? out_c : 0) {}

  Tensor<S> forward(const Tensor<S>& x, bool) override {
    if (x.c != in_c_) throw ConfigError("conv_transpose: channel mismatch");
    x_ = x;
    out_h_ = (x.h - 1) * stride_ - 2 * pad_ + k_;
    out_w_ = (x.w - 1) * stride_ - 2 * pad_ + k_;
    if (out_h_ < 1 || out_w_ < 1) throw ConfigError("conv_transpose: degenerate output size");
    Tensor<S> y(x.n, out_c_, out_h_, out_w_);
    const int rows = out_c_ * k_ * k_, cols = x.h * x.w;
    std::vector<S> colbuf(std::size_t(rows) * cols);
    CMapM<S> W(w_.w.data(), in_c_, rows);
    for (int i = 0; i < x.n; ++i) {
      CMapM<S> X(x.sample(i), in_c_, cols);
      MapM<S> C(colbuf.data(), rows, cols);
      C.noalias() = W.transpose() * X;
      detail::col2im(colbuf.data(), out_c_, out_h_, out_w_, k_, stride_, pad_, x.h, x.w,
                     y.sample(i));
      if (has_bias_) {
        S* ys = y.sample(i);
        for (int ch = 0; ch < out_c_; ++ch) {
          S bv = b_.w[std::size_t(ch)];
          S* plane = ys + std::size_t(ch) * out_h_ * out_w_;
          for (int p = 0; p < out_h_ * out_w_; ++p) plane[p] += bv;
        }
      }
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    const int rows = out_c_ * k_ * k_, cols = x_.h * x_.w;
    std::vector<S> gcol(std::size_t(rows) * cols);
    CMapM<S> W(w_.w.data(), in_c_, rows);
    MapM<S> Gw(w_.g.data(), in_c_, rows);
    Tensor<S> gx(x_.n, x_.c, x_.h, x_.w);
    for (int i = 0; i < x_.n; ++i) {
      detail::im2col(gy.sample(i), out_c_, out_h_, out_w_, k_, stride_, pad_, x_.h, x_.w,
                     gcol.data());
      CMapM<S> Gc(gcol.data(), rows, cols);
      CMapM<S> X(x_.sample(i), in_c_, cols);
      Gw.noalias() += X * Gc.transpose();
      MapM<S>(gx.sample(i), in_c_, cols).noalias() = W * Gc;
      if (has_bias_) {
        const S* gs = gy.sample(i);
        for (int ch = 0; ch < out_c_; ++ch) {
          S acc(0);
          const S* plane = gs + std::size_t(ch) * out_h_ * out_w_;
          for (int p = 0; p < out_h_ * out_w_; ++p) acc += plane[p];
          b_.g[std::size_t(ch)] += acc;
        }
      }
    }
    return gx;
  }

  void collect(std::vector<Param<S>*>& ps) override {
    ps.push_back(&w_);
    if (has_bias_) ps.push_back(&b_);
  }
  void init_params(Rng& rng) override {
    for (auto& v : w_.w) v = S(rng.normal() * 0.02);
    std::fill(b_.w.begin(), b_.w.end(), S(0));
  }
  void save_state(std::ostream& out) const override {
    detail::write_blob(out, w_.w);
    detail::write_blob(out, b_.w);
  }
  void load_state(std::istream& in) override {
    detail::read_blob(in, w_.w);
    detail::read_blob(in, b_.w);
  }

 private:
  int in_c_, out_c_, k_, stride_, pad_;
  bool has_bias_;
  Param<S> w_, b_;
  Tensor<S> x_;
  int out_h_ = 0, out_w_ = 0;
};

template <class S>
class BatchNorm2d : public Module<S> {
 public:
  explicit BatchNorm2d(int channels, double eps = 1e-5, double momentum = 0.1)
      : c_(channels), eps_(eps), momentum_(momentum), gamma_(channels), beta_(channels),
        running_mean_(channels, S(0)), running_var_(channels, S(1)) {
    std::fill(gamma_.w.begin(), gamma_.w.end(), S(1));
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    if (x.c != c_) throw ConfigError("batchnorm: channel mismatch");
    Tensor<S> y(x.n, x.c, x.h, x.w);
    const std::size_t plane = std::size_t(x.h) * x.w;
    train_ = train;
    if (train) {
      const double m = double(x.n) * double(plane);
      if (m < 2) throw DataError("batchnorm: needs at least 2 values per channel in training");
      m_ = m;
      xhat_ = Tensor<S>(x.n, x.c, x.h, x.w);
      inv_std_.assign(std::size_t(c_), 0.0);
      for (int ch = 0; ch < c_; ++ch) {
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < x.n; ++i) {
          const S* p = x.sample(i) + std::size_t(ch) * plane;
          for (std::size_t k = 0; k < plane; ++k) {
            sum += double(p[k]);
            sq += double(p[k]) * double(p[k]);
          }
        }
        const double mean = sum / m;
        const double var = std::max(0.0, sq / m - mean * mean);
        const double istd = 1.0 / std::sqrt(var + eps_);
        inv_std_[std::size_t(ch)] = istd;
        running_mean_[std::size_t(ch)] =
            S((1.0 - momentum_) * double(running_mean_[std::size_t(ch)]) + momentum_ * mean);
        running_var_[std::size_t(ch)] =
            S((1.0 - momentum_) * double(running_var_[std::size_t(ch)]) +
              momentum_ * var * m / (m - 1.0));
        const S g = gamma_.w[std::size_t(ch)], b = beta_.w[std::size_t(ch)];
        for (int i = 0; i < x.n; ++i) {
          const S* p = x.sample(i) + std::size_t(ch) * plane;
          S* xh = xhat_.sample(i) + std::size_t(ch) * plane;
          S* yo = y.sample(i) + std::size_t(ch) * plane;
          for (std::size_t k = 0; k < plane; ++k) {
            xh[k] = S((double(p[k]) - mean) * istd);
            yo[k] = g * xh[k] + b;
          }
        }
      }
    } else {
      for (int ch = 0; ch < c_; ++ch) {
        const double istd = 1.0 / std::sqrt(double(running_var_[std::size_t(ch)]) + eps_);
        const double mean = double(running_mean_[std::size_t(ch)]);
        const S g = gamma_.w[std::size_t(ch)], b = beta_.w[std::size_t(ch)];
        for (int i = 0; i < x.n; ++i) {
          const S* p = x.sample(i) + std::size_t(ch) * plane;
          S* yo = y.sample(i) + std::size_t(ch) * plane;
          for (std::size_t k = 0; k < plane; ++k)
            yo[k] = S(double(g) * (double(p[k]) - mean) * istd + double(b));
        }
      }
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    const std::size_t plane = std::size_t(gy.h) * gy.w;
    Tensor<S> gx(gy.n, gy.c, gy.h, gy.w);
    if (!train_) {
      for (int ch = 0; ch < c_; ++ch) {
        const double scale = double(gamma_.w[std::size_t(ch)]) /
                             std::sqrt(double(running_var_[std::size_t(ch)]) + eps_);
        for (int i = 0; i < gy.n; ++i) {
          const S* g = gy.sample(i) + std::size_t(ch) * plane;
          S* o = gx.sample(i) + std::size_t(ch) * plane;
          for (std::size_t k = 0; k < plane; ++k) o[k] = S(double(g[k]) * scale);
        }
      }
      return gx;
    }
    for (int ch = 0; ch < c_; ++ch) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int i = 0; i < gy.n; ++i) {
        const S* g = gy.sample(i) + std::size_t(ch) * plane;
        const S* xh = xhat_.sample(i) + std::size_t(ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) {
          sum_gy += double(g[k]);
          sum_gy_xhat += double(g[k]) * double(xh[k]);
        }
      }
      gamma_.g[std::size_t(ch)] += S(sum_gy_xhat);
      beta_.g[std::size_t(ch)] += S(sum_gy);
      const double coef = double(gamma_.w[std::size_t(ch)]) * inv_std_[std::size_t(ch)] / m_;
      for (int i = 0; i < gy.n; ++i) {
        const S* g = gy.sample(i) + std::size_t(ch) * plane;
        const S* xh = xhat_.sample(i) + std::size_t(ch) * plane;
        S* o = gx.sample(i) + std::size_t(ch) * plane;
        for (std::size_t k = 0; k < plane; ++k)
          o[k] = S(coef * (m_ * double(g[k]) - sum_gy - double(xh[k]) * sum_gy_xhat));
      }
    }
    return gx;
  }

  void collect(std::vector<Param<S>*>& ps) override {
    ps.push_back(&gamma_);
    ps.push_back(&beta_);
  }
  void init_params(Rng& rng) override {
    for (auto& v : gamma_.w) v = S(1.0 + rng.normal() * 0.02);
    std::fill(beta_.w.begin(), beta_.w.end(), S(0));
  }
  void save_state(std::ostream& out) const override {
    detail::write_blob(out, gamma_.w);
    detail::write_blob(out, beta_.w);
    detail::write_blob(out, running_mean_);
    detail::write_blob(out, running_var_);
  }
  void load_state(std::istream& in) override {
    detail::read_blob(in, gamma_.w);
    detail::read_blob(in, beta_.w);
    detail::read_blob(in, running_mean_);
    detail::read_blob(in, running_var_);
  }

 private:
  int c_;
  double eps_, momentum_;
  Param<S> gamma_, beta_;
  std::vector<S> running_mean_, running_var_;
  Tensor<S> xhat_;
  std::vector<double> inv_std_;
  double m_ = 0.0;
  bool train_ = true;
};

template <class S>
class LeakyReLU : public Module<S> {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(S(slope)) {}
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    x_ = x;
    Tensor<S> y = x;
    for (auto& v : y.v) v = v > S(0) ? v : slope_ * v;
    return y;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx = gy;
    for (std::size_t i = 0; i < gx.v.size(); ++i)
      if (x_.v[i] <= S(0)) gx.v[i] *= slope_;
    return gx;
  }

 private:
  S slope_;
  Tensor<S> x_;
};

template <class S>
class ReLU : public Module<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    x_ = x;
    Tensor<S> y = x;
    for (auto& v : y.v) v = std::max(v, S(0));
    return y;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx = gy;
    for (std::size_t i = 0; i < gx.v.size(); ++i)
      if (x_.v[i] <= S(0)) gx.v[i] = S(0);
    return gx;
  }

 private:
  Tensor<S> x_;
};

template <class S>
class Tanh : public Module<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    y_ = x;
    for (auto& v : y_.v) v = std::tanh(v);
    return y_;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx = gy;
    for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] *= (S(1) - y_.v[i] * y_.v[i]);
    return gx;
  }

 private:
  Tensor<S> y_;
};

template <class S>
class Sigmoid : public Module<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    y_ = x;
    for (auto& v : y_.v) v = S(1) / (S(1) + std::exp(-v));
    return y_;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx = gy;
    for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] *= y_.v[i] * (S(1) - y_.v[i]);
    return gx;
  }

 private:
  Tensor<S> y_;
};

template <class S>
class Reshape : public Module<S> {
 public:
  Reshape(int c, int h, int w) : c_(c), h_(h), w_(w) {}
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    if (int(x.per_sample()) != c_ * h_ * w_) throw ConfigError("reshape: element count mismatch");
    in_c_ = x.c;
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor<S> y(x.n, c_, h_, w_);
    y.v = x.v;
    return y;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx(gy.n, in_c_, in_h_, in_w_);
    gx.v = gy.v;
    return gx;
  }

 private:
  int c_, h_, w_;
  int in_c_ = 0, in_h_ = 0, in_w_ = 0;
};

template <class S>
class Sequential : public Module<S> {
 public:
  template <class M, class... Args>
  M& add(Args&&... args) {
    auto m = std::make_unique<M>(std::forward<Args>(args)...);
    M& ref = *m;
    mods_.push_back(std::move(m));
    return ref;
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    Tensor<S> cur = x;
    for (auto& m : mods_) cur = m->forward(cur, train);
    return cur;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> cur = gy;
    for (auto it = mods_.rbegin(); it != mods_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
  }
  void collect(std::vector<Param<S>*>& ps) override {
    for (auto& m : mods_) m->collect(ps);
  }
  void init_params(Rng& rng) override {
    for (auto& m : mods_) m->init_params(rng);
  }
  void save_state(std::ostream& out) const override {
    for (const auto& m : mods_) m->save_state(out);
  }
  void load_state(std::istream& in) override {
    for (auto& m : mods_) m->load_state(in);
  }
  std::size_t size() const { return mods_.size(); }

 private:
  std::vector<std::unique_ptr<Module<S>>> mods_;
};

template <class S>
class Adam {
 public:
  Adam(std::vector<Param<S>*> params, double lr, double beta1 = 0.5, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    if (!(lr > 0.0)) throw ConfigError("adam: learning rate must be positive");
    for (auto* p : params_) {
      m_.emplace_back(p->w.size(), S(0));
      v_.emplace_back(p->w.size(), S(0));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, double(t_));
    const double c2 = 1.0 - std::pow(b2_, double(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      for (std::size_t j = 0; j < p.w.size(); ++j) {
        const double g = double(p.g[j]);
        const double m = b1_ * double(m_[i][j]) + (1.0 - b1_) * g;
        const double v = b2_ * double(v_[i][j]) + (1.0 - b2_) * g * g;
        m_[i][j] = S(m);
        v_[i][j] = S(v);
        p.w[j] -= S(lr_ * (m / c1) / (std::sqrt(v / c2) + eps_));
      }
    }
  }

  long steps_taken() const { return t_; }

 private:
  std::vector<Param<S>*> params_;
  std::vector<std::vector<S>> m_, v_;
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + exp(x)) without overflow
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// mean binary cross entropy on raw logits; optional gradient d(loss)/d(logit)
template <class S>
double bce_with_logits(const std::vector<S>& logits, const std::vector<double>& targets,
                       std::vector<S>* grad = nullptr) {
  if (logits.size() != targets.size() || logits.empty())
    throw ConfigError("bce_with_logits: size mismatch or empty batch");
  const double inv_n = 1.0 / double(logits.size());
  double loss = 0.0;
  if (grad) grad->assign(logits.size(), S(0));
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = double(logits[i]), t = targets[i];
    loss += softplus(z) - z * t;
    if (grad) (*grad)[i] = S((sigmoid(z) - t) * inv_n);
  }
  return loss * inv_n;
}

}  // namespace prefgen::nn
