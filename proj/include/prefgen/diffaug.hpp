#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "prefgen/common.hpp"
#include "prefgen/tensor.hpp"

namespace prefgen {

enum class AugOp { color, translation, cutout };

inline std::vector<AugOp> parse_augment_policy(const std::string& policy) {
  std::vector<AugOp> ops;
  if (policy.find_first_not_of(" \t") == std::string::npos) return ops;  // no augmentation
  std::size_t pos = 0;
  while (true) {
    const auto comma = policy.find(',', pos);
    std::string tok =
        policy.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto b = tok.find_first_not_of(" \t");
    if (b == std::string::npos)
      throw ConfigError("augment policy: empty token in \"" + policy + "\"");
    tok = tok.substr(b, tok.find_last_not_of(" \t") - b + 1);
    AugOp op;
    if (tok == "color")
      op = AugOp::color;
    else if (tok == "translation")
      op = AugOp::translation;
    else if (tok == "cutout")
      op = AugOp::cutout;
    else
      throw ConfigError("augment policy: unknown op \"" + tok + "\"");
    for (auto prev : ops)
      if (prev == op) throw ConfigError("augment policy: duplicate op \"" + tok + "\"");
    ops.push_back(op);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return ops;
}

namespace augdetail {

// all transforms are affine in the pixel values once their random draws are
// fixed, so the adjoints below propagate gradients exactly

template <class S>
void brightness(Tensor<S>& x, const std::vector<double>& delta) {
  for (int i = 0; i < x.n; ++i) {
    S* p = x.sample(i);
    const S d = S(delta[std::size_t(i)]);
    for (std::size_t k = 0; k < x.per_sample(); ++k) p[k] += d;
  }
}

template <class S>
void saturation(Tensor<S>& x, const std::vector<double>& factor) {
  const std::size_t plane = std::size_t(x.h) * x.w;
  for (int i = 0; i < x.n; ++i) {
    const double f = factor[std::size_t(i)];
    for (std::size_t k = 0; k < plane; ++k) {
      double mean = 0.0;
      for (int c = 0; c < x.c; ++c) mean += double(x.sample(i)[std::size_t(c) * plane + k]);
      mean /= double(x.c);
      for (int c = 0; c < x.c; ++c) {
        S& v = x.sample(i)[std::size_t(c) * plane + k];
        v = S((double(v) - mean) * f + mean);
      }
    }
  }
}

template <class S>
void saturation_adjoint(Tensor<S>& g, const std::vector<double>& factor) {
  const std::size_t plane = std::size_t(g.h) * g.w;
  for (int i = 0; i < g.n; ++i) {
    const double f = factor[std::size_t(i)];
    for (std::size_t k = 0; k < plane; ++k) {
      double mean = 0.0;
      for (int c = 0; c < g.c; ++c) mean += double(g.sample(i)[std::size_t(c) * plane + k]);
      mean /= double(g.c);
      for (int c = 0; c < g.c; ++c) {
        S& v = g.sample(i)[std::size_t(c) * plane + k];
        v = S(double(v) * f + (1.0 - f) * mean);
      }
    }
  }
}

template <class S>
void contrast(Tensor<S>& x, const std::vector<double>& factor) {
  for (int i = 0; i < x.n; ++i) {
    const double f = factor[std::size_t(i)];
    S* p = x.sample(i);
    double mean = 0.0;
    for (std::size_t k = 0; k < x.per_sample(); ++k) mean += double(p[k]);
    mean /= double(x.per_sample());
    for (std::size_t k = 0; k < x.per_sample(); ++k)
      p[k] = S((double(p[k]) - mean) * f + mean);
  }
}

template <class S>
void contrast_adjoint(Tensor<S>& g, const std::vector<double>& factor) {
  for (int i = 0; i < g.n; ++i) {
    const double f = factor[std::size_t(i)];
    S* p = g.sample(i);
    double mean = 0.0;
    for (std::size_t k = 0; k < g.per_sample(); ++k) mean += double(p[k]);
    mean /= double(g.per_sample());
    for (std::size_t k = 0; k < g.per_sample(); ++k)
      p[k] = S(double(p[k]) * f + (1.0 - f) * mean);
  }
}

template <class S>
Tensor<S> translate(const Tensor<S>& x, const std::vector<int>& tx, const std::vector<int>& ty) {
  Tensor<S> y(x.n, x.c, x.h, x.w);
  for (int i = 0; i < x.n; ++i)
    for (int c = 0; c < x.c; ++c)
      for (int r = 0; r < x.h; ++r) {
        int sr = r - tx[std::size_t(i)];
        if (sr < 0 || sr >= x.h) continue;
        for (int col = 0; col < x.w; ++col) {
          int sc = col - ty[std::size_t(i)];
          if (sc >= 0 && sc < x.w) y.at(i, c, r, col) = x.at(i, c, sr, sc);
        }
      }
  return y;
}

template <class S>
Tensor<S> translate_adjoint(const Tensor<S>& g, const std::vector<int>& tx,
                            const std::vector<int>& ty) {
  std::vector<int> ntx(tx.size()), nty(ty.size());
  for (std::size_t i = 0; i < tx.size(); ++i) {
    ntx[i] = -tx[i];
    nty[i] = -ty[i];
  }
  return translate(g, ntx, nty);
}

template <class S>
void cutout(Tensor<S>& x, const std::vector<int>& r0, const std::vector<int>& c0, int ch,
            int cw) {
  for (int i = 0; i < x.n; ++i) {
    const int rlo = std::max(0, r0[std::size_t(i)]), rhi = std::min(x.h, r0[std::size_t(i)] + ch);
    const int clo = std::max(0, c0[std::size_t(i)]), chi = std::min(x.w, c0[std::size_t(i)] + cw);
    for (int c = 0; c < x.c; ++c)
      for (int r = rlo; r < rhi; ++r)
        for (int col = clo; col < chi; ++col) x.at(i, c, r, col) = S(0);
  }
}

}  // namespace augdetail

// randomized differentiable augmentation: color jitter, zero-padded shifts of
// up to 1/8 of the image, and a half-size cutout. Transforms are drawn per
// sample by sample() and applied deterministically afterwards, so gradients
// flow through the exact transform the discriminator saw.
template <class S>
class DiffAugment {
 public:
  explicit DiffAugment(const std::string& policy) : ops_(parse_augment_policy(policy)) {}
  explicit DiffAugment(std::vector<AugOp> ops) : ops_(std::move(ops)) {}

  bool empty() const { return ops_.empty(); }
  const std::vector<AugOp>& ops() const { return ops_; }

  void sample(int n, int h, int w, Rng& rng) {
    n_ = n;
    h_ = h;
    w_ = w;
    bright_.assign(std::size_t(n), 0.0);
    sat_.assign(std::size_t(n), 1.0);
    contr_.assign(std::size_t(n), 1.0);
    tx_.assign(std::size_t(n), 0);
    ty_.assign(std::size_t(n), 0);
    cut_r0_.assign(std::size_t(n), 0);
    cut_c0_.assign(std::size_t(n), 0);
    for (AugOp op : ops_) {
      switch (op) {
        case AugOp::color:
          for (int i = 0; i < n; ++i) {
            bright_[std::size_t(i)] = rng.uniform() - 0.5;
            sat_[std::size_t(i)] = rng.uniform() * 2.0;
            contr_[std::size_t(i)] = rng.uniform() + 0.5;
          }
          break;
        case AugOp::translation: {
          const int sh = int(h * 0.125 + 0.5), sw = int(w * 0.125 + 0.5);
          for (int i = 0; i < n; ++i) {
            tx_[std::size_t(i)] = int(rng.uniform_int(-sh, sh));
            ty_[std::size_t(i)] = int(rng.uniform_int(-sw, sw));
          }
          break;
        }
        case AugOp::cutout: {
          cut_h_ = int(h * 0.5 + 0.5);
          cut_w_ = int(w * 0.5 + 0.5);
          for (int i = 0; i < n; ++i) {
            const int or_ = int(rng.uniform_int(0, h + (1 - cut_h_ % 2) - 1));
            const int oc = int(rng.uniform_int(0, w + (1 - cut_w_ % 2) - 1));
            cut_r0_[std::size_t(i)] = or_ - cut_h_ / 2;
            cut_c0_[std::size_t(i)] = oc - cut_w_ / 2;
          }
          break;
        }
      }
    }
  }

  Tensor<S> apply(const Tensor<S>& x) const {
    require_match(x);
    Tensor<S> y = x;
    for (AugOp op : ops_) {
      switch (op) {
        case AugOp::color:
          augdetail::brightness(y, bright_);
          augdetail::saturation(y, sat_);
          augdetail::contrast(y, contr_);
          break;
        case AugOp::translation:
          y = augdetail::translate(y, tx_, ty_);
          break;
        case AugOp::cutout:
          augdetail::cutout(y, cut_r0_, cut_c0_, cut_h_, cut_w_);
          break;
      }
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) const {
    require_match(gy);
    Tensor<S> g = gy;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      switch (*it) {
        case AugOp::color:
          augdetail::contrast_adjoint(g, contr_);
          augdetail::saturation_adjoint(g, sat_);
          // brightness adds a constant, its adjoint is the identity
          break;
        case AugOp::translation:
          g = augdetail::translate_adjoint(g, tx_, ty_);
          break;
        case AugOp::cutout: {
          Tensor<S> masked = g;
          augdetail::cutout(masked, cut_r0_, cut_c0_, cut_h_, cut_w_);
          g = masked;
          break;
        }
      }
    }
    return g;
  }

  Tensor<S> forward(const Tensor<S>& x, Rng& rng) {
    sample(x.n, x.h, x.w, rng);
    return apply(x);
  }

 private:
  void require_match(const Tensor<S>& t) const {
    if (t.n != n_ || t.h != h_ || t.w != w_)
      throw ConfigError("diffaugment: tensor shape does not match the sampled transforms");
  }

  std::vector<AugOp> ops_;
  int n_ = 0, h_ = 0, w_ = 0;
  std::vector<double> bright_, sat_, contr_;
  std::vector<int> tx_, ty_, cut_r0_, cut_c0_;
  int cut_h_ = 0, cut_w_ = 0;
};

// One-shot convenience: draw fresh transforms from `seed` and apply them once.
template <class S>
Tensor<S> diff_augment(const Tensor<S>& batch, const std::string& policy, std::uint64_t seed) {
  DiffAugment<S> aug(policy);
  Rng rng(stage_seed(seed, "diff-augment"));
  return aug.forward(batch, rng);
}

}  // namespace prefgen
