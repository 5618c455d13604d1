#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prefgen/common.hpp"
#include "prefgen/diffaug.hpp"
#include "prefgen/image.hpp"
#include "prefgen/io.hpp"
#include "prefgen/nn.hpp"
#include "prefgen/tensor.hpp"
#include "prefgen/vicinal.hpp"

namespace prefgen {

// a sample was requested at a label outside the range seen during training
struct LabelRangeError : Error {
  using Error::Error;
};

struct GanConfig {
  int image_channels = 3;
  int image_size = 128;  // square, power of two, >= 32
  int latent_dim = 100;
  int batch_size = 32;
  double learning_rate = 2e-4;
  long iterations = 275000;
  int feature_map_base = 64;  // width multiplier shared by both networks
  int d_steps_per_iter = 1;
  std::string augment_policy = "color,translation,cutout";
  std::uint64_t seed = 1;

  void validate() const {
    if (image_channels != 1 && image_channels != 3)
      throw ConfigError("gan: image_channels must be 1 or 3");
    if (image_size < 32 || (image_size & (image_size - 1)) != 0)
      throw ConfigError("gan: image_size must be a power of two >= 32");
    if (latent_dim < 1) throw ConfigError("gan: latent_dim must be positive");
    if (batch_size < 1) throw ConfigError("gan: batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("gan: learning_rate must be positive");
    if (iterations < 1) throw ConfigError("gan: iterations must be positive");
    if (feature_map_base < 1) throw ConfigError("gan: feature_map_base must be positive");
    if (d_steps_per_iter < 1) throw ConfigError("gan: d_steps_per_iter must be positive");
    parse_augment_policy(augment_policy);  // rejects unknown tokens
  }

  // number of stride-2 stages between the 4x4 base map and the full image
  int upsample_stages() const {
    int stages = 0;
    for (int s = image_size; s > 4; s /= 2) ++stages;
    return stages;
  }

  // full-fidelity unconditional profile (the defaults above)
  static GanConfig baseline_defaults() { return GanConfig{}; }

  // full-fidelity conditional profile: wider latent, larger batches, slower
  // learning rate, and two discriminator updates per generator update
  static GanConfig conditional_defaults() {
    GanConfig c;
    c.latent_dim = 256;
    c.batch_size = 64;
    c.learning_rate = 1e-4;
    c.iterations = 20000;
    c.d_steps_per_iter = 2;
    return c;
  }
};

// Broadcast-add one scalar label per sample onto a feature map. This is the
// generator's conditioning path, applied to the stem output before the
// upsampling stack.
template <class S>
Tensor<S> inject_label_generator(const Tensor<S>& features, const std::vector<double>& labels) {
  if (labels.size() != std::size_t(features.n))
    throw ConfigError("inject_label_generator: one label per sample required");
  Tensor<S> out = features;
  const std::size_t per = features.per_sample();
  for (int i = 0; i < features.n; ++i) {
    S* p = out.sample(i);
    const S add = S(labels[std::size_t(i)]);
    for (std::size_t k = 0; k < per; ++k) p[k] += add;
  }
  return out;
}

template <class S>
Tensor<S> inject_label_generator(const Tensor<S>& features, double label) {
  return inject_label_generator(features, std::vector<double>(std::size_t(features.n), label));
}

// Projection-style conditioning for the discriminator: the logit adjustment is
// the inner product between the image features and the embedded label.
template <class S>
double project_label_discriminator(const S* features, const S* embedding, int dim) {
  if (dim < 1) throw ConfigError("project_label_discriminator: empty feature vector");
  double acc = 0.0;
  for (int k = 0; k < dim; ++k) acc += double(features[k]) * double(embedding[k]);
  return acc;
}

inline double project_label_discriminator(const std::vector<double>& features,
                                          const std::vector<double>& embedding) {
  if (features.size() != embedding.size())
    throw ConfigError("project_label_discriminator: dimension mismatch");
  return project_label_discriminator(features.data(), embedding.data(), int(features.size()));
}

namespace gandetail {

// channel count of the 4x4 map nearest the latent/head end; widths double
// toward it and are capped at 8x the base
inline int top_width(int fbase, int stages) {
  return std::min(8 * fbase, fbase << (stages - 1));
}

}  // namespace gandetail

// Generator: linear stem to a 4x4 base map, optional label injection, then
// stride-2 transposed convolutions up to the target resolution, Tanh output.
template <class S>
class GeneratorNet {
 public:
  GeneratorNet(const GanConfig& cfg, bool conditional)
      : cfg_(cfg),
        conditional_(conditional),
        stem_(cfg.latent_dim,
              gandetail::top_width(cfg.feature_map_base, cfg.upsample_stages()) * 16) {
    const int stages = cfg.upsample_stages();
    const int fbase = cfg.feature_map_base;
    int width = gandetail::top_width(fbase, stages);
    body_.template add<nn::ReLU<S>>();
    body_.template add<nn::Reshape<S>>(width, 4, 4);
    for (int i = 0; i < stages; ++i) {
      const bool last = i + 1 == stages;
      const int out = last ? cfg.image_channels : std::min(8 * fbase, fbase << (stages - 2 - i));
      body_.template add<nn::ConvTranspose2d<S>>(width, out, 4, 2, 1);
      if (last) {
        body_.template add<nn::Tanh<S>>();
      } else {
        body_.template add<nn::BatchNorm2d<S>>(out);
        body_.template add<nn::ReLU<S>>();
      }
      width = out;
    }
  }

  // labels must be present iff the network is conditional
  Tensor<S> forward(const Tensor<S>& z, const std::vector<double>* labels, bool train) {
    if (z.c != cfg_.latent_dim || z.h != 1 || z.w != 1)
      throw ConfigError("generator: latent batch must be n x latent_dim x 1 x 1");
    Tensor<S> f = stem_.forward(z, train);
    if (conditional_) {
      if (!labels) throw ConfigError("generator: conditional forward requires labels");
      f = inject_label_generator(f, *labels);
    } else if (labels) {
      throw ConfigError("generator: unconditional forward rejects labels");
    }
    return body_.forward(f, train);
  }

  Tensor<S> backward(const Tensor<S>& gy) { return stem_.backward(body_.backward(gy)); }

  void collect(std::vector<nn::Param<S>*>& ps) {
    stem_.collect(ps);
    body_.collect(ps);
  }
  void init_params(Rng& rng) {
    stem_.init_params(rng);
    body_.init_params(rng);
  }
  void save_state(std::ostream& out) const {
    stem_.save_state(out);
    body_.save_state(out);
  }
  void load_state(std::istream& in) {
    stem_.load_state(in);
    body_.load_state(in);
  }

  const GanConfig& config() const { return cfg_; }
  bool conditional() const { return conditional_; }

 private:
  GanConfig cfg_;
  bool conditional_;
  nn::Linear<S> stem_;
  nn::Sequential<S> body_;
};

// Discriminator: stride-2 convolution pyramid down to 4x4 (no norm on the
// first block), flattened features, a linear real/fake head, and, when
// conditional, a projection term whose label embedding is a learned linear
// map from the scalar label.
template <class S>
class DiscriminatorNet {
 public:
  DiscriminatorNet(const GanConfig& cfg, bool conditional)
      : cfg_(cfg),
        conditional_(conditional),
        feature_dim_(gandetail::top_width(cfg.feature_map_base, cfg.upsample_stages()) * 16),
        head_(feature_dim_, 1),
        embed_(1, feature_dim_, /*bias=*/false) {
    const int stages = cfg.upsample_stages();
    int in = cfg.image_channels;
    for (int i = 0; i < stages; ++i) {
      const int out = std::min(8 * cfg.feature_map_base, cfg.feature_map_base << i);
      body_.template add<nn::Conv2d<S>>(in, out, 4, 2, 1);
      if (i > 0) body_.template add<nn::BatchNorm2d<S>>(out);
      body_.template add<nn::LeakyReLU<S>>(0.2);
      in = out;
    }
    body_.template add<nn::Reshape<S>>(feature_dim_, 1, 1);
  }

  // returns one raw logit per sample; labels must be present iff conditional
  std::vector<double> forward(const Tensor<S>& x, const std::vector<double>* labels, bool train) {
    if (x.c != cfg_.image_channels || x.h != cfg_.image_size || x.w != cfg_.image_size)
      throw ConfigError("discriminator: input does not match the configured image shape");
    if (conditional_ && (!labels || labels->size() != std::size_t(x.n)))
      throw ConfigError("discriminator: conditional forward requires one label per sample");
    if (!conditional_ && labels)
      throw ConfigError("discriminator: unconditional forward rejects labels");
    feats_ = body_.forward(x, train);
    Tensor<S> head_out = head_.forward(feats_, train);
    std::vector<double> logits(std::size_t(x.n));
    if (conditional_) {
      Tensor<S> lab(x.n, 1, 1, 1);
      for (int i = 0; i < x.n; ++i) lab.v[std::size_t(i)] = S((*labels)[std::size_t(i)]);
      emb_ = embed_.forward(lab, train);
      for (int i = 0; i < x.n; ++i)
        logits[std::size_t(i)] =
            double(head_out.v[std::size_t(i)]) +
            project_label_discriminator(feats_.sample(i), emb_.sample(i), feature_dim_);
    } else {
      for (int i = 0; i < x.n; ++i) logits[std::size_t(i)] = double(head_out.v[std::size_t(i)]);
    }
    return logits;
  }

  // g = dLoss/dlogit per sample; accumulates parameter grads, returns dLoss/dx
  Tensor<S> backward(const std::vector<double>& g) {
    const int n = feats_.n;
    if (g.size() != std::size_t(n)) throw ConfigError("discriminator: gradient size mismatch");
    Tensor<S> gl(n, 1, 1, 1);
    for (int i = 0; i < n; ++i) gl.v[std::size_t(i)] = S(g[std::size_t(i)]);
    Tensor<S> gf = head_.backward(gl);
    if (conditional_) {
      // logit_i += sum_k feats_ik * emb_ik, so the projection routes gradient
      // into both the features and the label embedding
      Tensor<S> ge(n, feature_dim_, 1, 1);
      for (int i = 0; i < n; ++i) {
        const S gi = S(g[std::size_t(i)]);
        S* gfp = gf.sample(i);
        S* gep = ge.sample(i);
        const S* fp = feats_.sample(i);
        const S* ep = emb_.sample(i);
        for (int k = 0; k < feature_dim_; ++k) {
          gep[k] = gi * fp[k];
          gfp[k] += gi * ep[k];
        }
      }
      embed_.backward(ge);  // gradient w.r.t. the raw label is discarded
    }
    return body_.backward(gf);
  }

  void collect(std::vector<nn::Param<S>*>& ps) {
    body_.collect(ps);
    head_.collect(ps);
    if (conditional_) embed_.collect(ps);
  }
  void init_params(Rng& rng) {
    body_.init_params(rng);
    head_.init_params(rng);
    embed_.init_params(rng);
  }

  int feature_dim() const { return feature_dim_; }
  bool conditional() const { return conditional_; }

 private:
  GanConfig cfg_;
  bool conditional_;
  int feature_dim_;
  nn::Sequential<S> body_;
  nn::Linear<S> head_;
  nn::Linear<S> embed_;
  Tensor<S> feats_, emb_;
};

struct GanLogEntry {
  long iteration = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
};

// Opaque trained-generator artifact. Weights are shared; sampling mutates only
// scratch activations, so holders must not sample one instance concurrently.
struct TrainedGenerator {
  GanConfig config;
  bool conditional = false;
  VicinalConfig vicinal{};  // meaningful only when conditional
  double label_lo = 0.0, label_hi = 0.0;
  long trained_iterations = 0;
  std::shared_ptr<GeneratorNet<float>> net;
  std::vector<GanLogEntry> loss_log;
};

namespace gandetail {

// HWC images in [0,1] -> NCHW batch in [-1,1]
inline Tensor<float> images_to_tensor(const std::vector<Image>& images) {
  if (images.size() < 2) throw DataError("gan: need at least 2 training images");
  const Image& first = images.front();
  Tensor<float> t(int(images.size()), first.c, first.h, first.w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& im = images[i];
    if (im.h != first.h || im.w != first.w || im.c != first.c)
      throw DataError("gan: training images must share one size");
    float* dst = t.sample(int(i));
    for (int ch = 0; ch < im.c; ++ch)
      for (int y = 0; y < im.h; ++y)
        for (int x = 0; x < im.w; ++x)
          dst[(std::size_t(ch) * im.h + y) * im.w + x] = im.at(y, x, ch) * 2.0f - 1.0f;
  }
  return t;
}

// NCHW batch in [-1,1] -> HWC images clamped into [0,1]
inline std::vector<Image> tensor_to_images(const Tensor<float>& t) {
  std::vector<Image> out(std::size_t(t.n), Image(t.h, t.w, t.c));
  for (int i = 0; i < t.n; ++i) {
    const float* src = t.sample(i);
    Image& im = out[std::size_t(i)];
    for (int ch = 0; ch < t.c; ++ch)
      for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x) {
          const float v = (src[(std::size_t(ch) * t.h + y) * t.w + x] + 1.0f) * 0.5f;
          im.at(y, x, ch) = std::min(std::max(v, 0.0f), 1.0f);
        }
  }
  return out;
}

inline Tensor<float> gather(const Tensor<float>& data, const std::vector<int>& idx) {
  Tensor<float> out(int(idx.size()), data.c, data.h, data.w);
  const std::size_t per = data.per_sample();
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::memcpy(out.sample(int(i)), data.sample(idx[i]), per * sizeof(float));
  return out;
}

inline Tensor<float> draw_latent(int n, int latent_dim, Rng& rng) {
  Tensor<float> z(n, latent_dim, 1, 1);
  for (auto& v : z.v) v = float(rng.normal());
  return z;
}

inline void check_training_batch(const Tensor<float>& data, const GanConfig& cfg) {
  if (data.c != cfg.image_channels || data.h != cfg.image_size || data.w != cfg.image_size)
    throw ConfigError("gan: training images do not match the configured size/channels");
}

}  // namespace gandetail

// Unconditional adversarial training. Both real and generated batches pass
// through the same augmentation policy; the discriminator sees them in
// separate forward passes so its batch statistics stay per-side.
inline TrainedGenerator train_dcgan(const std::vector<Image>& images, const GanConfig& cfg) {
  cfg.validate();
  Tensor<float> data = gandetail::images_to_tensor(images);
  gandetail::check_training_batch(data, cfg);

  auto gen = std::make_shared<GeneratorNet<float>>(cfg, false);
  DiscriminatorNet<float> dis(cfg, false);
  {
    Rng gi(stage_seed(cfg.seed, "gan-init-g"));
    gen->init_params(gi);
    Rng di(stage_seed(cfg.seed, "gan-init-d"));
    dis.init_params(di);
  }
  std::vector<nn::Param<float>*> gp, dp;
  gen->collect(gp);
  dis.collect(dp);
  nn::Adam<float> opt_g(gp, cfg.learning_rate);
  nn::Adam<float> opt_d(dp, cfg.learning_rate);

  DiffAugment<float> aug(cfg.augment_policy);
  Rng data_rng(stage_seed(cfg.seed, "gan-data"));
  Rng noise_rng(stage_seed(cfg.seed, "gan-noise"));
  Rng aug_rng(stage_seed(cfg.seed, "gan-aug"));

  const int m = cfg.batch_size;
  const double inv_m = 1.0 / double(m);
  TrainedGenerator out;
  out.config = cfg;
  out.net = gen;
  out.trained_iterations = cfg.iterations;

  std::vector<int> idx(static_cast<std::size_t>(m));
  std::vector<double> grad(static_cast<std::size_t>(m));
  double d_loss = 0.0, g_loss = 0.0;
  for (long iter = 1; iter <= cfg.iterations; ++iter) {
    for (int step = 0; step < cfg.d_steps_per_iter; ++step) {
      opt_d.zero_grad();
      for (auto& k : idx) k = int(data_rng.uniform_int(0, data.n - 1));
      Tensor<float> real = aug.forward(gandetail::gather(data, idx), aug_rng);
      Tensor<float> z = gandetail::draw_latent(m, cfg.latent_dim, noise_rng);
      Tensor<float> fake = aug.forward(gen->forward(z, nullptr, true), aug_rng);

      // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
      d_loss = 0.0;
      auto logits = dis.forward(real, nullptr, true);
      for (int i = 0; i < m; ++i) {
        d_loss += nn::softplus(-logits[std::size_t(i)]) * inv_m;
        grad[std::size_t(i)] = (nn::sigmoid(logits[std::size_t(i)]) - 1.0) * inv_m;
      }
      dis.backward(grad);
      logits = dis.forward(fake, nullptr, true);
      for (int i = 0; i < m; ++i) {
        d_loss += nn::softplus(logits[std::size_t(i)]) * inv_m;
        grad[std::size_t(i)] = nn::sigmoid(logits[std::size_t(i)]) * inv_m;
      }
      dis.backward(grad);
      opt_d.step();
    }

    opt_g.zero_grad();
    Tensor<float> z = gandetail::draw_latent(m, cfg.latent_dim, noise_rng);
    Tensor<float> fake = gen->forward(z, nullptr, true);
    aug.sample(m, cfg.image_size, cfg.image_size, aug_rng);
    auto logits = dis.forward(aug.apply(fake), nullptr, true);
    g_loss = 0.0;
    for (int i = 0; i < m; ++i) {
      g_loss += nn::softplus(-logits[std::size_t(i)]) * inv_m;
      grad[std::size_t(i)] = (nn::sigmoid(logits[std::size_t(i)]) - 1.0) * inv_m;
    }
    gen->backward(aug.backward(dis.backward(grad)));
    opt_g.step();

    if (iter == 1 || iter == cfg.iterations || iter % 50 == 0)
      out.loss_log.push_back({iter, d_loss, g_loss});
  }
  return out;
}

// Conditional adversarial training with vicinity-based batch construction:
// each slot draws an empirical label, perturbs it with Gaussian label noise,
// pairs it with a real image from the vicinity of the perturbed target, and
// feeds the (clamped) target as the label for both the real and the fake.
inline TrainedGenerator train_ccgan(const std::vector<Image>& images,
                                    const std::vector<double>& labels, const GanConfig& cfg,
                                    const VicinalConfig& vcfg) {
  cfg.validate();
  vcfg.validate();
  if (labels.size() != images.size())
    throw ConfigError("gan: one label per training image required");
  for (double y : labels)
    if (!(y > 0.0) || y > 1.0) throw DataError("gan: labels must lie in (0, 1]");
  Tensor<float> data = gandetail::images_to_tensor(images);
  gandetail::check_training_batch(data, cfg);

  const int n_data = int(labels.size());
  const auto [lo_it, hi_it] = std::minmax_element(labels.begin(), labels.end());

  auto gen = std::make_shared<GeneratorNet<float>>(cfg, true);
  DiscriminatorNet<float> dis(cfg, true);
  {
    Rng gi(stage_seed(cfg.seed, "gan-init-g"));
    gen->init_params(gi);
    Rng di(stage_seed(cfg.seed, "gan-init-d"));
    dis.init_params(di);
  }
  std::vector<nn::Param<float>*> gp, dp;
  gen->collect(gp);
  dis.collect(dp);
  nn::Adam<float> opt_g(gp, cfg.learning_rate);
  nn::Adam<float> opt_d(dp, cfg.learning_rate);

  DiffAugment<float> aug(cfg.augment_policy);
  Rng data_rng(stage_seed(cfg.seed, "gan-data"));
  Rng noise_rng(stage_seed(cfg.seed, "gan-noise"));
  Rng aug_rng(stage_seed(cfg.seed, "gan-aug"));
  Rng eps_rng(stage_seed(cfg.seed, "gan-vicinal"));

  auto nearest_index = [&](double t) {
    int best = 0;
    double bd = std::abs(labels[0] - t);
    for (int k = 1; k < n_data; ++k) {
      const double d = std::abs(labels[std::size_t(k)] - t);
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    return best;
  };

  // empirical label + Gaussian noise; in hard mode retried so the vicinity is
  // nonempty, then snapped to the nearest training label as a last resort
  auto draw_target = [&]() {
    double t = 0.0;
    for (int attempt = 0; attempt < 20; ++attempt) {
      const int j = int(eps_rng.uniform_int(0, n_data - 1));
      t = labels[std::size_t(j)] +
          (vcfg.sigma > 0.0 ? eps_rng.normal(0.0, vcfg.sigma) : 0.0);
      if (vcfg.mode == VicinalConfig::Mode::soft) return t;
      for (int k = 0; k < n_data; ++k)
        if (std::abs(labels[std::size_t(k)] - t) <= vcfg.kappa) return t;
    }
    return labels[std::size_t(nearest_index(t))];
  };

  std::vector<int> members;
  auto pick_real = [&](double t) {
    if (vcfg.mode == VicinalConfig::Mode::hard) {
      members.clear();
      for (int k = 0; k < n_data; ++k)
        if (std::abs(labels[std::size_t(k)] - t) <= vcfg.kappa) members.push_back(k);
      return members[std::size_t(data_rng.uniform_int(0, int(members.size()) - 1))];
    }
    return int(data_rng.pick_weighted(soft_vicinity_weights(labels, t, vcfg.nu)));
  };

  const int m = cfg.batch_size;
  const double inv_m = 1.0 / double(m);
  TrainedGenerator out;
  out.config = cfg;
  out.conditional = true;
  out.vicinal = vcfg;
  out.label_lo = *lo_it;
  out.label_hi = *hi_it;
  out.net = gen;
  out.trained_iterations = cfg.iterations;

  std::vector<int> ridx(static_cast<std::size_t>(m));
  std::vector<double> batch_labels(static_cast<std::size_t>(m));
  std::vector<double> grad(static_cast<std::size_t>(m));
  double d_loss = 0.0, g_loss = 0.0;
  for (long iter = 1; iter <= cfg.iterations; ++iter) {
    for (int step = 0; step < cfg.d_steps_per_iter; ++step) {
      opt_d.zero_grad();
      for (int i = 0; i < m; ++i) {
        const double t = draw_target();
        ridx[std::size_t(i)] = pick_real(t);
        batch_labels[std::size_t(i)] = std::clamp(t, 0.0, 1.0);
      }
      Tensor<float> real = aug.forward(gandetail::gather(data, ridx), aug_rng);
      Tensor<float> z = gandetail::draw_latent(m, cfg.latent_dim, noise_rng);
      Tensor<float> fake = aug.forward(gen->forward(z, &batch_labels, true), aug_rng);

      d_loss = 0.0;
      auto logits = dis.forward(real, &batch_labels, true);
      for (int i = 0; i < m; ++i) {
        d_loss += vcfg.c1 * nn::softplus(-logits[std::size_t(i)]) * inv_m;
        grad[std::size_t(i)] = vcfg.c1 * (nn::sigmoid(logits[std::size_t(i)]) - 1.0) * inv_m;
      }
      dis.backward(grad);
      logits = dis.forward(fake, &batch_labels, true);
      for (int i = 0; i < m; ++i) {
        d_loss += vcfg.c2 * nn::softplus(logits[std::size_t(i)]) * inv_m;
        grad[std::size_t(i)] = vcfg.c2 * nn::sigmoid(logits[std::size_t(i)]) * inv_m;
      }
      dis.backward(grad);
      opt_d.step();
    }

    opt_g.zero_grad();
    for (int i = 0; i < m; ++i) batch_labels[std::size_t(i)] = std::clamp(draw_target(), 0.0, 1.0);
    Tensor<float> z = gandetail::draw_latent(m, cfg.latent_dim, noise_rng);
    Tensor<float> fake = gen->forward(z, &batch_labels, true);
    aug.sample(m, cfg.image_size, cfg.image_size, aug_rng);
    auto logits = dis.forward(aug.apply(fake), &batch_labels, true);
    g_loss = 0.0;
    for (int i = 0; i < m; ++i) {
      g_loss += nn::softplus(-logits[std::size_t(i)]) * inv_m;
      grad[std::size_t(i)] = (nn::sigmoid(logits[std::size_t(i)]) - 1.0) * inv_m;
    }
    gen->backward(aug.backward(dis.backward(grad)));
    opt_g.step();

    if (iter == 1 || iter == cfg.iterations || iter % 50 == 0)
      out.loss_log.push_back({iter, d_loss, g_loss});
  }
  return out;
}

// Raw generator output: n x channels x size x size in [-1,1]. A label is
// required iff the generator is conditional and must lie inside the trained
// label range; there is no silent extrapolation.
inline Tensor<float> sample_raw(const TrainedGenerator& gen, int n,
                                std::optional<double> label = std::nullopt,
                                std::uint64_t seed = 0) {
  if (!gen.net) throw ConfigError("sample: generator has no weights");
  if (n < 0) throw ConfigError("sample: n must be >= 0");
  if (gen.conditional && !label)
    throw ConfigError("sample: conditional generator requires a label");
  if (!gen.conditional && label)
    throw ConfigError("sample: unconditional generator does not take a label");
  if (label && (*label < gen.label_lo - 1e-12 || *label > gen.label_hi + 1e-12))
    throw LabelRangeError("sample: label " + csv::fmt(*label) + " outside trained range [" +
                          csv::fmt(gen.label_lo) + ", " + csv::fmt(gen.label_hi) + "]");
  const GanConfig& cfg = gen.config;
  if (n == 0) return Tensor<float>(0, cfg.image_channels, cfg.image_size, cfg.image_size);
  Rng rng(stage_seed(seed, "gan-sample"));
  Tensor<float> z = gandetail::draw_latent(n, cfg.latent_dim, rng);
  if (gen.conditional) {
    std::vector<double> lab(std::size_t(n), std::clamp(*label, 0.0, 1.0));
    return gen.net->forward(z, &lab, false);
  }
  return gen.net->forward(z, nullptr, false);
}

// Samples mapped to [0,1] images for persistence.
inline std::vector<Image> sample(const TrainedGenerator& gen, int n,
                                 std::optional<double> label = std::nullopt,
                                 std::uint64_t seed = 0) {
  return gandetail::tensor_to_images(sample_raw(gen, n, label, seed));
}

// ---- model artifact ----------------------------------------------------------

inline void save_generator(const TrainedGenerator& gen, const std::string& model_path,
                           const std::string& manifest_path) {
  if (!gen.net) throw ConfigError("save_generator: no weights to save");
  {
    std::ofstream out(model_path, std::ios::binary);
    if (!out) throw DataError("save_generator: cannot write " + model_path);
    out.write("PGGEN001", 8);
    gen.net->save_state(out);
    if (!out) throw DataError("save_generator: write failure on " + model_path);
  }
  const GanConfig& c = gen.config;
  std::ofstream mf(manifest_path);
  if (!mf) throw DataError("save_generator: cannot write " + manifest_path);
  mf << "kind=generator\n"
     << "conditional=" << (gen.conditional ? 1 : 0) << '\n'
     << "image_channels=" << c.image_channels << '\n'
     << "image_size=" << c.image_size << '\n'
     << "latent_dim=" << c.latent_dim << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "learning_rate=" << csv::fmt(c.learning_rate) << '\n'
     << "iterations=" << c.iterations << '\n'
     << "feature_map_base=" << c.feature_map_base << '\n'
     << "d_steps_per_iter=" << c.d_steps_per_iter << '\n'
     << "augment_policy=" << c.augment_policy << '\n'
     << "seed=" << c.seed << '\n'
     << "vicinal_mode="
     << (!gen.conditional ? "none"
                          : gen.vicinal.mode == VicinalConfig::Mode::hard ? "hard" : "soft")
     << '\n'
     << "sigma=" << csv::fmt(gen.vicinal.sigma) << '\n'
     << "kappa=" << csv::fmt(gen.vicinal.kappa) << '\n'
     << "c1=" << csv::fmt(gen.vicinal.c1) << '\n'
     << "c2=" << csv::fmt(gen.vicinal.c2) << '\n'
     << "nu=" << csv::fmt(gen.vicinal.nu) << '\n'
     << "mc_samples=" << gen.vicinal.mc_samples << '\n'
     << "vicinal_seed=" << gen.vicinal.seed << '\n'
     << "label_lo=" << csv::fmt(gen.label_lo) << '\n'
     << "label_hi=" << csv::fmt(gen.label_hi) << '\n'
     << "trained_iterations=" << gen.trained_iterations << '\n';
  if (!mf) throw DataError("save_generator: write failure on " + manifest_path);
}

inline TrainedGenerator load_generator(const std::string& model_path,
                                       const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("load_generator: cannot open " + manifest_path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(mf, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw DataError("load_generator: manifest missing key '" + key + "' in " + manifest_path);
    return it->second;
  };
  if (need("kind") != "generator")
    throw DataError("load_generator: manifest kind is not 'generator'");

  TrainedGenerator gen;
  GanConfig& c = gen.config;
  gen.conditional = need("conditional") == "1";
  c.image_channels = int(std::stol(need("image_channels")));
  c.image_size = int(std::stol(need("image_size")));
  c.latent_dim = int(std::stol(need("latent_dim")));
  c.batch_size = int(std::stol(need("batch_size")));
  c.learning_rate = csv::parse_double(need("learning_rate"), "learning_rate");
  c.iterations = std::stol(need("iterations"));
  c.feature_map_base = int(std::stol(need("feature_map_base")));
  c.d_steps_per_iter = int(std::stol(need("d_steps_per_iter")));
  c.augment_policy = need("augment_policy");
  c.seed = std::stoull(need("seed"));
  c.validate();

  const std::string mode = need("vicinal_mode");
  if (mode != "none" && mode != "hard" && mode != "soft")
    throw DataError("load_generator: unknown vicinal_mode '" + mode + "'");
  gen.vicinal.mode = mode == "soft" ? VicinalConfig::Mode::soft : VicinalConfig::Mode::hard;
  gen.vicinal.sigma = csv::parse_double(need("sigma"), "sigma");
  gen.vicinal.kappa = csv::parse_double(need("kappa"), "kappa");
  gen.vicinal.c1 = csv::parse_double(need("c1"), "c1");
  gen.vicinal.c2 = csv::parse_double(need("c2"), "c2");
  gen.vicinal.nu = csv::parse_double(need("nu"), "nu");
  gen.vicinal.mc_samples = int(std::stol(need("mc_samples")));
  gen.vicinal.seed = std::stoull(need("vicinal_seed"));
  gen.label_lo = csv::parse_double(need("label_lo"), "label_lo");
  gen.label_hi = csv::parse_double(need("label_hi"), "label_hi");
  gen.trained_iterations = std::stol(need("trained_iterations"));

  std::ifstream in(model_path, std::ios::binary);
  if (!in) throw DataError("load_generator: cannot open " + model_path);
  char magic[8] = {};
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "PGGEN001", 8) != 0)
    throw DataError("load_generator: bad magic in " + model_path);
  gen.net = std::make_shared<GeneratorNet<float>>(c, gen.conditional);
  gen.net->load_state(in);
  return gen;
}

}  // namespace prefgen
