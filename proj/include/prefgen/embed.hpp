#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "prefgen/image.hpp"
#include "prefgen/types.hpp"

namespace prefgen {

enum class EmbedderKind { face, design };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::face;
  int output_dim = 128;  // 128 for faces, 1000 for designs
  std::string implementation_id = "random-projection-v1";
  std::uint64_t seed = 0;
};

// Deterministic default embedder: downsample to a fixed grayscale grid,
// append a constant bias cell (so an all-black image still maps off the
// origin), then apply a seeded Gaussian projection. Face embeddings are
// L2-normalized, design embeddings stay activation-like.
class Embedder {
 public:
  static constexpr int kGrid = 16;

  explicit Embedder(EmbedderSpec spec) : spec_(spec) {
    if (spec_.output_dim < 1) throw ConfigError("embedder: output_dim must be positive");
    int in_dim = kGrid * kGrid + 1;
    proj_.resize(std::size_t(spec_.output_dim) * in_dim);
    Rng rng(stage_seed(spec_.seed, spec_.kind == EmbedderKind::face ? "embed-face"
                                                                    : "embed-design"));
    double scale = 1.0 / std::sqrt(double(in_dim));
    for (auto& v : proj_) v = scale * rng.normal();
  }

  const EmbedderSpec& spec() const { return spec_; }

  // test hook: row-major projection matrix, output_dim x (kGrid*kGrid+1)
  std::vector<double>& projection() { return proj_; }

  std::vector<double> embed(const Image& img) const {
    if (img.h < 1 || img.w < 1 || img.px.empty())
      throw DataError("embed: empty image");
    auto g = downsample_gray(img);
    g.push_back(1.0);  // bias cell
    int in_dim = int(g.size());
    std::vector<double> out(spec_.output_dim, 0.0);
    for (int r = 0; r < spec_.output_dim; ++r) {
      const double* row = proj_.data() + std::size_t(r) * in_dim;
      double acc = 0.0;
      for (int c = 0; c < in_dim; ++c) acc += row[c] * g[c];
      out[r] = acc;
    }
    if (spec_.kind == EmbedderKind::face) {
      double n2 = 0.0;
      for (double v : out) n2 += v * v;
      double n = std::sqrt(n2);
      if (n < 1e-300) throw Error("embed: degenerate zero projection");
      for (double& v : out) v /= n;
    }
    return out;
  }

 private:
  static std::vector<double> downsample_gray(const Image& img) {
    std::vector<double> acc(kGrid * kGrid, 0.0);
    std::vector<int> cnt(kGrid * kGrid, 0);
    for (int y = 0; y < img.h; ++y) {
      int gy = std::min(kGrid - 1, y * kGrid / img.h);
      for (int x = 0; x < img.w; ++x) {
        int gx = std::min(kGrid - 1, x * kGrid / img.w);
        double v = 0.0;
        for (int ch = 0; ch < img.c; ++ch) v += img.at(y, x, ch);
        acc[gy * kGrid + gx] += v / img.c;
        ++cnt[gy * kGrid + gx];
      }
    }
    for (int i = 0; i < kGrid * kGrid; ++i)
      if (cnt[i]) acc[i] /= cnt[i];
    return acc;
  }

  EmbedderSpec spec_;
  std::vector<double> proj_;
};

inline Embedder make_face_embedder(int dim = 128, std::uint64_t seed = 0) {
  return Embedder(EmbedderSpec{EmbedderKind::face, dim, "random-projection-v1", seed});
}

inline Embedder make_design_embedder(int dim = 1000, std::uint64_t seed = 0) {
  return Embedder(EmbedderSpec{EmbedderKind::design, dim, "random-projection-v1", seed});
}

inline std::vector<double> embed_face(const Embedder& e, const Image& img) {
  if (e.spec().kind != EmbedderKind::face) throw ConfigError("embed_face: wrong embedder kind");
  return e.embed(img);
}

inline std::vector<double> embed_design(const Embedder& e, const Image& img) {
  if (e.spec().kind != EmbedderKind::design)
    throw ConfigError("embed_design: wrong embedder kind");
  return e.embed(img);
}

inline std::vector<double> average_consumer_embedding(
    const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) throw DataError("average_consumer_embedding: empty input");
  std::size_t dim = vectors[0].size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim)
      throw DataError("average_consumer_embedding: mixed vector lengths");
    for (std::size_t k = 0; k < dim; ++k) mean[k] += v[k];
  }
  for (double& v : mean) v /= double(vectors.size());
  return mean;
}

}  // namespace prefgen
