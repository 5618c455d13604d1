#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "prefgen/image.hpp"
#include "prefgen/ingest.hpp"
#include "prefgen/io.hpp"
#include "prefgen/types.hpp"

namespace prefgen {

struct WorldParams {
  int latent_dim = 6;  // L, capped by the render pattern basis
  int n_consumers = 400;
  int n_templates = 120;
  double alpha = -1.0;  // utility intercept
  double beta = 1.2;    // taste-style weight
  double gamma = 0.01;  // display-rank penalty
  std::uint64_t seed = 1;
  int n_themes = 0;  // 0 derives ~7 templates per theme
  int image_size = 32;
};

struct SyntheticWorld {
  WorldParams params;
  std::vector<std::string> consumer_ids;
  std::vector<std::vector<double>> u;  // taste vectors
  std::vector<std::string> template_ids;
  std::vector<std::vector<double>> s;  // style vectors
  std::vector<int> theme_of;           // template index -> theme index
  std::vector<int> display_rank;       // template index -> rank (1-based)
  std::vector<std::string> theme_ids;
  std::vector<int> cover_of_theme;             // theme index -> template index
  std::vector<std::vector<int>> theme_templates;  // theme index -> member templates
  std::map<std::string, int> consumer_index;
  std::map<std::string, int> template_index;

  void finalize() {
    consumer_index.clear();
    template_index.clear();
    for (std::size_t i = 0; i < consumer_ids.size(); ++i)
      consumer_index[consumer_ids[i]] = int(i);
    for (std::size_t j = 0; j < template_ids.size(); ++j)
      template_index[template_ids[j]] = int(j);
    theme_templates.assign(theme_ids.size(), {});
    for (std::size_t j = 0; j < theme_of.size(); ++j)
      theme_templates[theme_of[j]].push_back(int(j));
    cover_of_theme.assign(theme_ids.size(), -1);
    for (std::size_t th = 0; th < theme_templates.size(); ++th) {
      if (theme_templates[th].empty())
        throw Error("synthetic world: theme " + theme_ids[th] + " has no templates");
      cover_of_theme[th] = theme_templates[th].front();
    }
  }
};

namespace detail {

inline std::string idstr(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04d", prefix, i);
  return buf;
}

// Fixed spatial pattern basis for renders; |value| <= 1 everywhere so the
// tanh argument stays controlled and the basis is invertible.
constexpr int kMaxRenderDims = 8;

inline double pattern_trig(int k, int y, int x, int n) {
  double fx = n > 1 ? double(x) / double(n - 1) : 0.0;
  double fy = n > 1 ? double(y) / double(n - 1) : 0.0;
  constexpr double tau = 6.283185307179586476925286766559;
  switch (k) {
    case 0: return 1.0;
    case 1: return 2.0 * fx - 1.0;
    case 2: return 2.0 * fy - 1.0;
    case 3: return std::sin(tau * 2.0 * fx);
    case 4: return std::sin(tau * 2.0 * fy);
    case 5: return std::sin(tau * 1.5 * (fx + fy));
    case 6: return std::cos(tau * 3.0 * fx);
    case 7: return std::cos(tau * 2.0 * (fx - fy));
  }
  throw Error("render pattern index out of range");
}

inline double pattern_channel(int k, int ch) {
  if (k == 0) return 1.0;  // brightness moves all channels together
  static const double w[4][3] = {
      {1.0, 1.0, 1.0}, {1.0, 0.4, -0.6}, {-0.6, 1.0, 0.4}, {0.4, -0.6, 1.0}};
  return w[k % 4][ch];
}

inline double pattern_value(int k, int y, int x, int ch, int n) {
  return pattern_trig(k, y, x, n) * pattern_channel(k, ch);
}

constexpr double kRenderGain = 0.5;

}  // namespace detail

// px = 0.5 + 0.5*tanh(gain * sum_k s_k * pattern_k), quantized to the 8-bit
// grid so a PNG round trip is exact. Brightness (pattern 0) is monotone in s[0].
inline Image render_style_image(const std::vector<double>& sv, int n) {
  int L = int(sv.size());
  if (L < 1 || L > detail::kMaxRenderDims)
    throw ConfigError("render_style_image: latent_dim must be 1.." +
                      std::to_string(detail::kMaxRenderDims));
  Image img(n, n, 3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        double a = 0.0;
        for (int k = 0; k < L; ++k) a += sv[k] * detail::pattern_value(k, y, x, ch, n);
        img.at(y, x, ch) = quantize_u8(float(0.5 + 0.5 * std::tanh(detail::kRenderGain * a)));
      }
  return img;
}

// consumer "portrait": same basis over the taste vector plus seeded pixel noise
inline Image render_consumer_image(const std::vector<double>& uv, int n,
                                   std::uint64_t noise_seed, double noise_amp = 0.15) {
  int L = int(uv.size());
  if (L < 1 || L > detail::kMaxRenderDims)
    throw ConfigError("render_consumer_image: latent_dim out of range");
  Rng rng(noise_seed);
  Image img(n, n, 3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        double a = 0.0;
        for (int k = 0; k < L; ++k) a += uv[k] * detail::pattern_value(k, y, x, ch, n);
        a = detail::kRenderGain * a + noise_amp * rng.normal();
        img.at(y, x, ch) = quantize_u8(float(0.5 + 0.5 * std::tanh(a)));
      }
  return img;
}

// Least-squares inversion of the render: recover the style vector that best
// explains an arbitrary [0,1] image (used to score generated images against
// the choice oracle).
inline std::vector<double> invert_render_style(const Image& img, int L) {
  if (img.c != 3) throw DataError("invert_render_style: need a 3-channel image");
  if (L < 1 || L > detail::kMaxRenderDims)
    throw ConfigError("invert_render_style: latent_dim out of range");
  static std::map<std::pair<int, int>, Eigen::MatrixXd> cache;  // (n,L) -> pinv
  auto key = std::make_pair(img.h, L);
  auto it = cache.find(key);
  if (it == cache.end()) {
    int n = img.h;
    Eigen::MatrixXd P(std::size_t(n) * n * 3, L);
    std::size_t row = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        for (int ch = 0; ch < 3; ++ch, ++row)
          for (int k = 0; k < L; ++k) P(row, k) = detail::pattern_value(k, y, x, ch, n);
    Eigen::MatrixXd pinv = (P.transpose() * P).ldlt().solve(P.transpose());
    it = cache.emplace(key, std::move(pinv)).first;
  }
  if (img.w != img.h) throw DataError("invert_render_style: image must be square");
  Eigen::VectorXd z(std::size_t(img.h) * img.w * 3);
  std::size_t row = 0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < 3; ++ch, ++row) {
        double t = 2.0 * double(img.at(y, x, ch)) - 1.0;
        t = std::min(0.995, std::max(-0.995, t));
        z(row) = std::atanh(t) / detail::kRenderGain;
      }
  Eigen::VectorXd sv = it->second * z;
  return std::vector<double>(sv.data(), sv.data() + L);
}

namespace detail {

// deterministic k-means (k-means++ seeding, Lloyd iterations, empty clusters
// respawned on the farthest point)
inline std::vector<int> kmeans_assign(const std::vector<std::vector<double>>& pts, int k,
                                      Rng& rng) {
  int n = int(pts.size());
  int dim = int(pts[0].size());
  std::vector<std::vector<double>> centers;
  centers.reserve(k);
  centers.push_back(pts[std::size_t(rng.uniform_int(0, n - 1))]);
  auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (int t = 0; t < dim; ++t) d += (a[t] - b[t]) * (a[t] - b[t]);
    return d;
  };
  std::vector<double> best(n);
  while (int(centers.size()) < k) {
    double total = 0;
    for (int i = 0; i < n; ++i) {
      best[i] = dist2(pts[i], centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c)
        best[i] = std::min(best[i], dist2(pts[i], centers[c]));
      total += best[i];
    }
    if (total <= 0) {
      centers.push_back(pts[std::size_t(rng.uniform_int(0, n - 1))]);
      continue;
    }
    centers.push_back(pts[rng.pick_weighted(best)]);
  }
  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 30; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int arg = 0;
      double bd = dist2(pts[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        double d = dist2(pts[i], centers[c]);
        if (d < bd) {
          bd = d;
          arg = c;
        }
      }
      if (assign[i] != arg) {
        assign[i] = arg;
        changed = true;
      }
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (int t = 0; t < dim; ++t) sums[assign[i]][t] += pts[i][t];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // steal the point farthest from its own center
        int far_i = 0;
        double far_d = -1;
        for (int i = 0; i < n; ++i) {
          double d = dist2(pts[i], centers[assign[i]]);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        centers[c] = pts[far_i];
        assign[far_i] = c;
        changed = true;
      } else {
        for (int t = 0; t < dim; ++t) centers[c][t] = sums[c][t] / counts[c];
      }
    }
    if (!changed && iter > 0) break;
  }
  return assign;
}

}  // namespace detail

inline SyntheticWorld generate_world(const WorldParams& params_in) {
  WorldParams params = params_in;
  if (params.latent_dim < 2) throw ConfigError("generate_world: latent_dim must be >= 2");
  if (params.latent_dim > detail::kMaxRenderDims)
    throw ConfigError("generate_world: latent_dim exceeds render basis size");
  if (params.n_consumers < 1 || params.n_templates < 1)
    throw ConfigError("generate_world: counts must be positive");
  if (params.n_themes <= 0)
    params.n_themes = std::max(2, int(std::lround(params.n_templates / 7.0)));
  if (params.n_themes > params.n_templates)
    throw ConfigError("generate_world: more themes than templates");

  SyntheticWorld world;
  world.params = params;
  Rng rng(stage_seed(params.seed, "world-latents"));
  world.consumer_ids.reserve(params.n_consumers);
  world.u.reserve(params.n_consumers);
  for (int i = 0; i < params.n_consumers; ++i) {
    world.consumer_ids.push_back(detail::idstr("c", i));
    std::vector<double> v(params.latent_dim);
    for (auto& x : v) x = rng.normal();
    world.u.push_back(std::move(v));
  }
  world.template_ids.reserve(params.n_templates);
  world.s.reserve(params.n_templates);
  for (int j = 0; j < params.n_templates; ++j) {
    world.template_ids.push_back(detail::idstr("t", j));
    std::vector<double> v(params.latent_dim);
    for (auto& x : v) x = rng.normal();
    world.s.push_back(std::move(v));
  }

  Rng theme_rng(stage_seed(params.seed, "world-themes"));
  world.theme_of = detail::kmeans_assign(world.s, params.n_themes, theme_rng);
  for (int th = 0; th < params.n_themes; ++th)
    world.theme_ids.push_back(detail::idstr("theme", th));

  world.display_rank.resize(params.n_templates);
  for (int j = 0; j < params.n_templates; ++j) world.display_rank[j] = j + 1;
  Rng rank_rng(stage_seed(params.seed, "world-ranks"));
  rank_rng.shuffle(world.display_rank.begin(), world.display_rank.end());

  world.finalize();
  return world;
}

inline Image render_template_image(const SyntheticWorld& world, int j) {
  Image img = render_style_image(world.s[j], world.params.image_size);
  return img;
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double oracle_choice_prob_idx(const SyntheticWorld& world, int i, int j) {
  double dot = 0.0;
  for (int k = 0; k < world.params.latent_dim; ++k) dot += world.u[i][k] * world.s[j][k];
  return logistic(world.params.alpha + world.params.beta * dot -
                  world.params.gamma * world.display_rank[j]);
}

inline double oracle_choice_prob(const SyntheticWorld& world, const std::string& consumer_id,
                                 const std::string& template_id) {
  auto ci = world.consumer_index.find(consumer_id);
  if (ci == world.consumer_index.end())
    throw DataError("oracle_choice_prob: unknown consumer " + consumer_id);
  auto ti = world.template_index.find(template_id);
  if (ti == world.template_index.end())
    throw DataError("oracle_choice_prob: unknown template " + template_id);
  return oracle_choice_prob_idx(world, ci->second, ti->second);
}

// batched n x m probability table (consumers x templates)
inline Eigen::MatrixXd oracle_prob_table(const SyntheticWorld& world) {
  int n = world.params.n_consumers, m = world.params.n_templates, L = world.params.latent_dim;
  Eigen::MatrixXd U(n, L), S(m, L);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < L; ++k) U(i, k) = world.u[i][k];
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < L; ++k) S(j, k) = world.s[j][k];
  Eigen::MatrixXd Z = world.params.beta * (U * S.transpose());
  for (int j = 0; j < m; ++j)
    Z.col(j) = (Z.col(j).array() + world.params.alpha -
                world.params.gamma * world.display_rank[j])
                   .matrix();
  return Z.unaryExpr([](double z) { return logistic(z); });
}

// mean oracle choice probability of an arbitrary style vector over the
// world's (internal) consumers at a fixed reference rank
inline double oracle_popularity_of_style(const SyntheticWorld& world,
                                         const std::vector<double>& style, int ref_rank) {
  double acc = 0.0;
  for (int i = 0; i < world.params.n_consumers; ++i) {
    double dot = 0.0;
    for (int k = 0; k < world.params.latent_dim; ++k) dot += world.u[i][k] * style[k];
    acc += logistic(world.params.alpha + world.params.beta * dot -
                    world.params.gamma * ref_rank);
  }
  return acc / world.params.n_consumers;
}

// One session per consumer: every theme page is browsed; the cover draw is
// the theme-choice draw, so each emitted record is a genuine Bernoulli of its
// own oracle probability.
inline std::vector<RawOrderEvent> sample_order_events(const SyntheticWorld& world,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RawOrderEvent> events;
  events.reserve(world.consumer_ids.size());
  for (int i = 0; i < world.params.n_consumers; ++i) {
    RawOrderEvent ev;
    ev.consumer_id = world.consumer_ids[i];
    for (std::size_t th = 0; th < world.theme_ids.size(); ++th) {
      ThemePage page;
      page.theme_id = world.theme_ids[th];
      page.cover_template_id = world.template_ids[world.cover_of_theme[th]];
      for (int j : world.theme_templates[th]) page.template_ids.push_back(world.template_ids[j]);
      int cover = world.cover_of_theme[th];
      bool theme_chosen = rng.uniform() < oracle_choice_prob_idx(world, i, cover);
      if (theme_chosen) {
        ev.chosen_theme_ids.insert(page.theme_id);
        ev.chosen_template_ids.insert(page.cover_template_id);
        for (int j : world.theme_templates[th]) {
          if (j == cover) continue;
          if (rng.uniform() < oracle_choice_prob_idx(world, i, j))
            ev.chosen_template_ids.insert(world.template_ids[j]);
        }
      }
      ev.visible_theme_pages.push_back(std::move(page));
    }
    events.push_back(std::move(ev));
  }
  return events;
}

inline std::vector<ChoiceRecord> sample_choices(const SyntheticWorld& world,
                                                std::uint64_t seed) {
  return build_choice_records(sample_order_events(world, seed));
}

// ---- synthetic external photos ----------------------------------------------

struct SynthExternalPhoto {
  ExternalPhoto photo;
  std::string consumer_id;
  std::string theme_id;            // nearest style cluster, assigned explicitly
  std::vector<double> style;       // true background style
  std::vector<double> taste;       // photographed consumer's taste
};

// External evidence: consumers photographed against style backgrounds more
// extreme than anything in the internal catalog (style_scale * sqrt(L) radius).
inline std::vector<SynthExternalPhoto> make_external_photos(const SyntheticWorld& world,
                                                            int n_external,
                                                            double style_scale,
                                                            std::uint64_t seed) {
  Rng rng(seed);
  int L = world.params.latent_dim;
  int n = world.params.image_size;
  // theme centroids for the explicit assignment
  std::vector<std::vector<double>> centroid(world.theme_ids.size(), std::vector<double>(L, 0.0));
  for (std::size_t th = 0; th < world.theme_ids.size(); ++th) {
    for (int j : world.theme_templates[th])
      for (int k = 0; k < L; ++k) centroid[th][k] += world.s[j][k];
    for (int k = 0; k < L; ++k) centroid[th][k] /= double(world.theme_templates[th].size());
  }

  std::vector<SynthExternalPhoto> out;
  out.reserve(n_external);
  for (int e = 0; e < n_external; ++e) {
    SynthExternalPhoto ext;
    ext.consumer_id = detail::idstr("x", e);
    ext.taste.resize(L);
    for (auto& v : ext.taste) v = rng.normal();
    std::vector<double> dir(L);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& v : dir) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    ext.style.resize(L);
    for (int k = 0; k < L; ++k) ext.style[k] = style_scale * std::sqrt(double(L)) * dir[k] / norm;

    int best_th = 0;
    double best_d = -1;
    for (std::size_t th = 0; th < centroid.size(); ++th) {
      double d = 0;
      for (int k = 0; k < L; ++k)
        d += (ext.style[k] - centroid[th][k]) * (ext.style[k] - centroid[th][k]);
      if (best_d < 0 || d < best_d) {
        best_d = d;
        best_th = int(th);
      }
    }
    ext.theme_id = world.theme_ids[best_th];

    ext.photo.photo_id = detail::idstr("xt", e);
    ext.photo.image = render_style_image(ext.style, n);
    ext.photo.person_mask = PersonMask(n, n);
    // person silhouette: lower-center block; their face pattern fills it
    int x0 = n / 3, x1 = 2 * n / 3, y0 = n / 2, y1 = n;
    std::uint64_t face_seed = stage_seed(seed, "face-" + ext.consumer_id);
    Rng face_rng(face_seed);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        ext.photo.person_mask.at(y, x) = 1;
        int ly = y - y0, lx = x - x0;
        int ln = std::max(y1 - y0, x1 - x0);
        for (int ch = 0; ch < 3; ++ch) {
          double a = 0.0;
          for (int k = 0; k < L; ++k)
            a += ext.taste[k] * detail::pattern_value(k, ly, lx, ch, ln);
          a = detail::kRenderGain * a + 0.1 * face_rng.normal();
          ext.photo.image.at(y, x, ch) = quantize_u8(float(0.5 + 0.5 * std::tanh(a)));
        }
      }
    out.push_back(std::move(ext));
  }
  return out;
}

// ---- world persistence -------------------------------------------------------

inline void write_world(const std::string& dir, const SyntheticWorld& world) {
  std::filesystem::create_directories(dir);
  {
    csv::Writer w(dir + "/params.csv");
    w.row({"key", "value"});
    w.row({"latent_dim", std::to_string(world.params.latent_dim)});
    w.row({"n_consumers", std::to_string(world.params.n_consumers)});
    w.row({"n_templates", std::to_string(world.params.n_templates)});
    w.row({"alpha", csv::fmt(world.params.alpha)});
    w.row({"beta", csv::fmt(world.params.beta)});
    w.row({"gamma", csv::fmt(world.params.gamma)});
    w.row({"seed", std::to_string(world.params.seed)});
    w.row({"n_themes", std::to_string(world.params.n_themes)});
    w.row({"image_size", std::to_string(world.params.image_size)});
    w.close();
  }
  {
    csv::Writer w(dir + "/consumers.csv");
    for (std::size_t i = 0; i < world.consumer_ids.size(); ++i) {
      std::vector<std::string> row{world.consumer_ids[i]};
      for (double v : world.u[i]) row.push_back(csv::fmt(v));
      w.row(row);
    }
    w.close();
  }
  {
    csv::Writer w(dir + "/themes.csv");
    for (const auto& th : world.theme_ids) w.row({th});
    w.close();
  }
  {
    csv::Writer w(dir + "/templates.csv");
    for (std::size_t j = 0; j < world.template_ids.size(); ++j) {
      std::vector<std::string> row{world.template_ids[j], world.theme_ids[world.theme_of[j]],
                                   std::to_string(world.display_rank[j])};
      for (double v : world.s[j]) row.push_back(csv::fmt(v));
      w.row(row);
    }
    w.close();
  }
}

inline SyntheticWorld read_world(const std::string& dir) {
  SyntheticWorld world;
  auto params = csv::read_rows(dir + "/params.csv");
  for (std::size_t i = 1; i < params.size(); ++i) {
    const auto& kv = params[i];
    if (kv.size() != 2) throw DataError("bad params row in " + dir);
    const std::string& k = kv[0];
    const std::string& v = kv[1];
    if (k == "latent_dim") world.params.latent_dim = int(csv::parse_int(v, dir));
    else if (k == "n_consumers") world.params.n_consumers = int(csv::parse_int(v, dir));
    else if (k == "n_templates") world.params.n_templates = int(csv::parse_int(v, dir));
    else if (k == "alpha") world.params.alpha = csv::parse_double(v, dir);
    else if (k == "beta") world.params.beta = csv::parse_double(v, dir);
    else if (k == "gamma") world.params.gamma = csv::parse_double(v, dir);
    else if (k == "seed") world.params.seed = std::uint64_t(csv::parse_int(v, dir));
    else if (k == "n_themes") world.params.n_themes = int(csv::parse_int(v, dir));
    else if (k == "image_size") world.params.image_size = int(csv::parse_int(v, dir));
    else throw DataError("unknown world param '" + k + "' in " + dir);
  }
  int L = world.params.latent_dim;
  for (const auto& row : csv::read_rows(dir + "/consumers.csv")) {
    if (int(row.size()) != L + 1) throw DataError("bad consumer row in " + dir);
    world.consumer_ids.push_back(row[0]);
    std::vector<double> v(L);
    for (int k = 0; k < L; ++k) v[k] = csv::parse_double(row[k + 1], dir);
    world.u.push_back(std::move(v));
  }
  std::map<std::string, int> theme_idx;
  for (const auto& row : csv::read_rows(dir + "/themes.csv")) {
    if (row.size() != 1) throw DataError("bad theme row in " + dir);
    theme_idx.emplace(row[0], int(world.theme_ids.size()));
    world.theme_ids.push_back(row[0]);
  }
  for (const auto& row : csv::read_rows(dir + "/templates.csv")) {
    if (int(row.size()) != L + 3) throw DataError("bad template row in " + dir);
    world.template_ids.push_back(row[0]);
    auto it = theme_idx.find(row[1]);
    if (it == theme_idx.end()) throw DataError("unknown theme '" + row[1] + "' in " + dir);
    world.theme_of.push_back(it->second);
    world.display_rank.push_back(int(csv::parse_int(row[2], dir)));
    std::vector<double> v(L);
    for (int k = 0; k < L; ++k) v[k] = csv::parse_double(row[k + 3], dir);
    world.s.push_back(std::move(v));
  }
  world.finalize();
  return world;
}

}  // namespace prefgen
