#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "prefgen/embed.hpp"
#include "prefgen/gan.hpp"
#include "prefgen/image.hpp"
#include "prefgen/io.hpp"
#include "prefgen/predictor.hpp"
#include "prefgen/stats.hpp"
#include "prefgen/types.hpp"

namespace prefgen {

// ---- predicted-choice-probability comparison ---------------------------------

struct NamedEmbeddings {
  std::string name;
  std::vector<std::vector<double>> embeddings;  // one design embedding per image
};

struct ChoiceProbReport {
  std::vector<std::string> set_names;
  std::size_t baseline = 0;  // index into set_names
  std::vector<double> means;
  std::vector<double> normalized;  // means[s] / means[baseline]; baseline exactly 1
  std::vector<double> deltas;      // normalized - 1, as a fraction
  std::vector<std::vector<double>> per_image;  // per-set predicted popularity values
};

// Normalization/delta bookkeeping shared by the live comparison and by
// report fixtures built from already-known set means.
inline ChoiceProbReport make_choice_prob_report(std::vector<std::string> names,
                                                std::vector<double> means,
                                                std::vector<std::vector<double>> per_image,
                                                std::size_t baseline = 0) {
  if (names.empty()) throw DataError("choice-prob report: no image sets");
  if (means.size() != names.size() || per_image.size() != names.size())
    throw DataError("choice-prob report: names, means and per-image lists must align");
  if (baseline >= names.size())
    throw ConfigError("choice-prob report: baseline index out of range");
  if (!(means[baseline] > 0.0))
    throw DataError("choice-prob report: baseline mean must be positive");
  ChoiceProbReport r;
  r.set_names = std::move(names);
  r.baseline = baseline;
  r.means = std::move(means);
  r.per_image = std::move(per_image);
  r.normalized.resize(r.means.size());
  r.deltas.resize(r.means.size());
  for (std::size_t s = 0; s < r.means.size(); ++s) {
    r.normalized[s] = s == baseline ? 1.0 : r.means[s] / r.means[baseline];
    r.deltas[s] = r.normalized[s] - 1.0;
  }
  return r;
}

// Mean predicted popularity per named set, normalized against the baseline
// set. `ranks` carries one display rank per image, parallel to `image_sets`;
// generated images get theirs from the empirical-rank simulation.
inline ChoiceProbReport compare_choice_probs(const TrainedPredictor& pred,
                                             const std::vector<NamedEmbeddings>& image_sets,
                                             const std::vector<ConsumerProfile>& consumers,
                                             const std::vector<std::vector<double>>& ranks,
                                             std::size_t baseline = 0) {
  if (image_sets.empty()) throw DataError("compare_choice_probs: no image sets");
  if (ranks.size() != image_sets.size())
    throw DataError("compare_choice_probs: need one rank list per image set");
  std::vector<std::string> names;
  std::vector<double> means;
  std::vector<std::vector<double>> per_image;
  for (std::size_t s = 0; s < image_sets.size(); ++s) {
    const auto& set = image_sets[s];
    if (set.embeddings.empty())
      throw DataError("compare_choice_probs: empty image set " + set.name);
    if (ranks[s].size() != set.embeddings.size())
      throw DataError("compare_choice_probs: rank count mismatch in set " + set.name);
    std::vector<double> vals(set.embeddings.size());
    for (std::size_t i = 0; i < set.embeddings.size(); ++i)
      vals[i] = aggregate_popularity(pred, set.embeddings[i], ranks[s][i], consumers);
    names.push_back(set.name);
    means.push_back(mean_of(vals));
    per_image.push_back(std::move(vals));
  }
  return make_choice_prob_report(std::move(names), std::move(means), std::move(per_image),
                                 baseline);
}

// One header row of set names, one value row: the baseline column prints as
// 1.00 and every other column as a signed percentage change against it.
inline std::string format_choice_prob_table(const ChoiceProbReport& r,
                                            const std::string& row_label = "predicted") {
  std::string head = "evaluation", row = row_label;
  char buf[64];
  for (std::size_t s = 0; s < r.set_names.size(); ++s) {
    head += '\t';
    head += r.set_names[s];
    if (s == r.baseline)
      std::snprintf(buf, sizeof buf, "%.2f", r.normalized[s]);
    else
      std::snprintf(buf, sizeof buf, "%+.2f%%", 100.0 * r.deltas[s]);
    row += '\t';
    row += buf;
  }
  return head + '\n' + row + '\n';
}

// ---- distance-based popularity metric -----------------------------------------

struct DistanceReport {
  std::vector<double> per_image;  // one score per generated image
  double mean = 0.0;
  double median = 0.0;
};

namespace evdetail {

inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw DataError("distance metric: embedding length mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw DataError("median: empty input");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace evdetail

// Per generated image i: sum of squared normalized distances to the
// most-preferred references plus squared complements against the
// least-preferred ones. Distances are min-max normalized over every pair
// computed in this call, so scores are comparable only within one evaluation.
inline DistanceReport distance_metric(const std::vector<std::vector<double>>& generated,
                                      const std::vector<std::vector<double>>& most_preferred,
                                      const std::vector<std::vector<double>>& least_preferred) {
  if (most_preferred.empty() || least_preferred.empty())
    throw DataError("distance_metric: both reference sets must be nonempty");
  if (generated.empty()) throw DataError("distance_metric: no generated images");
  const std::size_t nj = most_preferred.size(), nk = least_preferred.size();
  std::vector<std::vector<double>> raw(generated.size(),
                                       std::vector<double>(nj + nk, 0.0));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    for (std::size_t j = 0; j < nj; ++j)
      raw[i][j] = evdetail::euclidean(generated[i], most_preferred[j]);
    for (std::size_t k = 0; k < nk; ++k)
      raw[i][nj + k] = evdetail::euclidean(generated[i], least_preferred[k]);
    for (double d : raw[i]) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  const double span = hi - lo;
  DistanceReport rep;
  rep.per_image.resize(generated.size());
  for (std::size_t i = 0; i < generated.size(); ++i) {
    double di = 0.0;
    for (std::size_t p = 0; p < nj + nk; ++p) {
      // a degenerate pool (every pair equidistant) normalizes to zero
      double d = span > 0.0 ? (raw[i][p] - lo) / span : 0.0;
      di += p < nj ? d * d : (1.0 - d) * (1.0 - d);
    }
    rep.per_image[i] = di;
  }
  rep.mean = mean_of(rep.per_image);
  rep.median = evdetail::median_of(rep.per_image);
  return rep;
}

// Most- and least-preferred template ids by observed adoption count. One sort
// by (count desc, id asc) supplies both ends, so the two picks never overlap;
// the least-preferred list comes back in ascending popularity.
inline std::pair<std::vector<std::string>, std::vector<std::string>>
select_preference_extremes(const std::map<std::string, long>& adoptions, int m = 3) {
  if (m < 1) throw ConfigError("select_preference_extremes: need m >= 1");
  if (adoptions.size() < std::size_t(2 * m))
    throw DataError("select_preference_extremes: need at least 2*m distinct templates");
  std::vector<std::pair<std::string, long>> order(adoptions.begin(), adoptions.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> top, bottom;
  for (int i = 0; i < m; ++i) top.push_back(order[std::size_t(i)].first);
  for (int i = 0; i < m; ++i) bottom.push_back(order[order.size() - 1 - std::size_t(i)].first);
  return {top, bottom};
}

// Mean/median rows, one column per named generator.
inline std::string format_distance_table(const std::vector<std::string>& names,
                                         const std::vector<DistanceReport>& reports) {
  if (names.empty() || names.size() != reports.size())
    throw DataError("format_distance_table: names and reports must align");
  std::string head = "statistic", mrow = "mean", drow = "median";
  char buf[64];
  for (std::size_t s = 0; s < names.size(); ++s) {
    head += '\t';
    head += names[s];
    std::snprintf(buf, sizeof buf, "%.2f", reports[s].mean);
    mrow += '\t';
    mrow += buf;
    std::snprintf(buf, sizeof buf, "%.2f", reports[s].median);
    drow += '\t';
    drow += buf;
  }
  return head + '\n' + mrow + '\n' + drow + '\n';
}

// ---- theme face-validity classifier -------------------------------------------

struct ClassifierConfig {
  int image_size = 32;
  int image_channels = 3;
  int feature_map_base = 16;
  int epochs = 40;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;

  GanConfig geometry() const {
    GanConfig g;
    g.image_size = image_size;
    g.image_channels = image_channels;
    g.feature_map_base = feature_map_base;
    g.validate();
    if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0))
      throw ConfigError("classifier config: epochs, batch size and learning rate "
                        "must be positive");
    return g;
  }
};

namespace evdetail {

// HWC [0,1] -> NCHW [-1,1]; unlike the training-set converter this accepts a
// single image
inline Tensor<float> batch_to_tensor(const std::vector<Image>& images) {
  if (images.empty()) throw DataError("classifier: empty image batch");
  const Image& first = images.front();
  Tensor<float> t(int(images.size()), first.c, first.h, first.w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& im = images[i];
    if (im.h != first.h || im.w != first.w || im.c != first.c)
      throw DataError("classifier: images must share one size");
    float* dst = t.sample(int(i));
    for (int ch = 0; ch < im.c; ++ch)
      for (int y = 0; y < im.h; ++y)
        for (int x = 0; x < im.w; ++x)
          dst[(std::size_t(ch) * im.h + y) * im.w + x] = im.at(y, x, ch) * 2.0f - 1.0f;
  }
  return t;
}

}  // namespace evdetail

// Binary image classifier reusing the discriminator pyramid; outputs the
// class-1 probability. Weights are shared between copies; prediction mutates
// only scratch activations, so holders must not predict concurrently.
struct ThemeClassifier {
  ClassifierConfig config;
  std::shared_ptr<DiscriminatorNet<float>> net;
  std::vector<double> epoch_loss;  // mean training loss per epoch

  std::vector<double> predict_batch(const std::vector<Image>& images) const {
    if (!net) throw ConfigError("theme classifier: no trained weights");
    Tensor<float> x = evdetail::batch_to_tensor(images);
    std::vector<double> logits = net->forward(x, nullptr, /*train=*/false);
    std::vector<double> probs(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) probs[i] = nn::sigmoid(logits[i]);
    return probs;
  }

  double predict(const Image& img) const { return predict_batch({img})[0]; }
};

inline ThemeClassifier train_theme_classifier(const std::vector<Image>& positives,
                                              const std::vector<Image>& negatives,
                                              const ClassifierConfig& cfg = {}) {
  if (positives.empty() || negatives.empty())
    throw DataError("train_theme_classifier: both classes must be nonempty");
  GanConfig geo = cfg.geometry();

  std::vector<Image> all;
  all.reserve(positives.size() + negatives.size());
  all.insert(all.end(), positives.begin(), positives.end());
  all.insert(all.end(), negatives.begin(), negatives.end());
  Tensor<float> X = evdetail::batch_to_tensor(all);
  if (X.c != geo.image_channels || X.h != geo.image_size || X.w != geo.image_size)
    throw ConfigError("train_theme_classifier: images do not match the configured shape");
  std::vector<double> y(all.size(), 0.0);
  for (std::size_t i = 0; i < positives.size(); ++i) y[i] = 1.0;

  ThemeClassifier clf;
  clf.config = cfg;
  clf.net = std::make_shared<DiscriminatorNet<float>>(geo, /*conditional=*/false);
  Rng init_rng(stage_seed(cfg.seed, "theme-init"));
  clf.net->init_params(init_rng);
  std::vector<nn::Param<float>*> params;
  clf.net->collect(params);
  nn::Adam<float> opt(params, float(cfg.learning_rate), 0.9f, 0.999f);
  Rng data_rng(stage_seed(cfg.seed, "theme-data"));

  const int n = X.n;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[std::size_t(i)] = i;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    data_rng.shuffle(order.begin(), order.end());
    double loss_acc = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int m = std::min(cfg.batch_size, n - start);
      Tensor<float> xb(m, X.c, X.h, X.w);
      std::vector<double> yb(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) {
        std::memcpy(xb.sample(i), X.sample(order[std::size_t(start + i)]),
                    sizeof(float) * X.per_sample());
        yb[std::size_t(i)] = y[std::size_t(order[std::size_t(start + i)])];
      }
      opt.zero_grad();
      std::vector<double> logits = clf.net->forward(xb, nullptr, /*train=*/true);
      std::vector<double> g;
      loss_acc += nn::bce_with_logits(logits, yb, &g) * m;
      clf.net->backward(g);
      opt.step();
    }
    clf.epoch_loss.push_back(loss_acc / n);
  }
  return clf;
}

inline PredictorMetrics evaluate_theme_classifier(const ThemeClassifier& clf,
                                                  const std::vector<Image>& positives,
                                                  const std::vector<Image>& negatives) {
  if (positives.empty() || negatives.empty())
    throw DataError("evaluate_theme_classifier: both classes must be nonempty");
  std::int64_t tp = 0, fn = 0, fp = 0, tn = 0;
  for (double p : clf.predict_batch(positives)) (p >= 0.5 ? tp : fn)++;
  for (double p : clf.predict_batch(negatives)) (p >= 0.5 ? fp : tn)++;
  PredictorMetrics m;
  m.accuracy = double(tp + tn) / double(tp + tn + fp + fn);
  m.fnr = double(fn) / double(fn + tp);
  m.fpr = double(fp) / double(fp + tn);
  m.balanced_accuracy = 1.0 - (m.fnr + m.fpr) / 2.0;
  return m;
}

// Fraction of images the scorer puts in class 1 (probability >= 0.5).
inline double hit_rate(const std::function<double(const Image&)>& classify,
                       const std::vector<Image>& generated) {
  if (generated.empty()) throw DataError("hit_rate: empty image set");
  std::size_t hits = 0;
  for (const auto& img : generated)
    if (classify(img) >= 0.5) ++hits;
  return double(hits) / double(generated.size());
}

inline double hit_rate(const ThemeClassifier& clf, const std::vector<Image>& generated) {
  if (generated.empty()) throw DataError("hit_rate: empty image set");
  std::size_t hits = 0;
  for (double p : clf.predict_batch(generated))
    if (p >= 0.5) ++hits;
  return double(hits) / double(generated.size());
}

// Real-image test metrics plus the generated-set hit rate in one row.
inline std::string format_classifier_table(const PredictorMetrics& m, double hit) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.3f\t%.3f\t%.3f\t%.2f\n", m.accuracy, m.fnr, m.fpr, hit);
  return std::string("accuracy\tfnr\tfpr\thit_rate\n") + buf;
}

// ---- histogram report emission -------------------------------------------------

struct NamedSeries {
  std::string name;
  std::vector<double> values;
};

struct HistogramTable {
  std::vector<std::string> names;
  std::vector<double> edges;              // bins + 1, shared across series
  std::vector<std::vector<long>> counts;  // [series][bin]
};

inline HistogramTable make_histograms(const std::vector<NamedSeries>& series, int bins) {
  if (bins < 1) throw ConfigError("make_histograms: need at least one bin");
  if (series.empty()) throw DataError("make_histograms: no series");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    if (s.values.empty()) throw DataError("make_histograms: empty series " + s.name);
    for (double v : s.values) {
      if (!std::isfinite(v)) throw DataError("make_histograms: non-finite value in " + s.name);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == lo) hi = lo + 1.0;  // all-equal input collapses into the first bin
  HistogramTable h;
  h.edges.resize(std::size_t(bins) + 1);
  for (int b = 0; b <= bins; ++b)
    h.edges[std::size_t(b)] = lo + (hi - lo) * double(b) / double(bins);
  for (const auto& s : series) {
    std::vector<long> c(std::size_t(bins), 0);
    for (double v : s.values) {
      int b = int(std::floor((v - lo) / (hi - lo) * bins));
      b = std::clamp(b, 0, bins - 1);  // the maximum lands in the last bin
      ++c[std::size_t(b)];
    }
    h.names.push_back(s.name);
    h.counts.push_back(std::move(c));
  }
  return h;
}

inline std::string format_histogram_table(const HistogramTable& h) {
  std::string out = "bin_lo\tbin_hi";
  for (const auto& n : h.names) {
    out += '\t';
    out += n;
  }
  out += '\n';
  const std::size_t bins = h.edges.size() - 1;
  for (std::size_t b = 0; b < bins; ++b) {
    out += csv::fmt(h.edges[b]) + '\t' + csv::fmt(h.edges[b + 1]);
    for (const auto& c : h.counts) {
      out += '\t';
      out += std::to_string(c[b]);
    }
    out += '\n';
  }
  return out;
}

// Grouped bar chart: one colored bar per series inside each bin slot, heights
// scaled to the tallest count, black axis lines on a white canvas.
inline Image render_histogram_plot(const HistogramTable& h, int width = 640,
                                   int height = 360) {
  static const float palette[6][3] = {
      {0.20f, 0.35f, 0.80f}, {0.85f, 0.40f, 0.15f}, {0.20f, 0.65f, 0.30f},
      {0.75f, 0.20f, 0.55f}, {0.55f, 0.55f, 0.20f}, {0.25f, 0.65f, 0.65f}};
  const int ml = 24, mb = 24, mt = 8, mr = 8;  // margins
  if (width < ml + mr + 16 || height < mt + mb + 16)
    throw ConfigError("render_histogram_plot: canvas too small");
  Image img(height, width, 3);
  std::fill(img.px.begin(), img.px.end(), 1.0f);
  long max_count = 1;
  for (const auto& c : h.counts)
    for (long v : c) max_count = std::max(max_count, v);
  const std::size_t bins = h.edges.size() - 1;
  const std::size_t ns = h.names.size();
  const double slot_w = double(width - ml - mr) / double(bins);
  const double bar_w = slot_w / double(ns + 1);  // leave a gap between slots
  const int plot_h = height - mt - mb;
  for (std::size_t s = 0; s < ns; ++s) {
    const float* col = palette[s % 6];
    for (std::size_t b = 0; b < bins; ++b) {
      int x0 = ml + int(double(b) * slot_w + double(s) * bar_w);
      int x1 = ml + int(double(b) * slot_w + double(s + 1) * bar_w) - 1;
      int bh = int(std::lround(double(h.counts[s][b]) / double(max_count) * plot_h));
      for (int x = std::max(x0, ml); x <= std::min(x1, width - mr - 1); ++x)
        for (int y = height - mb - bh; y < height - mb; ++y)
          for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = col[ch];
    }
  }
  for (int x = ml; x < width - mr; ++x)
    for (int ch = 0; ch < 3; ++ch) img.at(height - mb, x, ch) = 0.0f;
  for (int y = mt; y <= height - mb; ++y)
    for (int ch = 0; ch < 3; ++ch) img.at(y, ml - 1, ch) = 0.0f;
  return img;
}

// Bin-count table plus a rendered bar-chart raster.
inline HistogramTable emit_histograms(const std::vector<NamedSeries>& series, int bins,
                                      const std::string& table_path,
                                      const std::string& plot_path) {
  HistogramTable h = make_histograms(series, bins);
  std::ofstream out(table_path);
  if (!out) throw Error("emit_histograms: cannot write " + table_path);
  out << format_histogram_table(h);
  if (!out) throw Error("emit_histograms: write failure on " + table_path);
  out.close();
  write_png(plot_path, render_histogram_plot(h));
  return h;
}

}  // namespace prefgen
