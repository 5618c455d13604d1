#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "prefgen/common.hpp"

namespace prefgen {

// Binary classification random forest: bootstrap per tree, sqrt(d) feature
// subsets per split, weighted Gini, leaves store the weighted positive-class
// frequency and prediction averages those frequencies over trees.

struct ForestConfig {
  int n_trees = 100;
  bool balanced_class_weights = true;  // w_c = n / (2 * n_c), computed on the full set
  int max_depth = 0;                   // 0 = unbounded
  int mtry = 0;                        // 0 = floor(sqrt(d))
  std::uint64_t seed = 0;
};

struct ForestNode {
  int feature = -1;  // -1 marks a leaf
  float threshold = 0.0f;
  int left = -1, right = -1;
  float p1 = 0.0f;  // leaf positive probability
};

struct ForestTree {
  std::vector<ForestNode> nodes;

  double predict(const float* x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].p1;
  }
};

class RandomForest {
 public:
  int n_features() const { return n_features_; }
  int n_trees() const { return int(trees_.size()); }
  const std::vector<ForestTree>& trees() const { return trees_; }

  double predict_prob(const float* x) const {
    double acc = 0.0;
    for (const auto& t : trees_) acc += t.predict(x);
    return acc / double(trees_.size());
  }

  double predict_prob(const std::vector<float>& x) const {
    if (int(x.size()) != n_features_)
      throw DataError("forest: feature dimension " + std::to_string(x.size()) +
                      ", model expects " + std::to_string(n_features_));
    return predict_prob(x.data());
  }

  static RandomForest from_trees(int n_features, std::vector<ForestTree> trees) {
    if (n_features < 1 || trees.empty()) throw ConfigError("forest: empty model");
    RandomForest f;
    f.n_features_ = n_features;
    f.trees_ = std::move(trees);
    return f;
  }

  // X is row-major n x d
  static RandomForest train(const std::vector<float>& X, const std::vector<int>& y, int d,
                            const ForestConfig& cfg) {
    if (d < 1 || X.size() % d != 0) throw ConfigError("forest: bad feature matrix shape");
    std::size_t n = X.size() / d;
    if (n < 2) throw DataError("forest: need at least 2 rows");
    if (y.size() != n) throw DataError("forest: label count mismatch");
    std::size_t n1 = 0;
    for (int v : y) {
      if (v != 0 && v != 1) throw DataError("forest: labels must be 0/1");
      n1 += v;
    }
    if (n1 == 0 || n1 == n) throw DataError("forest: single-class training set");
    if (cfg.n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");

    double w1 = 1.0, w0 = 1.0;
    if (cfg.balanced_class_weights) {
      w1 = double(n) / (2.0 * double(n1));
      w0 = double(n) / (2.0 * double(n - n1));
    }
    int mtry = cfg.mtry > 0 ? std::min(cfg.mtry, d) : std::max(1, int(std::sqrt(double(d))));

    RandomForest forest;
    forest.n_features_ = d;
    forest.trees_.resize(cfg.n_trees);
    for (int t = 0; t < cfg.n_trees; ++t) {
      Rng rng(stage_seed(cfg.seed, "tree-" + std::to_string(t)));
      std::vector<std::uint32_t> sample(n);
      for (auto& s : sample) s = std::uint32_t(rng.uniform_int(0, std::int64_t(n) - 1));
      TreeBuilder b{X, y, d, w0, w1, mtry, cfg.max_depth, rng, forest.trees_[t].nodes};
      b.build(std::move(sample));
    }
    return forest;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("forest: cannot write " + path);
    const char magic[8] = {'P', 'G', 'R', 'F', '0', '0', '0', '1'};
    out.write(magic, 8);
    auto put32 = [&](std::int32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
    put32(n_features_);
    put32(std::int32_t(trees_.size()));
    for (const auto& t : trees_) {
      put32(std::int32_t(t.nodes.size()));
      out.write(reinterpret_cast<const char*>(t.nodes.data()),
                std::streamsize(t.nodes.size() * sizeof(ForestNode)));
    }
    if (!out) throw Error("forest: write failure on " + path);
  }

  static RandomForest load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("forest: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "PGRF0001", 8) != 0)
      throw DataError("forest: bad model file " + path);
    auto get32 = [&]() {
      std::int32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), 4);
      return v;
    };
    RandomForest f;
    f.n_features_ = get32();
    std::int32_t n_trees = get32();
    if (!in || f.n_features_ < 1 || n_trees < 1)
      throw DataError("forest: corrupt model header in " + path);
    f.trees_.resize(n_trees);
    for (auto& t : f.trees_) {
      std::int32_t n_nodes = get32();
      if (!in || n_nodes < 1) throw DataError("forest: corrupt tree in " + path);
      t.nodes.resize(n_nodes);
      in.read(reinterpret_cast<char*>(t.nodes.data()),
              std::streamsize(t.nodes.size() * sizeof(ForestNode)));
    }
    if (!in) throw DataError("forest: truncated model file " + path);
    return f;
  }

 private:
  struct TreeBuilder {
    const std::vector<float>& X;
    const std::vector<int>& y;
    int d;
    double w0, w1;
    int mtry;
    int max_depth;
    Rng& rng;
    std::vector<ForestNode>& nodes;
    std::vector<int> feature_pool;

    void build(std::vector<std::uint32_t> sample) {
      feature_pool.resize(d);
      for (int f = 0; f < d; ++f) feature_pool[f] = f;
      grow(std::move(sample), 0);
    }

    double weight_of(std::uint32_t i) const { return y[i] ? w1 : w0; }

    int make_leaf(const std::vector<std::uint32_t>& sample) {
      double wp = 0, wt = 0;
      for (auto i : sample) {
        double w = weight_of(i);
        wt += w;
        wp += y[i] ? w : 0.0;
      }
      nodes.push_back(ForestNode{-1, 0.0f, -1, -1, float(wp / wt)});
      return int(nodes.size()) - 1;
    }

    // returns node index
    int grow(std::vector<std::uint32_t> sample, int depth) {
      double wp = 0, wt = 0;
      for (auto i : sample) {
        double w = weight_of(i);
        wt += w;
        wp += y[i] ? w : 0.0;
      }
      bool pure = wp == 0.0 || wp == wt;
      if (pure || sample.size() < 2 || (max_depth > 0 && depth >= max_depth))
        return make_leaf(sample);

      // draw mtry distinct candidate features
      for (int k = 0; k < mtry; ++k) {
        int j = int(rng.uniform_int(k, d - 1));
        std::swap(feature_pool[k], feature_pool[j]);
      }

      double parent_gini = 1.0 - (wp / wt) * (wp / wt) - ((wt - wp) / wt) * ((wt - wp) / wt);
      int best_f = -1;
      float best_thr = 0.0f;
      double best_gain = 1e-12;
      std::vector<std::pair<float, std::uint32_t>> vals(sample.size());
      for (int k = 0; k < mtry; ++k) {
        int f = feature_pool[k];
        for (std::size_t r = 0; r < sample.size(); ++r)
          vals[r] = {X[std::size_t(sample[r]) * d + f], sample[r]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;
        double wl = 0, wpl = 0;
        for (std::size_t r = 0; r + 1 < vals.size(); ++r) {
          double w = weight_of(vals[r].second);
          wl += w;
          wpl += y[vals[r].second] ? w : 0.0;
          if (vals[r].first == vals[r + 1].first) continue;
          double wr = wt - wl, wpr = wp - wpl;
          double gl = 1.0 - (wpl / wl) * (wpl / wl) - ((wl - wpl) / wl) * ((wl - wpl) / wl);
          double gr = 1.0 - (wpr / wr) * (wpr / wr) - ((wr - wpr) / wr) * ((wr - wpr) / wr);
          double gain = parent_gini - (wl / wt) * gl - (wr / wt) * gr;
          if (gain > best_gain) {
            best_gain = gain;
            best_f = f;
            best_thr = 0.5f * (vals[r].first + vals[r + 1].first);
            // midpoint can collapse onto the left value in float; nudge to keep
            // the partition nonempty on both sides
            if (best_thr >= vals[r + 1].first) best_thr = vals[r].first;
          }
        }
      }
      if (best_f < 0) return make_leaf(sample);

      std::vector<std::uint32_t> left, right;
      for (auto i : sample) {
        if (X[std::size_t(i) * d + best_f] <= best_thr)
          left.push_back(i);
        else
          right.push_back(i);
      }
      if (left.empty() || right.empty()) return make_leaf(sample);
      sample.clear();
      sample.shrink_to_fit();

      nodes.push_back(ForestNode{best_f, best_thr, -1, -1, 0.0f});
      int self = int(nodes.size()) - 1;
      int l = grow(std::move(left), depth + 1);
      int r = grow(std::move(right), depth + 1);
      nodes[self].left = l;
      nodes[self].right = r;
      return self;
    }
  };

  int n_features_ = 0;
  std::vector<ForestTree> trees_;
};

}  // namespace prefgen
