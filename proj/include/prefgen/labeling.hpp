#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "prefgen/io.hpp"
#include "prefgen/types.hpp"

namespace prefgen {

using PopularityScores = std::vector<std::pair<std::string, double>>;

struct BinningConfig {
  double lo = 0.4, hi = 0.65;  // score range, subset of [0,1]
  double bin_width = 0.025;
  int per_label_cap = 200;              // 0 disables capping
  int min_per_label_replication = 0;    // 0 disables replication
  std::uint64_t seed = 0;

  int n_bins() const { return int(std::lround((hi - lo) / bin_width)); }

  void validate() const {
    if (!(lo >= 0.0 && lo < hi && hi <= 1.0))
      throw ConfigError("binning: need 0 <= lo < hi <= 1");
    if (!(bin_width > 0.0)) throw ConfigError("binning: bin_width must be positive");
    double ratio = (hi - lo) / bin_width;
    if (std::abs(ratio - std::lround(ratio)) > 1e-9)
      throw ConfigError("binning: bin_width must divide the score range");
  }
};

// Lower-edge convention on the grid lo, lo+w, ..., hi; a score exactly at hi
// maps to the top grid value. The small epsilon absorbs representation error
// at bin boundaries.
inline double bin_value_for(double score, const BinningConfig& cfg) {
  int k = int(std::floor((score - cfg.lo) / cfg.bin_width + 1e-9));
  k = std::min(k, cfg.n_bins());
  return cfg.lo + k * cfg.bin_width;
}

inline PopularityLabelSet bin_popularity(const PopularityScores& scores,
                                         const BinningConfig& cfg,
                                         std::size_t* n_dropped = nullptr) {
  cfg.validate();
  PopularityLabelSet set;
  std::size_t dropped = 0;
  for (const auto& [id, score] : scores) {
    if (score < cfg.lo - 1e-12 || score > cfg.hi + 1e-12) {
      ++dropped;
      continue;
    }
    LabelEntry e;
    e.template_id = id;
    e.raw_score = score;
    e.bin_value = bin_value_for(score, cfg);
    set.entries.push_back(std::move(e));
  }
  if (n_dropped) *n_dropped = dropped;
  if (set.entries.empty())
    throw DataError("bin_popularity: no scores inside [" + std::to_string(cfg.lo) + ", " +
                    std::to_string(cfg.hi) + "]");
  return set;
}

namespace detail {
inline std::map<double, std::vector<std::size_t>> group_by_bin(const PopularityLabelSet& set) {
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < set.entries.size(); ++i)
    groups[set.entries[i].bin_value].push_back(i);
  return groups;
}
}  // namespace detail

// uniform downsampling without replacement for overfull labels; survivors
// keep their original order
inline PopularityLabelSet cap_per_label(const PopularityLabelSet& set, int cap,
                                        std::uint64_t seed) {
  if (cap < 1) throw ConfigError("cap_per_label: cap must be >= 1");
  auto groups = detail::group_by_bin(set);
  std::vector<char> keep(set.entries.size(), 1);
  Rng rng(seed);
  for (auto& [bin, idxs] : groups) {
    if (int(idxs.size()) <= cap) continue;
    // partial Fisher-Yates: the first `cap` slots are the retained sample
    for (int k = 0; k < cap; ++k) {
      auto j = std::size_t(rng.uniform_int(k, std::int64_t(idxs.size()) - 1));
      std::swap(idxs[k], idxs[j]);
    }
    for (std::size_t k = cap; k < idxs.size(); ++k) keep[idxs[k]] = 0;
  }
  PopularityLabelSet out;
  for (std::size_t i = 0; i < set.entries.size(); ++i)
    if (keep[i]) out.entries.push_back(set.entries[i]);
  return out;
}

// labels with fewer than min_count entries are padded by resampling with
// replacement; padding is appended after the originals
inline PopularityLabelSet replicate_small_classes(const PopularityLabelSet& set, int min_count,
                                                  std::uint64_t seed) {
  if (min_count < 1) throw ConfigError("replicate_small_classes: min_count must be >= 1");
  if (set.entries.empty()) throw DataError("replicate_small_classes: empty label set");
  auto groups = detail::group_by_bin(set);
  PopularityLabelSet out = set;
  Rng rng(seed);
  for (auto& [bin, idxs] : groups) {
    for (int k = int(idxs.size()); k < min_count; ++k)
      out.entries.push_back(
          set.entries[idxs[std::size_t(rng.uniform_int(0, std::int64_t(idxs.size()) - 1))]]);
  }
  return out;
}

inline PopularityLabelSet normalize_labels(const PopularityLabelSet& set) {
  if (set.entries.empty()) throw DataError("normalize_labels: empty label set");
  double max_bin = 0.0;
  for (const auto& e : set.entries) max_bin = std::max(max_bin, e.bin_value);
  if (!(max_bin > 0.0)) throw DataError("normalize_labels: max bin value must be positive");
  PopularityLabelSet out = set;
  for (auto& e : out.entries) e.normalized_label = e.bin_value / max_bin;
  return out;
}

struct LabelPipelineResult {
  PopularityLabelSet set;
  std::size_t n_dropped = 0;
  std::map<double, std::size_t> counts_binned;      // per bin value, after binning
  std::map<double, std::size_t> counts_capped;      // after capping
  std::map<double, std::size_t> counts_replicated;  // after replication
};

inline LabelPipelineResult label_pipeline(const PopularityScores& scores,
                                          const BinningConfig& cfg) {
  LabelPipelineResult res;
  auto set = bin_popularity(scores, cfg, &res.n_dropped);
  for (const auto& [bin, idxs] : detail::group_by_bin(set)) res.counts_binned[bin] = idxs.size();
  if (cfg.per_label_cap > 0)
    set = cap_per_label(set, cfg.per_label_cap, stage_seed(cfg.seed, "label-cap"));
  for (const auto& [bin, idxs] : detail::group_by_bin(set)) res.counts_capped[bin] = idxs.size();
  if (cfg.min_per_label_replication > 0)
    set = replicate_small_classes(set, cfg.min_per_label_replication,
                                  stage_seed(cfg.seed, "label-replicate"));
  for (const auto& [bin, idxs] : detail::group_by_bin(set))
    res.counts_replicated[bin] = idxs.size();
  res.set = normalize_labels(set);
  return res;
}

inline void write_label_summary(const std::string& path, const LabelPipelineResult& res) {
  std::ofstream out(path);
  if (!out) throw Error("write_label_summary: cannot write " + path);
  out << "dropped_out_of_range=" << res.n_dropped << "\n";
  out << "bin_value,count_binned,count_after_cap,count_after_replication\n";
  for (const auto& [bin, n] : res.counts_binned) {
    auto cap_it = res.counts_capped.find(bin);
    auto rep_it = res.counts_replicated.find(bin);
    out << csv::fmt(bin) << ',' << n << ','
        << (cap_it == res.counts_capped.end() ? 0 : cap_it->second) << ','
        << (rep_it == res.counts_replicated.end() ? 0 : rep_it->second) << '\n';
  }
  if (!out) throw Error("write_label_summary: write failure on " + path);
}

}  // namespace prefgen
