#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "prefgen/common.hpp"

namespace prefgen {

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw DataError("mean_of: empty input");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

inline double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) throw DataError("sample_std: need at least 2 values");
  double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / double(xs.size() - 1));
}

// midranks with tie averaging
inline std::vector<double> ranks_of(const std::vector<double>& xs) {
  std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Mann-Whitney formulation; ties contribute half
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw DataError("roc_auc: length mismatch");
  auto r = ranks_of(scores);
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i]) {
      rank_sum_pos += r[i];
      ++n_pos;
    }
  std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc: need both classes");
  double u = rank_sum_pos - double(n_pos) * double(n_pos + 1) / 2.0;
  return u / (double(n_pos) * double(n_neg));
}

inline double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DataError("spearman_rho: bad input sizes");
  auto ra = ranks_of(a), rb = ranks_of(b);
  double ma = mean_of(ra), mb = mean_of(rb);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0 || db == 0) throw DataError("spearman_rho: constant input");
  return num / std::sqrt(da * db);
}

// Exact one-sided Wilcoxon signed-rank test for H1: median(diff) > 0.
// Zero differences are dropped (standard practice); ties get midranks.
// Exact null distribution enumerated over all 2^n sign patterns.
inline double wilcoxon_signed_rank_p_greater(const std::vector<double>& diffs) {
  std::vector<double> abs_d;
  std::vector<int> sign;
  for (double d : diffs) {
    if (d == 0.0) continue;
    abs_d.push_back(std::abs(d));
    sign.push_back(d > 0 ? 1 : -1);
  }
  std::size_t n = abs_d.size();
  if (n == 0) throw DataError("wilcoxon: all differences are zero");
  if (n > 20) throw ConfigError("wilcoxon: exact enumeration limited to n <= 20");
  auto r = ranks_of(abs_d);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (sign[i] > 0) w_plus += r[i];
  // p = P(W+ >= observed) under random signs
  std::size_t total = std::size_t(1) << n;
  std::size_t count = 0;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t(1) << i)) w += r[i];
    if (w >= w_plus - 1e-12) ++count;
  }
  return double(count) / double(total);
}

}  // namespace prefgen
