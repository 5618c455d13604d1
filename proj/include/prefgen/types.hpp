#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prefgen/common.hpp"
#include "prefgen/image.hpp"

namespace prefgen {

enum class Source { internal, external };

inline const char* to_string(Source s) {
  return s == Source::internal ? "internal" : "external";
}
inline Source source_from_string(const std::string& s) {
  if (s == "internal") return Source::internal;
  if (s == "external") return Source::external;
  throw DataError("unknown source token: " + s);
}

struct ConsumerProfile {
  std::string consumer_id;
  std::vector<double> face_embedding;
  Source source = Source::internal;
};

struct DesignTemplate {
  std::string template_id;
  std::string theme_id;
  Image image;
  std::optional<int> display_rank;  // present for internal templates
  bool is_cover = false;
  Source source = Source::internal;

  bool operator==(const DesignTemplate&) const = default;
};

struct DesignEmbedding {
  std::string template_id;
  std::vector<double> vector;
};

enum class Exposure {
  chosen,
  unchosen_in_chosen_theme,
  cover_of_unchosen_theme,
  external_positive,
};

inline const char* to_string(Exposure e) {
  switch (e) {
    case Exposure::chosen: return "chosen";
    case Exposure::unchosen_in_chosen_theme: return "unchosen_in_chosen_theme";
    case Exposure::cover_of_unchosen_theme: return "cover_of_unchosen_theme";
    case Exposure::external_positive: return "external_positive";
  }
  throw Error("bad exposure enum");
}
inline Exposure exposure_from_string(const std::string& s) {
  if (s == "chosen") return Exposure::chosen;
  if (s == "unchosen_in_chosen_theme") return Exposure::unchosen_in_chosen_theme;
  if (s == "cover_of_unchosen_theme") return Exposure::cover_of_unchosen_theme;
  if (s == "external_positive") return Exposure::external_positive;
  throw DataError("unknown exposure token: " + s);
}

struct ChoiceRecord {
  std::string consumer_id;
  std::string template_id;
  int outcome = 0;  // 1 iff exposure is chosen or external_positive
  Exposure exposure = Exposure::chosen;

  bool operator==(const ChoiceRecord&) const = default;
};

inline ChoiceRecord make_choice_record(std::string consumer_id, std::string template_id,
                                       Exposure exposure) {
  int outcome =
      (exposure == Exposure::chosen || exposure == Exposure::external_positive) ? 1 : 0;
  return ChoiceRecord{std::move(consumer_id), std::move(template_id), outcome, exposure};
}

struct LabelEntry {
  std::string template_id;
  double raw_score = 0.0;        // aggregate predicted popularity
  double bin_value = 0.0;        // grid value after binning
  double normalized_label = 0.0; // bin_value / max bin_value

  bool operator==(const LabelEntry&) const = default;
};

struct PopularityLabelSet {
  std::vector<LabelEntry> entries;

  bool operator==(const PopularityLabelSet&) const = default;
};

struct DatasetStats {
  std::int64_t n_pairs = 0;
  std::int64_t n_positive = 0;
  std::int64_t n_negative = 0;
  double positive_rate = 0.0;
  std::vector<double> split_fractions;  // filled by callers that split
};

inline DatasetStats compute_dataset_stats(const std::vector<ChoiceRecord>& records) {
  if (records.empty()) throw DataError("compute_dataset_stats: empty dataset");
  DatasetStats st;
  st.n_pairs = std::int64_t(records.size());
  for (const auto& r : records) st.n_positive += (r.outcome == 1);
  st.n_negative = st.n_pairs - st.n_positive;
  st.positive_rate = double(st.n_positive) / double(st.n_pairs);
  return st;
}

// test set size is round-half-up of test_fraction*n so published counts
// reproduce exactly (0.4 * 33,804 = 13,521.6 -> 13,522)
inline std::size_t split_test_size(std::size_t n, double test_fraction) {
  return std::size_t(std::floor(test_fraction * double(n) + 0.5));
}

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_train_test(const std::vector<T>& records,
                                                           double test_fraction,
                                                           std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("split_train_test: test_fraction must be in (0,1)");
  std::size_t n = records.size();
  std::size_t n_test = split_test_size(n, test_fraction);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  std::pair<std::vector<T>, std::vector<T>> out;
  out.second.reserve(n_test);
  out.first.reserve(n - n_test);
  for (std::size_t i = 0; i < n; ++i)
    (i < n_test ? out.second : out.first).push_back(records[idx[i]]);
  return out;
}

}  // namespace prefgen
