#pragma once

#include <map>
#include <string>
#include <vector>

#include "prefgen/forest.hpp"
#include "prefgen/types.hpp"

namespace prefgen {

struct FeatureRow {
  std::string consumer_id;
  std::string template_id;
  std::vector<double> x;  // concat(face embedding, design embedding, rank)
  int y = 0;

  bool operator==(const FeatureRow&) const = default;
};

enum class ClassWeighting { balanced, none };
enum class Provenance { internal_only, internal_and_external };

inline const char* to_string(Provenance p) {
  return p == Provenance::internal_only ? "internal_only" : "internal_and_external";
}
inline Provenance provenance_from_string(const std::string& s) {
  if (s == "internal_only") return Provenance::internal_only;
  if (s == "internal_and_external") return Provenance::internal_and_external;
  throw DataError("unknown provenance token: " + s);
}

struct PredictorConfig {
  int n_trees = 100;
  ClassWeighting class_weighting = ClassWeighting::balanced;
  std::uint64_t seed = 0;
  int upsample_target = 0;  // applied by the pipeline to the training split
};

struct TrainedPredictor {
  RandomForest forest;
  PredictorConfig config;
  int e_f = -1, e_d = -1;  // embedding-dimension stamps when known
  Provenance provenance = Provenance::internal_only;

  int feature_dim() const { return forest.n_features(); }
};

struct PredictorMetrics {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double fnr = 0.0;
  double fpr = 0.0;
};

inline std::vector<FeatureRow> build_feature_rows(
    const std::vector<ChoiceRecord>& records,
    const std::map<std::string, std::vector<double>>& consumer_embeddings,
    const std::map<std::string, std::vector<double>>& design_embeddings,
    const std::map<std::string, int>& ranks) {
  std::vector<FeatureRow> rows;
  rows.reserve(records.size());
  std::size_t e_f = 0, e_d = 0;
  for (const auto& rec : records) {
    auto ci = consumer_embeddings.find(rec.consumer_id);
    if (ci == consumer_embeddings.end())
      throw DataError("build_feature_rows: no face embedding for consumer " + rec.consumer_id);
    auto di = design_embeddings.find(rec.template_id);
    if (di == design_embeddings.end())
      throw DataError("build_feature_rows: no design embedding for template " + rec.template_id);
    auto ri = ranks.find(rec.template_id);
    if (ri == ranks.end())
      throw DataError("build_feature_rows: no rank for template " + rec.template_id);
    if (e_f == 0) e_f = ci->second.size();
    if (e_d == 0) e_d = di->second.size();
    if (ci->second.size() != e_f)
      throw DataError("build_feature_rows: face embedding length mismatch for " +
                      rec.consumer_id);
    if (di->second.size() != e_d)
      throw DataError("build_feature_rows: design embedding length mismatch for " +
                      rec.template_id);
    FeatureRow row;
    row.consumer_id = rec.consumer_id;
    row.template_id = rec.template_id;
    row.y = rec.outcome;
    row.x.reserve(e_f + e_d + 1);
    row.x.insert(row.x.end(), ci->second.begin(), ci->second.end());
    row.x.insert(row.x.end(), di->second.begin(), di->second.end());
    row.x.push_back(double(ri->second));
    rows.push_back(std::move(row));
  }
  return rows;
}

// minority class resampled with replacement up to target; majority untouched
inline std::vector<FeatureRow> upsample_minority(const std::vector<FeatureRow>& rows,
                                                 std::size_t target, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < rows.size(); ++i) (rows[i].y ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty())
    throw DataError("upsample_minority: both classes must be present");
  // on a tie the positive class counts as the minority
  const auto& minority = pos.size() <= neg.size() ? pos : neg;
  if (target < minority.size())
    throw ConfigError("upsample_minority: target below current minority count");
  std::vector<FeatureRow> out = rows;
  out.reserve(rows.size() + (target - minority.size()));
  Rng rng(seed);
  for (std::size_t k = minority.size(); k < target; ++k)
    out.push_back(rows[minority[std::size_t(
        rng.uniform_int(0, std::int64_t(minority.size()) - 1))]]);
  return out;
}

inline TrainedPredictor train_predictor(const std::vector<FeatureRow>& rows,
                                        const PredictorConfig& cfg,
                                        Provenance provenance = Provenance::internal_only,
                                        int e_f = -1, int e_d = -1) {
  if (rows.size() < 2) throw DataError("train_predictor: need at least 2 rows");
  int d = int(rows[0].x.size());
  std::vector<float> X(rows.size() * std::size_t(d));
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (int(rows[i].x.size()) != d)
      throw DataError("train_predictor: inconsistent feature lengths");
    for (int k = 0; k < d; ++k) X[i * d + k] = float(rows[i].x[k]);
    y[i] = rows[i].y;
  }
  ForestConfig fc;
  fc.n_trees = cfg.n_trees;
  fc.balanced_class_weights = cfg.class_weighting == ClassWeighting::balanced;
  fc.seed = cfg.seed;
  TrainedPredictor pred;
  pred.forest = RandomForest::train(X, y, d, fc);
  pred.config = cfg;
  pred.provenance = provenance;
  pred.e_f = e_f;
  pred.e_d = e_d;
  return pred;
}

inline double predict_choice_prob(const TrainedPredictor& pred, const std::vector<double>& X_i,
                                  const std::vector<double>& V_j, double Z_j) {
  if (pred.e_f >= 0 && int(X_i.size()) != pred.e_f)
    throw DataError("predict_choice_prob: face embedding length " +
                    std::to_string(X_i.size()) + ", model expects " + std::to_string(pred.e_f));
  if (pred.e_d >= 0 && int(V_j.size()) != pred.e_d)
    throw DataError("predict_choice_prob: design embedding length " +
                    std::to_string(V_j.size()) + ", model expects " + std::to_string(pred.e_d));
  if (int(X_i.size() + V_j.size()) + 1 != pred.feature_dim())
    throw DataError("predict_choice_prob: feature dimension mismatch");
  std::vector<float> x;
  x.reserve(pred.feature_dim());
  for (double v : X_i) x.push_back(float(v));
  for (double v : V_j) x.push_back(float(v));
  x.push_back(float(Z_j));
  return pred.forest.predict_prob(x);
}

// mean predicted choice probability over internal consumers; external
// profiles in the list are filtered out by contract
inline double aggregate_popularity(const TrainedPredictor& pred,
                                   const std::vector<double>& design_embedding, double rank,
                                   const std::vector<ConsumerProfile>& consumers) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& c : consumers) {
    if (c.source != Source::internal) continue;
    acc += predict_choice_prob(pred, c.face_embedding, design_embedding, rank);
    ++n;
  }
  if (n == 0) throw DataError("aggregate_popularity: no internal consumers supplied");
  return acc / double(n);
}

inline PredictorMetrics evaluate_predictor(const TrainedPredictor& pred,
                                           const std::vector<FeatureRow>& test_rows) {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (const auto& row : test_rows) {
    std::vector<float> x(row.x.begin(), row.x.end());
    double p = pred.forest.predict_prob(x);
    int pred_y = p >= 0.5 ? 1 : 0;  // ties classify positive
    if (row.y == 1)
      (pred_y == 1 ? tp : fn)++;
    else
      (pred_y == 1 ? fp : tn)++;
  }
  if (tp + fn == 0 || fp + tn == 0)
    throw DataError("evaluate_predictor: test set must contain both classes");
  PredictorMetrics m;
  m.accuracy = double(tp + tn) / double(tp + tn + fp + fn);
  m.fnr = double(fn) / double(fn + tp);
  m.fpr = double(fp) / double(fp + tn);
  m.balanced_accuracy = 1.0 - (m.fnr + m.fpr) / 2.0;
  return m;
}

// ---- model artifact ----------------------------------------------------------

inline void save_predictor(const TrainedPredictor& pred, const std::string& model_path,
                           const std::string& manifest_path) {
  pred.forest.save(model_path);
  std::ofstream out(manifest_path);
  if (!out) throw Error("save_predictor: cannot write " + manifest_path);
  out << "n_trees=" << pred.config.n_trees << '\n'
      << "class_weighting="
      << (pred.config.class_weighting == ClassWeighting::balanced ? "balanced" : "none") << '\n'
      << "seed=" << pred.config.seed << '\n'
      << "upsample_target=" << pred.config.upsample_target << '\n'
      << "feature_dim=" << pred.feature_dim() << '\n'
      << "e_f=" << pred.e_f << '\n'
      << "e_d=" << pred.e_d << '\n'
      << "provenance=" << to_string(pred.provenance) << '\n';
  if (!out) throw Error("save_predictor: write failure on " + manifest_path);
}

inline TrainedPredictor load_predictor(const std::string& model_path,
                                       const std::string& manifest_path) {
  TrainedPredictor pred;
  pred.forest = RandomForest::load(model_path);
  std::ifstream in(manifest_path);
  if (!in) throw DataError("load_predictor: cannot open " + manifest_path);
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "n_trees") pred.config.n_trees = int(std::stol(v));
    else if (k == "class_weighting")
      pred.config.class_weighting = v == "balanced" ? ClassWeighting::balanced : ClassWeighting::none;
    else if (k == "seed") pred.config.seed = std::stoull(v);
    else if (k == "upsample_target") pred.config.upsample_target = int(std::stol(v));
    else if (k == "e_f") pred.e_f = int(std::stol(v));
    else if (k == "e_d") pred.e_d = int(std::stol(v));
    else if (k == "provenance") pred.provenance = provenance_from_string(v);
  }
  return pred;
}

}  // namespace prefgen
