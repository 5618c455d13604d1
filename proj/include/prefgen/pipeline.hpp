#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prefgen/common.hpp"
#include "prefgen/config.hpp"
#include "prefgen/embed.hpp"
#include "prefgen/evaluate.hpp"
#include "prefgen/gan.hpp"
#include "prefgen/hashing.hpp"
#include "prefgen/ingest.hpp"
#include "prefgen/io.hpp"
#include "prefgen/labeling.hpp"
#include "prefgen/predictor.hpp"
#include "prefgen/synth.hpp"
#include "prefgen/vicinal.hpp"

namespace prefgen {

// ---- modes and stage graph ---------------------------------------------------

enum class PipelineMode { baseline, enhanced, advanced };

inline const char* to_string(PipelineMode m) {
  switch (m) {
    case PipelineMode::baseline: return "baseline";
    case PipelineMode::enhanced: return "enhanced";
    case PipelineMode::advanced: return "advanced";
  }
  throw Error("bad pipeline mode enum");
}

// canonical names plus the model-family aliases
inline PipelineMode pipeline_mode_from_string(const std::string& s) {
  if (s == "baseline" || s == "dcgan") return PipelineMode::baseline;
  if (s == "enhanced" || s == "ccgan-internal") return PipelineMode::enhanced;
  if (s == "advanced" || s == "ccgan-external") return PipelineMode::advanced;
  throw ConfigError("config: unknown mode '" + s +
                    "' (expected baseline|enhanced|advanced or dcgan|ccgan-internal|ccgan-external)");
}

inline const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names{"synth",     "ingest",   "embed",
                                              "train-predictor", "label", "train-gan",
                                              "generate",  "evaluate", "report"};
  return names;
}

inline bool is_pipeline_stage(const std::string& name) {
  const auto& names = pipeline_stage_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

// The unconditional mode has no popularity model, so the predictor and label
// stages drop out of its graph.
inline std::vector<std::string> stages_for_mode(PipelineMode mode) {
  std::vector<std::string> out;
  for (const auto& name : pipeline_stage_names()) {
    if (mode == PipelineMode::baseline && (name == "train-predictor" || name == "label"))
      continue;
    out.push_back(name);
  }
  return out;
}

inline std::vector<std::string> stage_dependencies(const std::string& stage, PipelineMode mode) {
  if (stage == "synth") return {};
  if (stage == "ingest") return {"synth"};
  if (stage == "embed") return {"ingest"};
  if (stage == "train-predictor") return {"ingest", "embed"};
  if (stage == "label") return {"train-predictor", "embed", "ingest"};
  if (stage == "train-gan")
    return mode == PipelineMode::baseline ? std::vector<std::string>{"ingest"}
                                          : std::vector<std::string>{"label", "ingest"};
  if (stage == "generate") return {"train-gan"};
  if (stage == "evaluate")
    return mode == PipelineMode::baseline
               ? std::vector<std::string>{"generate", "embed", "ingest", "synth"}
               : std::vector<std::string>{"generate", "embed", "ingest", "synth",
                                          "train-predictor"};
  if (stage == "report") return {"evaluate"};
  throw ConfigError("pipeline: unknown stage '" + stage + "'");
}

// ---- config schema -----------------------------------------------------------

inline const std::map<std::string, std::set<std::string>>& pipeline_config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"run", {"mode", "master_seed"}},
      {"synth",
       {"n_consumers", "n_templates", "n_themes", "latent_dim", "image_size", "alpha", "beta",
        "gamma", "n_external", "external_style_scale"}},
      {"ingest", {}},
      {"embed", {"face_dim", "design_dim"}},
      {"train-predictor", {"n_trees", "test_fraction", "upsample_target"}},
      {"label",
       {"score_lo", "score_hi", "bin_width", "per_label_cap", "min_per_label_replication"}},
      {"train-gan",
       {"iterations", "batch_size", "latent_dim", "feature_map_base", "learning_rate",
        "d_steps_per_iter", "augment_policy", "vicinal_mode", "kappa_scale", "sigma", "kappa"}},
      {"generate", {"n_samples", "label"}},
      {"evaluate",
       {"bins", "classifier_epochs", "classifier_feature_maps", "classifier_learning_rate",
        "classifier_batch_size", "classifier_test_fraction", "n_extremes"}},
      {"report", {}},
  };
  return schema;
}

inline void validate_pipeline_config(const ConfigFile& cfg) {
  const auto& schema = pipeline_config_schema();
  for (const auto& [section, kv] : cfg.sections) {
    auto s = schema.find(section);
    if (s == schema.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : kv) {
      (void)value;
      if (!s->second.count(key))
        throw ConfigError("config: unknown key " + section + "." + key);
    }
  }
  pipeline_mode_from_string(cfg.require_string("run", "mode"));
  long seed = cfg.get_int("run", "master_seed", 1);
  if (seed < 0) throw ConfigError("config: run.master_seed must be >= 0");
}

// ---- run manifest --------------------------------------------------------------

struct StageRecord {
  std::string status;  // "complete"
  std::uint64_t seed = 0;
  std::string input_signature;
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  double duration_ms = 0.0;
};

struct RunManifest {
  std::string run_id;
  std::string mode;
  std::uint64_t master_seed = 0;
  ConfigFile config;
  std::map<std::string, StageRecord> stages;
  std::string content_signature;
};

// Timings are informational only: the signature covers what was produced and
// from what, never how long it took.
inline std::string compute_content_signature(const RunManifest& man) {
  std::ostringstream text;
  text << "run_id=" << man.run_id << "\nmode=" << man.mode
       << "\nmaster_seed=" << man.master_seed << '\n';
  for (const auto& name : pipeline_stage_names()) {
    auto it = man.stages.find(name);
    if (it == man.stages.end()) continue;
    const StageRecord& rec = it->second;
    text << "stage " << name << "\nstatus=" << rec.status << "\nseed=" << rec.seed
         << "\ninput=" << rec.input_signature << '\n';
    for (const auto& [path, hash] : rec.outputs) text << path << '=' << hash << '\n';
  }
  return sha256_hex(text.str());
}

inline nlohmann::json manifest_to_json(const RunManifest& man) {
  nlohmann::json j;
  j["run_id"] = man.run_id;
  j["mode"] = man.mode;
  j["master_seed"] = man.master_seed;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [section, kv] : man.config.sections) {
    nlohmann::json sec = nlohmann::json::object();
    for (const auto& [k, v] : kv) sec[k] = v;
    cfg[section] = std::move(sec);
  }
  j["config"] = std::move(cfg);
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& [name, rec] : man.stages) {
    nlohmann::json r;
    r["status"] = rec.status;
    r["seed"] = rec.seed;
    r["input_signature"] = rec.input_signature;
    r["outputs"] = rec.outputs;
    r["duration_ms"] = rec.duration_ms;
    stages[name] = std::move(r);
  }
  j["stages"] = std::move(stages);
  j["content_signature"] = man.content_signature;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest man;
  man.run_id = j.at("run_id").get<std::string>();
  man.mode = j.at("mode").get<std::string>();
  man.master_seed = j.at("master_seed").get<std::uint64_t>();
  for (const auto& [section, kv] : j.at("config").items())
    for (const auto& [k, v] : kv.items()) man.config.sections[section][k] = v.get<std::string>();
  for (const auto& [name, r] : j.at("stages").items()) {
    StageRecord rec;
    rec.status = r.at("status").get<std::string>();
    rec.seed = r.at("seed").get<std::uint64_t>();
    rec.input_signature = r.at("input_signature").get<std::string>();
    for (const auto& [path, hash] : r.at("outputs").items())
      rec.outputs[path] = hash.get<std::string>();
    rec.duration_ms = r.at("duration_ms").get<double>();
    man.stages[name] = std::move(rec);
  }
  man.content_signature = j.at("content_signature").get<std::string>();
  return man;
}

inline RunManifest read_run_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_run_manifest: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
    return manifest_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("read_run_manifest: malformed manifest " + path + ": " + e.what());
  }
}

inline std::string default_out_root() {
  const char* env = std::getenv("PREFGEN_OUT");
  return env && *env ? std::string(env) : std::string("out");
}

// ---- pipeline ------------------------------------------------------------------

class Pipeline {
 public:
  Pipeline(ConfigFile cfg, std::string out_dir,
           std::optional<std::uint64_t> seed_override = std::nullopt)
      : cfg_(std::move(cfg)), out_(std::move(out_dir)) {
    if (seed_override) cfg_.set("run", "master_seed", std::to_string(*seed_override));
    validate_pipeline_config(cfg_);
    mode_ = pipeline_mode_from_string(cfg_.require_string("run", "mode"));
    master_seed_ = std::uint64_t(cfg_.get_int("run", "master_seed", 1));
    // normalize the identity-bearing keys so aliases and defaults hash equal
    cfg_.set("run", "mode", to_string(mode_));
    cfg_.set("run", "master_seed", std::to_string(master_seed_));
    std::filesystem::create_directories(out_);
    load_or_init_manifest();
  }

  PipelineMode mode() const { return mode_; }
  std::uint64_t master_seed() const { return master_seed_; }
  const std::string& out_dir() const { return out_; }
  const RunManifest& manifest() const { return man_; }
  std::string manifest_path() const { return abs("manifest.json"); }

  // Executes one stage; returns false when the stage is already complete for
  // identical inputs (in which case nothing is touched, the manifest included).
  bool run_stage(const std::string& name) {
    if (!is_pipeline_stage(name)) throw ConfigError("pipeline: unknown stage '" + name + "'");
    const auto active = stages_for_mode(mode_);
    if (std::find(active.begin(), active.end(), name) == active.end())
      throw ConfigError("pipeline: stage '" + name + "' is not part of mode '" +
                        to_string(mode_) + "'");
    for (const auto& dep : stage_dependencies(name, mode_)) {
      auto it = man_.stages.find(dep);
      if (it == man_.stages.end() || it->second.status != "complete")
        throw DependencyError("stage '" + name + "' requires completed stage '" + dep +
                              "'; run '" + dep + "' first");
      for (const auto& [path, hash] : it->second.outputs) {
        (void)hash;
        if (!std::filesystem::exists(abs(path)))
          throw DependencyError("stage '" + name + "' requires output '" + path +
                                "' of stage '" + dep + "', which is missing; re-run '" + dep +
                                "'");
      }
    }

    const std::uint64_t seed = stage_seed(master_seed_, name);
    const std::string sig = stage_input_signature(name, seed);
    auto existing = man_.stages.find(name);
    if (existing != man_.stages.end() && existing->second.status == "complete" &&
        existing->second.input_signature == sig && outputs_intact(existing->second))
      return false;

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> outputs = execute_stage(name, seed);
    const auto t1 = std::chrono::steady_clock::now();

    StageRecord rec;
    rec.status = "complete";
    rec.seed = seed;
    rec.input_signature = sig;
    rec.duration_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    for (const auto& rel : outputs) rec.outputs[rel] = sha256_file(abs(rel));
    man_.stages[name] = std::move(rec);
    man_.content_signature = compute_content_signature(man_);
    save_manifest();
    return true;
  }

  // Stages in dependency order for the configured mode; failures carry the
  // stage name and leave every previously completed stage on disk.
  RunManifest run_all() {
    for (const auto& name : stages_for_mode(mode_)) {
      try {
        run_stage(name);
      } catch (const DependencyError&) {
        throw;
      } catch (const ConfigError& e) {
        throw ConfigError("stage " + name + ": " + e.what());
      } catch (const DataError& e) {
        throw DataError("stage " + name + ": " + e.what());
      } catch (const Error& e) {
        throw Error("stage " + name + ": " + e.what());
      } catch (const std::exception& e) {
        throw Error("stage " + name + ": " + std::string(e.what()));
      }
    }
    return man_;
  }

 private:
  ConfigFile cfg_;
  std::string out_;
  PipelineMode mode_ = PipelineMode::baseline;
  std::uint64_t master_seed_ = 1;
  RunManifest man_;

  std::string abs(const std::string& rel) const {
    return (std::filesystem::path(out_) / rel).string();
  }

  static void ensure_dir(const std::string& path) { std::filesystem::create_directories(path); }

  std::string compute_run_id() const {
    return sha256_hex(canonical_config_text(cfg_)).substr(0, 16);
  }

  void load_or_init_manifest() {
    const std::string run_id = compute_run_id();
    if (std::filesystem::exists(manifest_path())) {
      RunManifest loaded = read_run_manifest(manifest_path());
      // Keep prior records: per-stage input signatures decide what is stale.
      // Records for stages outside the current mode's graph are dropped.
      const auto active = stages_for_mode(mode_);
      for (auto& [name, rec] : loaded.stages)
        if (std::find(active.begin(), active.end(), name) != active.end())
          man_.stages[name] = std::move(rec);
    }
    man_.run_id = run_id;
    man_.mode = to_string(mode_);
    man_.master_seed = master_seed_;
    man_.config = cfg_;
    man_.content_signature = compute_content_signature(man_);
  }

  void save_manifest() const {
    const std::string path = manifest_path();
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw Error("pipeline: cannot write " + tmp);
      out << manifest_to_json(man_).dump(2) << '\n';
      if (!out) throw Error("pipeline: write failure on " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  // What a stage's result may depend on: its own config block, the run
  // identity, its seed, and the recorded hashes of everything upstream.
  std::string stage_input_signature(const std::string& name, std::uint64_t seed) const {
    std::ostringstream sig;
    sig << "stage=" << name << "\nmode=" << to_string(mode_)
        << "\nmaster_seed=" << master_seed_ << "\nseed=" << seed << '\n';
    auto sec = cfg_.sections.find(name);
    if (sec != cfg_.sections.end())
      for (const auto& [k, v] : sec->second) sig << name << '.' << k << '=' << v << '\n';
    for (const auto& dep : stage_dependencies(name, mode_)) {
      auto it = man_.stages.find(dep);
      if (it == man_.stages.end()) continue;
      sig << "dep " << dep << '\n';
      for (const auto& [path, hash] : it->second.outputs) sig << path << '=' << hash << '\n';
    }
    return sha256_hex(sig.str());
  }

  bool outputs_intact(const StageRecord& rec) const {
    for (const auto& [path, hash] : rec.outputs) {
      if (!std::filesystem::exists(abs(path))) return false;
      if (sha256_file(abs(path)) != hash) return false;
    }
    return true;
  }

  std::vector<std::string> execute_stage(const std::string& name, std::uint64_t seed) {
    if (name == "synth") return run_synth(seed);
    if (name == "ingest") return run_ingest(seed);
    if (name == "embed") return run_embed(seed);
    if (name == "train-predictor") return run_train_predictor(seed);
    if (name == "label") return run_label(seed);
    if (name == "train-gan") return run_train_gan(seed);
    if (name == "generate") return run_generate(seed);
    if (name == "evaluate") return run_evaluate(seed);
    if (name == "report") return run_report(seed);
    throw ConfigError("pipeline: unknown stage '" + name + "'");
  }

  // ---- shared lookups ----------------------------------------------------------

  // Embedder seeds derive straight from the master seed so any stage can
  // reconstruct the exact projections the embed stage used.
  std::uint64_t face_projection_seed() const { return stage_seed(master_seed_, "face-projection"); }
  std::uint64_t design_projection_seed() const {
    return stage_seed(master_seed_, "design-projection");
  }

  // Display ranks for every template: internal ones carry their true rank,
  // external ones draw from the empirical internal distribution. Both the
  // predictor and label stages need the same assignment, so it derives from
  // the master seed alone (ids sorted for a stable pairing).
  std::map<std::string, int> template_rank_map(const std::vector<DesignTemplate>& templates) const {
    std::map<std::string, int> ranks;
    std::vector<int> internal_ranks;
    std::vector<std::string> external_ids;
    for (const auto& t : templates) {
      if (t.source == Source::internal) {
        if (!t.display_rank)
          throw DataError("pipeline: internal template " + t.template_id + " has no display rank");
        ranks[t.template_id] = *t.display_rank;
        internal_ranks.push_back(*t.display_rank);
      } else {
        external_ids.push_back(t.template_id);
      }
    }
    std::sort(external_ids.begin(), external_ids.end());
    if (!external_ids.empty()) {
      auto sim = simulate_external_rank(internal_ranks, external_ids.size(),
                                        stage_seed(master_seed_, "external-ranks"));
      for (std::size_t i = 0; i < external_ids.size(); ++i) ranks[external_ids[i]] = sim[i];
    }
    return ranks;
  }

  std::vector<std::pair<std::string, Source>> read_consumer_index() const {
    auto rows = csv::read_rows(abs("ingest/consumers.csv"));
    if (rows.empty() || csv::join(rows[0]) != "consumer_id,source")
      throw DataError("pipeline: ingest/consumers.csv missing required header");
    std::vector<std::pair<std::string, Source>> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 2)
        throw DataError("pipeline: bad row in ingest/consumers.csv");
      out.emplace_back(rows[i][0], source_from_string(rows[i][1]));
    }
    return out;
  }

  std::vector<ConsumerProfile> load_consumer_profiles(int face_dim) const {
    auto index = read_consumer_index();
    auto rows = read_embeddings(abs("embed/faces.csv"), std::size_t(face_dim));
    std::map<std::string, std::vector<double>> by_id(rows.begin(), rows.end());
    std::vector<ConsumerProfile> out;
    out.reserve(index.size());
    for (const auto& [id, source] : index) {
      auto it = by_id.find(id);
      if (it == by_id.end())
        throw DataError("pipeline: no face embedding for consumer " + id);
      out.push_back(ConsumerProfile{id, it->second, source});
    }
    return out;
  }

  int face_dim() const { return int(cfg_.get_int("embed", "face_dim", 16)); }
  int design_dim() const { return int(cfg_.get_int("embed", "design_dim", 32)); }

  // ---- stage: synth --------------------------------------------------------------

  std::vector<std::string> run_synth(std::uint64_t seed) {
    WorldParams wp;
    wp.latent_dim = int(cfg_.get_int("synth", "latent_dim", 8));
    wp.n_consumers = int(cfg_.get_int("synth", "n_consumers", 250));
    wp.n_templates = int(cfg_.get_int("synth", "n_templates", 60));
    wp.n_themes = int(cfg_.get_int("synth", "n_themes", 6));
    wp.image_size = int(cfg_.get_int("synth", "image_size", 32));
    wp.alpha = cfg_.get_double("synth", "alpha", -2.0);
    wp.beta = cfg_.get_double("synth", "beta", 1.6);
    wp.gamma = cfg_.get_double("synth", "gamma", 0.05);
    wp.seed = stage_seed(seed, "world");
    const int n_external = int(cfg_.get_int("synth", "n_external", 12));
    const double ext_scale = cfg_.get_double("synth", "external_style_scale", 2.0);
    if (n_external < 0) throw ConfigError("synth: n_external must be >= 0");

    SyntheticWorld world = generate_world(wp);
    std::vector<std::string> out;

    write_world(abs("synth/world"), world);
    for (const char* f : {"params.csv", "consumers.csv", "themes.csv", "templates.csv"})
      out.push_back(std::string("synth/world/") + f);

    ensure_dir(abs("synth/faces"));
    for (int i = 0; i < wp.n_consumers; ++i) {
      const std::string& id = world.consumer_ids[std::size_t(i)];
      Image img = render_consumer_image(world.u[std::size_t(i)], wp.image_size,
                                        stage_seed(seed, "portrait-" + id));
      std::string rel = "synth/faces/" + id + ".png";
      write_png(abs(rel), img);
      out.push_back(rel);
    }

    std::vector<DesignTemplate> templates;
    templates.reserve(std::size_t(wp.n_templates));
    for (int j = 0; j < wp.n_templates; ++j) {
      DesignTemplate t;
      t.template_id = world.template_ids[std::size_t(j)];
      t.theme_id = world.theme_ids[std::size_t(world.theme_of[std::size_t(j)])];
      t.image = render_template_image(world, j);
      t.display_rank = world.display_rank[std::size_t(j)];
      t.is_cover = world.cover_of_theme[std::size_t(world.theme_of[std::size_t(j)])] == j;
      t.source = Source::internal;
      templates.push_back(std::move(t));
    }
    write_templates(abs("synth/templates"), templates);
    out.push_back("synth/templates/manifest.csv");
    for (const auto& t : templates) out.push_back("synth/templates/" + t.template_id + ".png");

    auto events = sample_order_events(world, stage_seed(seed, "orders"));
    write_order_events(abs("synth/orders.txt"), events);
    out.push_back("synth/orders.txt");

    ensure_dir(abs("synth/external"));
    auto externals = make_external_photos(world, n_external, ext_scale,
                                          stage_seed(seed, "external"));
    {
      csv::Writer idx(abs("synth/external/index.csv"));
      idx.row({"photo_id"});
      for (const auto& ext : externals) {
        const std::string& pid = ext.photo.photo_id;
        write_png(abs("synth/external/" + pid + ".png"), ext.photo.image);
        write_mask(abs("synth/external/" + pid + "_mask.png"), ext.photo.person_mask);
        idx.row({pid});
        out.push_back("synth/external/" + pid + ".png");
        out.push_back("synth/external/" + pid + "_mask.png");
      }
      idx.close();
    }
    out.push_back("synth/external/index.csv");
    return out;
  }

  // ---- stage: ingest --------------------------------------------------------------

  std::vector<std::string> run_ingest(std::uint64_t seed) {
    (void)seed;  // pure transformation of the raw exports
    auto events = read_order_events(abs("synth/orders.txt"));
    auto records = build_choice_records(events);
    auto templates = read_templates(abs("synth/templates"));

    std::vector<std::string> out;
    ensure_dir(abs("ingest/faces"));

    std::vector<std::pair<std::string, Source>> consumers;
    for (const auto& ev : events) {
      consumers.emplace_back(ev.consumer_id, Source::internal);
      std::string rel = "ingest/faces/" + ev.consumer_id + ".png";
      std::filesystem::copy_file(abs("synth/faces/" + ev.consumer_id + ".png"), abs(rel),
                                 std::filesystem::copy_options::overwrite_existing);
      out.push_back(rel);
    }

    // External photos split into an inpainted design plus a face crop; each
    // contributes one positive-only record under a fresh consumer id.
    auto idx = csv::read_rows(abs("synth/external/index.csv"));
    if (idx.empty() || csv::join(idx[0]) != "photo_id")
      throw DataError("pipeline: synth/external/index.csv missing required header");
    for (std::size_t i = 1; i < idx.size(); ++i) {
      if (idx[i].size() != 1) throw DataError("pipeline: bad row in synth/external/index.csv");
      const std::string pid = idx[i][0];
      ExternalPhoto photo;
      photo.photo_id = pid;
      photo.image = read_png(abs("synth/external/" + pid + ".png"));
      photo.person_mask = read_mask(abs("synth/external/" + pid + "_mask.png"));
      auto [tmpl, face] = split_external_photo(photo);
      const std::string cid = "ext_" + pid;
      std::string rel = "ingest/faces/" + cid + ".png";
      write_png(abs(rel), face);
      out.push_back(rel);
      consumers.emplace_back(cid, Source::external);
      records.push_back(make_choice_record(cid, tmpl.template_id, Exposure::external_positive));
      templates.push_back(std::move(tmpl));
    }

    write_templates(abs("ingest/templates"), templates);
    out.push_back("ingest/templates/manifest.csv");
    for (const auto& t : templates) out.push_back("ingest/templates/" + t.template_id + ".png");

    write_choice_log(abs("ingest/choices.csv"), records);
    out.push_back("ingest/choices.csv");

    {
      csv::Writer w(abs("ingest/consumers.csv"));
      w.row({"consumer_id", "source"});
      for (const auto& [id, source] : consumers) w.row({id, to_string(source)});
      w.close();
    }
    out.push_back("ingest/consumers.csv");
    return out;
  }

  // ---- stage: embed --------------------------------------------------------------

  std::vector<std::string> run_embed(std::uint64_t seed) {
    (void)seed;  // the projections key off the master seed, see above
    ensure_dir(abs("embed"));
    auto consumers = read_consumer_index();
    Embedder face_embedder = make_face_embedder(face_dim(), face_projection_seed());
    std::vector<std::pair<std::string, std::vector<double>>> face_rows;
    face_rows.reserve(consumers.size());
    for (const auto& [id, source] : consumers) {
      (void)source;
      Image img = read_png(abs("ingest/faces/" + id + ".png"));
      face_rows.emplace_back(id, embed_face(face_embedder, img));
    }
    write_embeddings(abs("embed/faces.csv"), face_rows);

    auto templates = read_templates(abs("ingest/templates"));
    Embedder design_embedder = make_design_embedder(design_dim(), design_projection_seed());
    std::vector<std::pair<std::string, std::vector<double>>> design_rows;
    design_rows.reserve(templates.size());
    for (const auto& t : templates)
      design_rows.emplace_back(t.template_id, embed_design(design_embedder, t.image));
    write_embeddings(abs("embed/designs.csv"), design_rows);

    return {"embed/faces.csv", "embed/designs.csv"};
  }

  // ---- stage: train-predictor ------------------------------------------------------

  std::vector<std::string> run_train_predictor(std::uint64_t seed) {
    auto records = read_choice_log(abs("ingest/choices.csv"));
    const Provenance provenance = mode_ == PipelineMode::advanced
                                      ? Provenance::internal_and_external
                                      : Provenance::internal_only;
    if (provenance == Provenance::internal_only) {
      std::erase_if(records, [](const ChoiceRecord& r) {
        return r.exposure == Exposure::external_positive;
      });
    }

    auto face_rows = read_embeddings(abs("embed/faces.csv"), std::size_t(face_dim()));
    auto design_rows = read_embeddings(abs("embed/designs.csv"), std::size_t(design_dim()));
    std::map<std::string, std::vector<double>> faces(face_rows.begin(), face_rows.end());
    std::map<std::string, std::vector<double>> designs(design_rows.begin(), design_rows.end());
    auto templates = read_templates(abs("ingest/templates"));
    auto ranks = template_rank_map(templates);

    auto rows = build_feature_rows(records, faces, designs, ranks);

    // stratified split keeps both outcomes in both halves
    const double test_fraction = cfg_.get_double("train-predictor", "test_fraction", 0.3);
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
      throw ConfigError("train-predictor: test_fraction must lie in (0, 1)");
    Rng split_rng(stage_seed(seed, "split"));
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < rows.size(); ++i) (rows[i].y ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
      throw DataError("train-predictor: need both outcomes in the choice log");
    std::vector<FeatureRow> train, test;
    for (auto* cls : {&pos, &neg}) {
      split_rng.shuffle(cls->begin(), cls->end());
      std::size_t n_test = std::size_t(std::llround(test_fraction * double(cls->size())));
      n_test = std::min(n_test, cls->size() - 1);  // keep at least one row for training
      for (std::size_t i = 0; i < cls->size(); ++i)
        (i < n_test ? test : train).push_back(rows[(*cls)[i]]);
    }
    if (test.empty()) throw DataError("train-predictor: test split is empty");

    PredictorConfig pc;
    pc.n_trees = int(cfg_.get_int("train-predictor", "n_trees", 60));
    pc.class_weighting = ClassWeighting::balanced;
    pc.seed = stage_seed(seed, "forest");
    pc.upsample_target = int(cfg_.get_int("train-predictor", "upsample_target", 0));
    if (pc.upsample_target > 0)
      train = upsample_minority(train, std::size_t(pc.upsample_target),
                                stage_seed(seed, "upsample"));

    TrainedPredictor pred = train_predictor(train, pc, provenance, face_dim(), design_dim());
    PredictorMetrics metrics = evaluate_predictor(pred, test);

    ensure_dir(abs("predictor"));
    save_predictor(pred, abs("predictor/model.bin"), abs("predictor/model.txt"));
    {
      std::ofstream mf(abs("predictor/metrics.txt"));
      if (!mf) throw Error("train-predictor: cannot write metrics.txt");
      mf << "accuracy=" << csv::fmt(metrics.accuracy) << '\n'
         << "balanced_accuracy=" << csv::fmt(metrics.balanced_accuracy) << '\n'
         << "fnr=" << csv::fmt(metrics.fnr) << '\n'
         << "fpr=" << csv::fmt(metrics.fpr) << '\n'
         << "n_train=" << train.size() << '\n'
         << "n_test=" << test.size() << '\n'
         << "provenance=" << to_string(provenance) << '\n';
    }
    return {"predictor/model.bin", "predictor/model.txt", "predictor/metrics.txt"};
  }

  // ---- stage: label --------------------------------------------------------------

  std::vector<std::string> run_label(std::uint64_t seed) {
    TrainedPredictor pred = load_predictor(abs("predictor/model.bin"), abs("predictor/model.txt"));
    auto design_rows = read_embeddings(abs("embed/designs.csv"), std::size_t(design_dim()));
    std::map<std::string, std::vector<double>> designs(design_rows.begin(), design_rows.end());
    auto templates = read_templates(abs("ingest/templates"));
    auto ranks = template_rank_map(templates);
    auto consumers = load_consumer_profiles(face_dim());

    PopularityScores scores;
    scores.reserve(templates.size());
    for (const auto& t : templates) {
      auto d = designs.find(t.template_id);
      if (d == designs.end())
        throw DataError("label: no design embedding for template " + t.template_id);
      scores.emplace_back(t.template_id,
                          aggregate_popularity(pred, d->second, double(ranks.at(t.template_id)),
                                               consumers));
    }

    BinningConfig bc;
    bc.bin_width = cfg_.get_double("label", "bin_width", 0.025);
    bc.per_label_cap = int(cfg_.get_int("label", "per_label_cap", 200));
    bc.min_per_label_replication = int(cfg_.get_int("label", "min_per_label_replication", 0));
    bc.seed = stage_seed(seed, "binning");
    if (!(bc.bin_width > 0.0)) throw ConfigError("label: bin_width must be positive");

    // Explicit score bounds pin the published range; "auto" snaps the observed
    // score range outward onto the bin grid, keeping the floor strictly
    // positive so every label normalizes into (0, 1].
    auto explicit_lo = cfg_.get_double_or_auto("label", "score_lo");
    auto explicit_hi = cfg_.get_double_or_auto("label", "score_hi");
    double min_score = scores.front().second, max_score = min_score;
    for (const auto& [id, s] : scores) {
      (void)id;
      min_score = std::min(min_score, s);
      max_score = std::max(max_score, s);
    }
    const double w = bc.bin_width;
    if (explicit_lo) {
      bc.lo = *explicit_lo;
    } else {
      long k_lo = std::max(1L, long(std::floor(min_score / w + 1e-9)));
      bc.lo = double(k_lo) * w;
    }
    if (explicit_hi) {
      bc.hi = *explicit_hi;
    } else {
      // anchored on lo so the width always divides the range
      long m = long(std::ceil((max_score - bc.lo) / w - 1e-9));
      m = std::max(m, 1L);
      m = std::min(m, long(std::floor((1.0 - bc.lo) / w + 1e-9)));
      bc.hi = bc.lo + double(m) * w;
    }
    if (!(bc.lo > 0.0 && bc.lo < bc.hi && bc.hi <= 1.0))
      throw ConfigError("label: resolved score range [" + csv::fmt(bc.lo) + ", " +
                        csv::fmt(bc.hi) + "] is unusable; set score_lo/score_hi explicitly");

    LabelPipelineResult res = label_pipeline(scores, bc);
    if (res.set.entries.empty())
      throw DataError("label: no popularity scores fall inside [" + csv::fmt(bc.lo) + ", " +
                      csv::fmt(bc.hi) + "]");
    for (const auto& e : res.set.entries)
      if (!(e.normalized_label > 0.0))
        throw DataError("label: normalized label for " + e.template_id +
                        " is not positive; raise score_lo");

    ensure_dir(abs("label"));
    write_label_set(abs("label/labels.csv"), res.set);
    write_label_summary(abs("label/summary.txt"), res);
    return {"label/labels.csv", "label/summary.txt"};
  }

  // ---- stage: train-gan ------------------------------------------------------------

  std::vector<std::string> run_train_gan(std::uint64_t seed) {
    auto templates = read_templates(abs("ingest/templates"));
    if (templates.empty()) throw DataError("train-gan: no templates to train on");
    std::map<std::string, const Image*> image_of;
    for (const auto& t : templates) image_of[t.template_id] = &t.image;

    GanConfig gc;
    gc.image_size = templates.front().image.h;
    gc.image_channels = templates.front().image.c;
    gc.iterations = cfg_.get_int("train-gan", "iterations", 600);
    gc.batch_size = int(cfg_.get_int("train-gan", "batch_size", 32));
    gc.latent_dim = int(cfg_.get_int("train-gan", "latent_dim", 16));
    gc.feature_map_base = int(cfg_.get_int("train-gan", "feature_map_base", 16));
    gc.learning_rate = cfg_.get_double("train-gan", "learning_rate", 2e-4);
    gc.d_steps_per_iter = int(cfg_.get_int("train-gan", "d_steps_per_iter", 1));
    gc.augment_policy = cfg_.get_string("train-gan", "augment_policy", "color,translation,cutout");
    gc.seed = seed;

    TrainedGenerator gen;
    if (mode_ == PipelineMode::baseline) {
      std::vector<Image> images;
      images.reserve(templates.size());
      for (const auto& t : templates) images.push_back(t.image);
      gen = train_dcgan(images, gc);
    } else {
      PopularityLabelSet labels = read_label_set(abs("label/labels.csv"));
      if (labels.entries.empty()) throw DataError("train-gan: label set is empty");
      std::vector<Image> images;
      std::vector<double> ys;
      images.reserve(labels.entries.size());
      ys.reserve(labels.entries.size());
      for (const auto& e : labels.entries) {
        auto it = image_of.find(e.template_id);
        if (it == image_of.end())
          throw DataError("train-gan: label set names unknown template " + e.template_id);
        images.push_back(*it->second);
        ys.push_back(e.normalized_label);
      }

      const double kappa_scale = cfg_.get_double("train-gan", "kappa_scale", 5.0);
      auto sigma_override = cfg_.get_double_or_auto("train-gan", "sigma");
      auto kappa_override = cfg_.get_double_or_auto("train-gan", "kappa");
      RuleOfThumb rot{0.0, 0.0};
      if (!sigma_override || !kappa_override)
        rot = rule_of_thumb_hyperparams(ys, std::int64_t(ys.size()), kappa_scale);
      const double sigma = sigma_override ? *sigma_override : rot.sigma;
      const double kappa = kappa_override ? *kappa_override : rot.kappa;

      const std::string vicinal_mode = cfg_.get_string("train-gan", "vicinal_mode", "hard");
      VicinalConfig vc;
      if (vicinal_mode == "hard")
        vc = VicinalConfig::hard(sigma, kappa);
      else if (vicinal_mode == "soft")
        vc = VicinalConfig::soft_from_kappa(sigma, kappa);
      else
        throw ConfigError("train-gan: vicinal_mode must be hard or soft, got '" + vicinal_mode +
                          "'");
      vc.seed = stage_seed(seed, "vicinal");
      gen = train_ccgan(images, ys, gc, vc);
    }

    ensure_dir(abs("gan"));
    save_generator(gen, abs("gan/generator.bin"), abs("gan/generator.txt"));
    {
      csv::Writer w(abs("gan/loss_log.csv"));
      w.row({"iteration", "d_loss", "g_loss"});
      for (const auto& e : gen.loss_log)
        w.row({std::to_string(e.iteration), csv::fmt(e.d_loss), csv::fmt(e.g_loss)});
      w.close();
    }
    return {"gan/generator.bin", "gan/generator.txt", "gan/loss_log.csv"};
  }

  // ---- stage: generate --------------------------------------------------------------

  std::vector<std::string> run_generate(std::uint64_t seed) {
    TrainedGenerator gen = load_generator(abs("gan/generator.bin"), abs("gan/generator.txt"));
    const int n_samples = int(cfg_.get_int("generate", "n_samples", 200));
    if (n_samples < 1) throw ConfigError("generate: n_samples must be >= 1");

    std::optional<double> label;
    std::string label_text = "none";
    if (gen.conditional) {
      const std::string key = cfg_.get_string("generate", "label", "top");
      if (key == "top") label = gen.label_hi;
      else if (key == "bottom") label = gen.label_lo;
      else label = cfg_.get_double("generate", "label", 0.0);
      label_text = csv::fmt(*label);
    }

    auto images = sample(gen, n_samples, label, stage_seed(seed, "samples"));

    std::vector<std::string> out;
    ensure_dir(abs("generate/samples"));
    csv::Writer w(abs("generate/mapping.csv"));
    w.row({"file", "requested_label"});
    char name[32];
    for (int i = 0; i < n_samples; ++i) {
      std::snprintf(name, sizeof(name), "sample_%04d.png", i);
      std::string rel = std::string("generate/samples/") + name;
      write_png(abs(rel), images[std::size_t(i)]);
      w.row({name, label_text});
      out.push_back(rel);
    }
    w.close();
    out.push_back("generate/mapping.csv");
    return out;
  }

  // ---- stage: evaluate --------------------------------------------------------------

  std::vector<std::string> run_evaluate(std::uint64_t seed) {
    std::vector<std::string> out;

    // generated samples, in mapping order
    auto mapping = csv::read_rows(abs("generate/mapping.csv"));
    if (mapping.empty() || csv::join(mapping[0]) != "file,requested_label")
      throw DataError("evaluate: generate/mapping.csv missing required header");
    std::vector<Image> generated;
    std::string requested_label = "none";
    for (std::size_t i = 1; i < mapping.size(); ++i) {
      if (mapping[i].size() != 2) throw DataError("evaluate: bad row in generate/mapping.csv");
      generated.push_back(read_png(abs("generate/samples/" + mapping[i][0])));
      requested_label = mapping[i][1];
    }
    if (generated.empty()) throw DataError("evaluate: no generated samples to score");

    auto templates = read_templates(abs("ingest/templates"));
    std::vector<const DesignTemplate*> internal;
    for (const auto& t : templates)
      if (t.source == Source::internal) internal.push_back(&t);
    if (internal.empty()) throw DataError("evaluate: no internal templates");

    auto design_rows = read_embeddings(abs("embed/designs.csv"), std::size_t(design_dim()));
    std::map<std::string, std::vector<double>> designs(design_rows.begin(), design_rows.end());
    Embedder design_embedder = make_design_embedder(design_dim(), design_projection_seed());
    std::vector<std::vector<double>> generated_emb;
    generated_emb.reserve(generated.size());
    for (const auto& img : generated) generated_emb.push_back(embed_design(design_embedder, img));

    ensure_dir(abs("evaluate"));

    // distance metric against the most/least adopted internal templates
    const int n_extremes = int(cfg_.get_int("evaluate", "n_extremes", 3));
    std::map<std::string, long> adoption;
    for (const auto* t : internal) adoption[t->template_id] = 0;
    for (const auto& rec : read_choice_log(abs("ingest/choices.csv")))
      if (rec.exposure != Exposure::external_positive && rec.outcome == 1)
        adoption[rec.template_id] += 1;
    auto extremes = select_preference_extremes(adoption, n_extremes);
    auto pick = [&](const std::vector<std::string>& ids) {
      std::vector<std::vector<double>> vs;
      for (const auto& id : ids) {
        auto it = designs.find(id);
        if (it == designs.end()) throw DataError("evaluate: no design embedding for " + id);
        vs.push_back(it->second);
      }
      return vs;
    };
    DistanceReport dist = distance_metric(generated_emb, pick(extremes.first),
                                          pick(extremes.second));
    {
      std::ofstream f(abs("evaluate/distances.tsv"));
      if (!f) throw Error("evaluate: cannot write distances.tsv");
      f << format_distance_table({"generated"}, {dist});
    }
    out.push_back("evaluate/distances.tsv");

    // face-validity classifier: catalog designs vs consumer portraits, then
    // the hit rate of the generated set against it
    auto consumers = read_consumer_index();
    std::vector<Image> portraits;
    for (const auto& [id, source] : consumers)
      if (source == Source::internal)
        portraits.push_back(read_png(abs("ingest/faces/" + id + ".png")));
    if (portraits.empty()) throw DataError("evaluate: no internal consumer portraits");
    std::vector<Image> catalog;
    catalog.reserve(templates.size());
    for (const auto& t : templates) catalog.push_back(t.image);

    const double clf_test_fraction =
        cfg_.get_double("evaluate", "classifier_test_fraction", 0.3);
    if (!(clf_test_fraction > 0.0 && clf_test_fraction < 1.0))
      throw ConfigError("evaluate: classifier_test_fraction must lie in (0, 1)");
    Rng clf_rng(stage_seed(seed, "classifier-split"));
    auto split = [&](std::vector<Image>& all) {
      clf_rng.shuffle(all.begin(), all.end());
      std::size_t n_test = std::size_t(std::llround(clf_test_fraction * double(all.size())));
      n_test = std::min(n_test, all.size() - 1);
      std::vector<Image> test(all.end() - std::ptrdiff_t(n_test), all.end());
      all.resize(all.size() - n_test);
      return test;
    };
    std::vector<Image> catalog_test = split(catalog);
    std::vector<Image> portraits_test = split(portraits);

    ClassifierConfig cc;
    cc.image_size = catalog.front().h;
    cc.image_channels = catalog.front().c;
    cc.feature_map_base = int(cfg_.get_int("evaluate", "classifier_feature_maps", 16));
    cc.epochs = int(cfg_.get_int("evaluate", "classifier_epochs", 12));
    cc.batch_size = int(cfg_.get_int("evaluate", "classifier_batch_size", 16));
    cc.learning_rate = cfg_.get_double("evaluate", "classifier_learning_rate", 1e-3);
    cc.seed = stage_seed(seed, "classifier");
    ThemeClassifier clf = train_theme_classifier(catalog, portraits, cc);
    PredictorMetrics clf_metrics = evaluate_theme_classifier(clf, catalog_test, portraits_test);
    const double hr = hit_rate(clf, generated);
    {
      std::ofstream f(abs("evaluate/classifier.tsv"));
      if (!f) throw Error("evaluate: cannot write classifier.tsv");
      f << format_classifier_table(clf_metrics, hr);
    }
    out.push_back("evaluate/classifier.tsv");

    // oracle scoring through the synthetic world's closed-form choice model
    SyntheticWorld world = read_world(abs("synth/world"));
    std::vector<int> sorted_ranks = world.display_rank;
    std::sort(sorted_ranks.begin(), sorted_ranks.end());
    const int ref_rank = sorted_ranks[sorted_ranks.size() / 2];
    double oracle_generated = 0.0;
    for (const auto& img : generated)
      oracle_generated += oracle_popularity_of_style(
          world, invert_render_style(img, world.params.latent_dim), ref_rank);
    oracle_generated /= double(generated.size());
    double oracle_internal = 0.0;
    for (const auto& style : world.s)
      oracle_internal += oracle_popularity_of_style(world, style, ref_rank);
    oracle_internal /= double(world.s.size());

    // histogram of the per-image distance scores
    const int bins = int(cfg_.get_int("evaluate", "bins", 10));
    emit_histograms({{"generated", dist.per_image}}, bins, abs("evaluate/hist_distances.tsv"),
                    abs("evaluate/hist_distances.png"));
    out.push_back("evaluate/hist_distances.tsv");
    out.push_back("evaluate/hist_distances.png");

    std::optional<ChoiceProbReport> choice_report;
    if (mode_ != PipelineMode::baseline) {
      TrainedPredictor pred =
          load_predictor(abs("predictor/model.bin"), abs("predictor/model.txt"));
      auto profiles = load_consumer_profiles(face_dim());
      auto ranks = template_rank_map(templates);

      NamedEmbeddings internal_set{"internal", {}};
      std::vector<double> internal_ranks;
      std::vector<int> internal_ranks_i;
      for (const auto* t : internal) {
        internal_set.embeddings.push_back(designs.at(t->template_id));
        int r = ranks.at(t->template_id);
        internal_ranks.push_back(double(r));
        internal_ranks_i.push_back(r);
      }
      NamedEmbeddings generated_set{"generated", generated_emb};
      auto sim = simulate_external_rank(internal_ranks_i, generated_emb.size(),
                                        stage_seed(seed, "generated-ranks"));
      std::vector<double> generated_ranks(sim.begin(), sim.end());

      choice_report = compare_choice_probs(pred, {internal_set, generated_set}, profiles,
                                           {internal_ranks, generated_ranks}, 0);
      {
        std::ofstream f(abs("evaluate/choice_probs.tsv"));
        if (!f) throw Error("evaluate: cannot write choice_probs.tsv");
        f << format_choice_prob_table(*choice_report);
      }
      out.push_back("evaluate/choice_probs.tsv");

      emit_histograms({{"internal", choice_report->per_image[0]},
                       {"generated", choice_report->per_image[1]}},
                      bins, abs("evaluate/hist_choice_probs.tsv"),
                      abs("evaluate/hist_choice_probs.png"));
      out.push_back("evaluate/hist_choice_probs.tsv");
      out.push_back("evaluate/hist_choice_probs.png");
    }

    {
      std::ofstream f(abs("evaluate/summary.txt"));
      if (!f) throw Error("evaluate: cannot write summary.txt");
      f << "mode=" << to_string(mode_) << '\n'
        << "n_generated=" << generated.size() << '\n'
        << "requested_label=" << requested_label << '\n'
        << "oracle_ref_rank=" << ref_rank << '\n'
        << "oracle_popularity_generated_mean=" << csv::fmt(oracle_generated) << '\n'
        << "oracle_popularity_internal_mean=" << csv::fmt(oracle_internal) << '\n'
        << "distance_mean=" << csv::fmt(dist.mean) << '\n'
        << "distance_median=" << csv::fmt(dist.median) << '\n'
        << "classifier_accuracy=" << csv::fmt(clf_metrics.accuracy) << '\n'
        << "classifier_balanced_accuracy=" << csv::fmt(clf_metrics.balanced_accuracy) << '\n'
        << "classifier_fnr=" << csv::fmt(clf_metrics.fnr) << '\n'
        << "classifier_fpr=" << csv::fmt(clf_metrics.fpr) << '\n'
        << "hit_rate=" << csv::fmt(hr) << '\n';
      if (choice_report) {
        f << "choice_prob_internal_mean=" << csv::fmt(choice_report->means[0]) << '\n'
          << "choice_prob_generated_mean=" << csv::fmt(choice_report->means[1]) << '\n'
          << "choice_prob_generated_delta=" << csv::fmt(choice_report->deltas[1]) << '\n';
      }
    }
    out.push_back("evaluate/summary.txt");
    return out;
  }

  // ---- stage: report --------------------------------------------------------------

  std::vector<std::string> run_report(std::uint64_t seed) {
    (void)seed;
    auto slurp = [&](const std::string& rel) {
      std::ifstream in(abs(rel));
      if (!in) throw DataError("report: cannot open " + rel);
      std::ostringstream buf;
      buf << in.rdbuf();
      return buf.str();
    };

    ensure_dir(abs("report"));
    std::ofstream f(abs("report/report.txt"));
    if (!f) throw Error("report: cannot write report.txt");
    f << "preference-guided design pipeline report\n"
      << "run_id=" << man_.run_id << '\n'
      << "mode=" << to_string(mode_) << '\n'
      << "master_seed=" << master_seed_ << "\n\n"
      << "== summary ==\n"
      << slurp("evaluate/summary.txt") << '\n'
      << "== distance metric (lower is better) ==\n"
      << slurp("evaluate/distances.tsv") << '\n'
      << "== theme classifier ==\n"
      << slurp("evaluate/classifier.tsv") << '\n';
    if (mode_ != PipelineMode::baseline) {
      f << "== choice probabilities vs internal catalog ==\n"
        << slurp("evaluate/choice_probs.tsv") << '\n'
        << "== choice probability histogram ==\n"
        << slurp("evaluate/hist_choice_probs.tsv") << '\n';
    }
    f << "== distance histogram ==\n"
      << slurp("evaluate/hist_distances.tsv") << '\n'
      << "plots: evaluate/hist_distances.png"
      << (mode_ != PipelineMode::baseline ? ", evaluate/hist_choice_probs.png" : "") << '\n';
    if (!f) throw Error("report: write failure on report.txt");
    f.close();
    return {"report/report.txt"};
  }
};

}  // namespace prefgen
