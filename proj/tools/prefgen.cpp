#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "prefgen/pipeline.hpp"

namespace {

int run(const std::string& stage, const std::string& config_path, const std::string& out_dir,
        std::optional<std::uint64_t> seed) {
  prefgen::ConfigFile cfg = prefgen::read_config(config_path);
  prefgen::Pipeline pipe(std::move(cfg), out_dir, seed);
  if (stage.empty()) {
    pipe.run_all();
    std::cout << "run " << pipe.manifest().run_id << " (" << prefgen::to_string(pipe.mode())
              << ") complete; manifest at " << pipe.manifest_path() << '\n';
  } else {
    bool executed = pipe.run_stage(stage);
    std::cout << "stage " << stage << (executed ? " complete" : " already up to date") << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"preference-guided photo-template design pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = prefgen::default_out_root();
  std::uint64_t seed_value = 0;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "generate the synthetic world and its raw exports"},
      {"ingest", "build the choice log, template catalog, and consumer roster"},
      {"embed", "compute face and design embeddings"},
      {"train-predictor", "fit the choice predictor on the feature rows"},
      {"label", "score every template and bin the popularity labels"},
      {"train-gan", "train the design generator for the configured mode"},
      {"generate", "sample design images from the trained generator"},
      {"evaluate", "score the generated designs and emit report tables"},
      {"report", "consolidate the evaluation outputs into one report"},
      {"run-all", "execute every stage in dependency order"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "pipeline config file")->required();
    sub->add_option("--out", out_dir, "output root (default: $PREFGEN_OUT or ./out)");
    sub->add_option("--seed", seed_value, "override run.master_seed");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad usage is a config error; --help is not
  }

  std::string stage;
  std::optional<std::uint64_t> seed;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    stage = commands[i].first == "run-all" ? "" : commands[i].first;
    if (subs[i]->count("--seed") > 0) seed = seed_value;
  }

  try {
    return run(stage, config_path, out_dir, seed);
  } catch (const prefgen::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const prefgen::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
