#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ns2d/config.hpp"
#include "ns2d/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stoch-ns2d: pseudo-spectral 2D stochastic Navier-Stokes with a Monte "
               "Carlo verification harness"};
  app.require_subcommand(1);

  const std::vector<std::string> experiments = {
      "simulate",      "ensemble",  "verify-conservation", "lemma1",
      "lemma2",        "proposition", "theorem-ladder",    "time-average",
      "spectrum",      "picard-certify"};

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;

  std::vector<CLI::App*> subs;
  for (const std::string& name : experiments) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--seed", seed, "master seed override")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--out", out_dir, "output directory override");
    sub->add_option("--threads", threads, "worker threads override");
    subs.push_back(sub);
  }

  std::string manifest_path;
  int replay_threads = 0;
  CLI::App* replay = app.add_subcommand("replay", "re-run a manifest and verify digests");
  replay->add_option("manifest", manifest_path, "manifest.json of a previous run")
      ->required();
  replay->add_option("--threads", replay_threads,
                     "worker threads for the replay (digests must not change)");

  CLI11_PARSE(app, argc, argv);

  if (replay->parsed())
    return ns2d::runner::replay(manifest_path, replay_threads);

  ns2d::config::RunConfig cfg;
  try {
    cfg = ns2d::config::parse_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ns2d::runner::exit_config;
  }
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    if (subs[i]->parsed()) {
      const auto named = ns2d::config::experiment_from_string(experiments[i]);
      if (cfg.experiment != named) {
        // Subcommand wins over the file's experiment selector.
        cfg.experiment = named;
      }
    }
  }
  if (seed_set) cfg.seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (threads > 0) cfg.threads = threads;
  return ns2d::runner::run(cfg);
}
