// wrapids: command-line driver for the feature-selection and benchmark pipeline.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wrapids/cli.hpp"

namespace {

extern "C" void on_sigint(int) { wrapids::cli::interrupted.store(true); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wrapids: wrapper feature selection and IDS classifier benchmarking"};
  app.set_version_flag("--version", std::string(wrapids::kVersion));
  app.require_subcommand(1, 1);

  std::optional<std::string> config;
  wrapids::Overrides over;
  app.add_option("--config", config, "JSON run configuration");
  app.add_option("--seed", over.seed, "global seed (overrides config)");
  app.add_option("--threads", over.threads, "worker threads, 0 = all cores (overrides config)");
  app.add_option("--output", over.output, "output root directory (overrides config)");
  app.add_option("--subsample", over.subsample, "stratified row fraction for feature search")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--model", over.model, "model artifact for eval (overrides config)");

  app.add_subcommand("inspect", "print schema and class distribution");
  app.add_subcommand("select", "wrapper feature selection with best-first search");
  app.add_subcommand("train", "fit preprocessing and one classifier, write a model artifact");
  app.add_subcommand("eval", "score a model artifact on the test split");
  app.add_subcommand("bench", "run the feature-set x classifier grid");
  app.add_subcommand("synth", "write a synthetic labeled dataset");
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : wrapids::cli::kExitConfig;
  }

  std::signal(SIGINT, on_sigint);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    std::optional<std::filesystem::path> path;
    if (config) path = *config;
    wrapids::RunConfig cfg = wrapids::load_run_config(path, over);
    return wrapids::cli::run_command(command, cfg, std::cout);
  } catch (const std::exception& e) {
    int rc = wrapids::cli::exit_code_for(e);
    std::cerr << "wrapids " << command << ": " << (rc == wrapids::cli::kExitInternal ? "internal error: " : "")
              << e.what() << "\n";
    return rc;
  }
}
