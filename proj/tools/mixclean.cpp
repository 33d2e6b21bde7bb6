// Command-line front end for the noisy-label cleaning library.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mixclean/commands.hpp"
#include "mixclean/error.hpp"

using namespace mixclean;

namespace {

unsigned threads_from_env() {
  const char *env = std::getenv("MIXCLEAN_THREADS");
  if (env == nullptr || *env == '\0')
    return 1;
  try {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(env, &pos);
    if (pos != std::string(env).size())
      throw std::invalid_argument(env);
    return static_cast<unsigned>(v);
  } catch (const std::exception &) {
    fail(ErrorCode::Validation,
         std::string("MIXCLEAN_THREADS is not a thread count: ") + env);
  }
}

Json load_config(const std::string &path) {
  return path.empty() ? Json::object() : read_json(path);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Noisy-label cleaning with identifiable multinomial mixtures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = -1;
  bool quiet = false;

  auto common = [&](CLI::App *cmd, bool with_config) {
    if (with_config)
      cmd->add_option("--config", config_path, "JSON configuration file")
          ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Random seed (overrides the config)");
    cmd->add_option("--out", out_dir, "Output directory")
        ->capture_default_str();
    cmd->add_option("--threads", threads,
                    "Worker threads, 0 = all cores (default: MIXCLEAN_THREADS "
                    "or 1)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--quiet", quiet, "Suppress progress output");
  };

  auto *demo = app.add_subcommand(
      "demo-nonidentifiability",
      "Show two factorizations with the same noisy-label distribution");
  common(demo, false);

  std::string labels_path;
  auto *fit = app.add_subcommand("fit", "Fit one multinomial mixture by EM");
  common(fit, true);
  fit->add_option("--labels", labels_path, "CSV of label-set counts")
      ->required()
      ->check(CLI::ExistingFile);

  auto *sweep = app.add_subcommand("identifiability-sweep",
                                   "Parameter recovery over a grid of C, N, L");
  common(sweep, true);

  std::string data_dir;
  auto *clean = app.add_subcommand("clean", "Run the label-cleaning pipeline");
  common(clean, true);
  clean->add_option("--data", data_dir, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  auto *synth = app.add_subcommand("make-synthetic",
                                   "Generate a Gaussian-cluster dataset");
  common(synth, true);

  std::string manifest_path;
  auto *replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  common(replay, false);
  replay->add_option("--manifest", manifest_path, "manifest.json to replay")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCode::Validation);
  }

  try {
    CommandContext ctx;
    ctx.out = out_dir;
    ctx.threads = threads >= 0 ? static_cast<unsigned>(threads) : threads_from_env();
    ctx.log = quiet ? nullptr : &std::cerr;
    for (const CLI::App *sub : app.get_subcommands())
      if (sub->count("--seed") > 0)
        ctx.seed = seed;

    if (demo->parsed()) {
      (void)cmd_demo_nonidentifiability(ctx);
    } else if (fit->parsed()) {
      (void)cmd_fit(labels_path, load_config(config_path), ctx);
    } else if (sweep->parsed()) {
      (void)cmd_identifiability_sweep(load_config(config_path), ctx);
    } else if (clean->parsed()) {
      (void)cmd_clean(data_dir, load_config(config_path), ctx);
    } else if (synth->parsed()) {
      (void)cmd_make_synthetic(load_config(config_path), ctx);
    } else if (replay->parsed()) {
      if (replay->count("--out") == 0)
        ctx.out.clear();
      (void)cmd_replay(manifest_path, ctx);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
