#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "mixclean/config.hpp"
#include "mixclean/io.hpp"

#ifndef MIXCLEAN_CLI
#error "MIXCLEAN_CLI must name the command-line binary"
#endif

using namespace mixclean;
namespace fs = std::filesystem;

namespace {

int run(const std::string &args) {
  const std::string cmd = std::string(MIXCLEAN_CLI) + " " + args + " --quiet 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_raw(const std::string &args) {
  const std::string cmd = std::string(MIXCLEAN_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path &p) { return "'" + p.string() + "'"; }

void put(const fs::path &p, const std::string &text) {
  std::ofstream(p, std::ios::binary) << text;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  const auto dir = testing::scratch_dir("cli_codes");
  CHECK(run_raw("--help") == 0);
  CHECK(run_raw("") == 1);
  CHECK(run_raw("no-such-command") == 1);
  CHECK(run("fit --labels " + q(dir / "missing.csv")) == 1);
  put(dir / "empty.csv", "");
  CHECK(run("fit --labels " + q(dir / "empty.csv") + " --out " + q(dir / "o")) == 1);
  put(dir / "bad.json", "{\"bogus\": 1}");
  put(dir / "ok.csv", "1,0\n0,1\n");
  CHECK(run("fit --labels " + q(dir / "ok.csv") + " --config " + q(dir / "bad.json") +
            " --out " + q(dir / "o")) == 1);
  // Output path that is a regular file: I/O failure.
  put(dir / "blocker", "x");
  CHECK(run("demo-nonidentifiability --out " + q(dir / "blocker" / "sub")) == 3);
}

TEST_CASE("demo writes parseable JSON") {
  const auto dir = testing::scratch_dir("cli_demo");
  REQUIRE(run("demo-nonidentifiability --out " + q(dir)) == 0);
  const Json j = read_json(dir / "nonidentifiability.json");
  CHECK(j.at("gap").get<double>() < 1e-12);
  CHECK(j.at("gap_below_1e-12").get<bool>());
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("make-synthetic noise rate and regeneration") {
  const auto dir = testing::scratch_dir("cli_synth");
  put(dir / "spec.json",
      R"({"samples": 10000, "classes": 4, "noise": {"kind": "symmetric", "rate": 0.4}})");
  REQUIRE(run("make-synthetic --config " + q(dir / "spec.json") + " --seed 5 --out " +
              q(dir / "a")) == 0);
  REQUIRE(run("make-synthetic --config " + q(dir / "spec.json") + " --seed 5 --out " +
              q(dir / "b")) == 0);
  const auto clean = read_labels(dir / "a" / "true_labels.csv");
  const auto noisy = read_labels(dir / "a" / "noisy_labels.csv");
  REQUIRE(clean.size() == 10000);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < clean.size(); ++i)
    flipped += clean[i] != noisy[i] ? 1 : 0;
  CHECK(std::abs(static_cast<double>(flipped) / 1e4 - 0.4) <= 0.015);
  for (const char *f : {"features.csv", "true_labels.csv", "noisy_labels.csv", "dataset.json"})
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
}

TEST_CASE("replay of a seeded run reproduces the files") {
  const auto dir = testing::scratch_dir("cli_replay");
  put(dir / "spec.json",
      R"({"samples": 200, "classes": 3, "noise": {"kind": "instance", "rate": 0.3}})");
  REQUIRE(run("make-synthetic --config " + q(dir / "spec.json") + " --seed 12 --out " +
              q(dir / "a")) == 0);
  REQUIRE(run("replay --manifest " + q(dir / "a" / "manifest.json") + " --out " +
              q(dir / "b")) == 0);
  for (const char *f : {"features.csv", "true_labels.csv", "noisy_labels.csv", "dataset.json"})
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
  CHECK(run("replay --manifest " + q(dir / "spec.json")) == 1);
}

TEST_CASE("fit: flat priors match maximum likelihood") {
  const auto dir = testing::scratch_dir("cli_fit");
  Rng rng(3);
  const auto truth = testing::random_params(3, 5, rng);
  write_label_sets(dir / "sets.csv", testing::draw_labels(truth, 300, rng));
  put(dir / "mle.json", R"({"mode": "MLE", "max_iters": 200})");
  put(dir / "map.json", R"({"mode": "MAP", "alpha": 1, "beta": 1, "max_iters": 200})");
  REQUIRE(run("fit --labels " + q(dir / "sets.csv") + " --config " + q(dir / "mle.json") +
              " --out " + q(dir / "mle")) == 0);
  REQUIRE(run("fit --labels " + q(dir / "sets.csv") + " --config " + q(dir / "map.json") +
              " --out " + q(dir / "map")) == 0);
  const Json a = read_json(dir / "mle" / "fit.json");
  const Json b = read_json(dir / "map" / "fit.json");
  CHECK(a.at("identifiable").get<bool>());
  const auto pa = a.at("pi").get<std::vector<double>>();
  const auto pb = b.at("pi").get<std::vector<double>>();
  CHECK(testing::max_abs_diff(pa, pb) < 1e-12);
  const auto ra = a.at("rho").get<std::vector<std::vector<double>>>();
  const auto rb = b.at("rho").get<std::vector<std::vector<double>>>();
  for (std::size_t r = 0; r < ra.size(); ++r)
    CHECK(testing::max_abs_diff(ra[r], rb[r]) < 1e-12);
}

TEST_CASE("clean records the identifiability warning") {
  const auto dir = testing::scratch_dir("cli_clean");
  put(dir / "spec.json", R"({"samples": 120, "classes": 3, "noise": {"rate": 0.2}})");
  REQUIRE(run("make-synthetic --config " + q(dir / "spec.json") + " --out " +
              q(dir / "data")) == 0);
  put(dir / "cfg.json", R"({"trials": 2, "sets": 30, "epochs": 1, "k": 5})");
  REQUIRE(run("clean --data " + q(dir / "data") + " --config " + q(dir / "cfg.json") +
              " --out " + q(dir / "out")) == 0);
  const auto m = manifest_from_json(read_json(dir / "out" / "manifest.json"));
  bool found = false;
  for (const auto &w : m.warnings)
    found = found || w.find("2C - 1") != std::string::npos;
  CHECK(found);
  for (const char *f : {"epochs.json", "epochs.csv", "posteriors.csv", "pseudo_labels.csv"})
    CHECK(fs::exists(dir / "out" / f));
  CHECK(read_labels(dir / "out" / "pseudo_labels.csv").size() == 120);
}

TEST_CASE("sweep reports the bound for C = 100") {
  const auto dir = testing::scratch_dir("cli_sweep");
  put(dir / "cfg.json", R"({"classes": [100], "trials": [1], "sets": [40], "reps": 1,
                           "inits": 1, "heldout_sets": 10, "max_iters": 3})");
  REQUIRE(run("identifiability-sweep --config " + q(dir / "cfg.json") + " --out " +
              q(dir)) == 0);
  const auto text = read_text(dir / "sweep.csv");
  const auto second = text.substr(text.find('\n') + 1);
  CHECK(second.rfind("100,1,40,0,199,", 0) == 0);
}

} // TEST_SUITE
