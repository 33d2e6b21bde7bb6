#include "doctest.h"

#include <cmath>
#include <fstream>
#include <functional>

#include "helpers.hpp"
#include "mixclean/config.hpp"
#include "mixclean/error.hpp"
#include "mixclean/io.hpp"

using namespace mixclean;
namespace fs = std::filesystem;

namespace {

void put(const fs::path &p, const std::string &text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string error_message(const std::function<void()> &fn, ErrorCode *code = nullptr) {
  try {
    fn();
  } catch (const Error &e) {
    if (code)
      *code = e.code();
    return e.what();
  }
  return {};
}

} // namespace

TEST_SUITE("io_config") {

TEST_CASE("format_double round-trips") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.below(20)) - 10);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK_THROWS_AS((void)format_double(NAN), Error);
}

TEST_CASE("csv round trips reproduce bytes") {
  const auto dir = testing::scratch_dir("io_roundtrip");
  Rng rng(2);
  std::vector<double> data(30);
  for (double &v : data)
    v = rng.normal();
  const FeatureMatrix f(10, 3, data);
  write_features(dir / "f.csv", f);
  CHECK(read_features(dir / "f.csv") == f);
  CHECK(format_features(read_features(dir / "f.csv")) == read_text(dir / "f.csv"));

  const std::vector<int> labels{0, 2, 1, 1};
  write_labels(dir / "y.csv", labels);
  CHECK(read_labels(dir / "y.csv") == labels);

  const std::vector<ProbabilityVector> post{ProbabilityVector({0.25, 0.75}),
                                            ProbabilityVector({1.0 / 3.0, 2.0 / 3.0})};
  write_posteriors(dir / "p.csv", post);
  CHECK(read_posteriors(dir / "p.csv") == post);

  const std::vector<CountVector> sets{CountVector({1, 2}), CountVector({3, 0})};
  write_label_sets(dir / "s.csv", sets);
  CHECK(read_label_sets(dir / "s.csv") == sets);
  CHECK(read_text(dir / "s.csv") == "1,2\n3,0\n");
  CHECK_FALSE(fs::exists(dir / "s.csv.tmp"));
}

TEST_CASE("parse errors name the line") {
  const auto dir = testing::scratch_dir("io_errors");
  ErrorCode code{};
  put(dir / "empty.csv", "\n\n");
  CHECK(error_message([&] { (void)read_label_sets(dir / "empty.csv"); }, &code)
            .find("L = 0") != std::string::npos);
  CHECK(code == ErrorCode::Validation);

  put(dir / "ragged.csv", "1,2\n3\n");
  CHECK(error_message([&] { (void)read_label_sets(dir / "ragged.csv"); })
            .find(":2:") != std::string::npos);

  put(dir / "sums.csv", "1,2\n\n2,2\n");
  const auto msg = error_message([&] { (void)read_label_sets(dir / "sums.csv"); });
  CHECK(msg.find(":3:") != std::string::npos);
  CHECK(msg.find("row sums to 4") != std::string::npos);

  put(dir / "neg.csv", "1,-1\n");
  CHECK_THROWS_AS((void)read_label_sets(dir / "neg.csv"), Error);
  put(dir / "frac.csv", "1.5,1\n");
  CHECK_THROWS_AS((void)read_label_sets(dir / "frac.csv"), Error);

  put(dir / "nan.csv", "1,2\n3,nan\n");
  CHECK(error_message([&] { (void)read_features(dir / "nan.csv"); }).find(":2:") !=
        std::string::npos);

  put(dir / "lab.csv", "0\nx\n");
  CHECK_THROWS_AS((void)read_labels(dir / "lab.csv"), Error);

  (void)error_message([&] { (void)read_text(dir / "missing.csv"); }, &code);
  CHECK(code == ErrorCode::Io);
}

TEST_CASE("trimmed cells and blank lines") {
  const auto dir = testing::scratch_dir("io_trim");
  put(dir / "s.csv", " 1 , 2\n\n0,3 \n");
  CHECK(read_label_sets(dir / "s.csv") ==
        std::vector<CountVector>{CountVector({1, 2}), CountVector({0, 3})});
}

TEST_CASE("config round trips") {
  PipelineConfig p;
  p.k = 7;
  p.mu = 0.25;
  p.mode = EmMode::MAP;
  p.approximation = Approximation::Full;
  p.feature_source = FeatureSource::ClassifierLogits;
  p.rho_init = RhoInit::Previous;
  p.classifier.kind = ClassifierKind::NearestCentroid;
  const auto p2 = pipeline_config_from_json(to_json(p));
  CHECK(to_json(p2) == to_json(p));
  CHECK(p2.k == 7);
  CHECK(p2.mode == EmMode::MAP);

  FitConfig f;
  f.alpha = {2.0, 3.0};
  f.init_pi = std::vector<double>{0.4, 0.6};
  CHECK(to_json(fit_config_from_json(to_json(f))) == to_json(f));

  SweepConfig s;
  s.classes = {2, 3};
  CHECK(to_json(sweep_config_from_json(to_json(s))) == to_json(s));

  SyntheticSpec syn;
  syn.noise.kind = NoiseKind::InstanceDependent;
  syn.layout = ClusterLayout::Gaussian;
  CHECK(to_json(synthetic_spec_from_json(to_json(syn))) == to_json(syn));

  CHECK(pipeline_config_from_json(Json::object()).k == PipelineConfig{}.k);
  CHECK(pipeline_config_from_json(Json{{"k", 4}}).k == 4);
  CHECK(pipeline_config_from_json(Json::parse(R"({"seed": 18446744073709551615})")).seed ==
        18446744073709551615ULL);
  CHECK_THROWS_AS((void)pipeline_config_from_json(Json{{"k", -1}}), Error);
}

TEST_CASE("config rejects bad input") {
  CHECK_THROWS_AS((void)pipeline_config_from_json(Json{{"kk", 3}}), Error);
  CHECK_THROWS_AS((void)pipeline_config_from_json(Json{{"k", "three"}}), Error);
  CHECK_THROWS_AS((void)pipeline_config_from_json(Json{{"mode", "ML"}}), Error);
  CHECK_THROWS_AS((void)fit_config_from_json(Json{{"bogus", 1}}), Error);
  CHECK_THROWS_AS((void)synthetic_spec_from_json(Json{{"noise", {{"kind", "x"}}}}),
                  Error);
  const auto dir = testing::scratch_dir("config_bad");
  put(dir / "c.json", "{ not json");
  ErrorCode code{};
  (void)error_message([&] { (void)read_json(dir / "c.json"); }, &code);
  CHECK(code == ErrorCode::Validation);
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.version = "1";
  m.command = "clean";
  m.seed = 42;
  m.threads = 2;
  m.config = to_json(PipelineConfig{});
  m.inputs = {{"data", "/tmp/x"}};
  m.artifacts = {"a.csv", "b.json"};
  m.output_dir = "/tmp/out";
  m.warnings = {"w"};
  m.wall_times = {{"epoch_1", 0.5}};
  CHECK(manifest_from_json(to_json(m)) == m);
  const auto dir = testing::scratch_dir("manifest");
  write_json(dir / "m.json", to_json(m));
  CHECK(manifest_from_json(read_json(dir / "m.json")) == m);
  CHECK(read_text(dir / "m.json").back() == '\n');
}

} // TEST_SUITE
