#ifndef MIXCLEAN_CONFIG_HPP
#define MIXCLEAN_CONFIG_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mixclean/em.hpp"
#include "mixclean/noise_model.hpp"
#include "mixclean/pipeline.hpp"
#include "mixclean/sweep.hpp"
#include "mixclean/synthetic.hpp"

namespace mixclean {

using Json = nlohmann::ordered_json;

// JSON schemas. Every reader starts from the defaults of the target struct,
// overrides the keys present, and rejects unknown keys. Enumerations are
// strings: mode "MLE" | "MAP", approximation "full" | "simplified",
// feature_source "static" | "logits", rho_init "identity" | "previous",
// classifier.kind "softmax" | "centroid", noise.kind "symmetric" |
// "asymmetric" | "instance", layout "circle" | "gaussian".

/// Settings for a single EM fit. `alpha`/`beta` may be a number (symmetric)
/// or one value per class. `init_pi` defaults to uniform; the transition
/// matrix starts at the smoothed identity. The mode defaults to MLE.
struct FitConfig {
  EmConfig em{.mode = EmMode::MLE};
  std::vector<double> alpha{kDefaultAlpha};
  std::vector<double> beta{kDefaultBeta};
  double init_smoothing = 0.05;
  std::optional<std::vector<double>> init_pi;

  [[nodiscard]] DirichletPriors priors(std::size_t classes) const;
};

[[nodiscard]] Json to_json(const PipelineConfig &config);
[[nodiscard]] PipelineConfig pipeline_config_from_json(const Json &j);

[[nodiscard]] Json to_json(const FitConfig &config);
[[nodiscard]] FitConfig fit_config_from_json(const Json &j);

[[nodiscard]] Json to_json(const SweepConfig &config);
[[nodiscard]] SweepConfig sweep_config_from_json(const Json &j);

[[nodiscard]] Json to_json(const NoiseSpec &spec);
[[nodiscard]] NoiseSpec noise_spec_from_json(const Json &j);

[[nodiscard]] Json to_json(const SyntheticSpec &spec);
[[nodiscard]] SyntheticSpec synthetic_spec_from_json(const Json &j);

/// Record of one command invocation. Replaying it reruns the command with
/// the same inputs and configuration snapshot.
struct RunManifest {
  std::string tool = "mixclean";
  std::string version;
  std::string command;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  Json config = Json::object();
  /// Input role -> absolute path.
  std::map<std::string, std::string> inputs;
  /// Output file names relative to the output directory.
  std::vector<std::string> artifacts;
  std::string output_dir;
  std::vector<std::string> warnings;
  /// Stage name -> seconds.
  std::map<std::string, double> wall_times;

  friend bool operator==(const RunManifest &, const RunManifest &) = default;
};

[[nodiscard]] Json to_json(const RunManifest &manifest);
[[nodiscard]] RunManifest manifest_from_json(const Json &j);

[[nodiscard]] Json read_json(const std::filesystem::path &path);
/// Two-space indented with a trailing newline. Non-finite numbers raise a
/// Numerical error.
[[nodiscard]] std::string format_json(const Json &j);
void write_json(const std::filesystem::path &path, const Json &j);

} // namespace mixclean

#endif // MIXCLEAN_CONFIG_HPP
