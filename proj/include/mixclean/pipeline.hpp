#ifndef MIXCLEAN_PIPELINE_HPP
#define MIXCLEAN_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixclean/classifier.hpp"
#include "mixclean/em.hpp"
#include "mixclean/multinomial.hpp"
#include "mixclean/neighborhood.hpp"

namespace mixclean {

/// Everything a cleaning step may look at.
struct TrainingData {
  FeatureMatrix features;
  std::vector<int> noisy_labels;
  int classes = 2;

  void validate() const;
};

/// Ground truth, consulted only when computing metrics.
struct EvaluationData {
  std::optional<std::vector<int>> true_labels;
  std::optional<FeatureMatrix> test_features;
  std::optional<std::vector<int>> test_labels;

  void validate(const TrainingData &train) const;
};

struct Dataset {
  TrainingData train;
  EvaluationData eval;
};

enum class Approximation { Full, Simplified };
enum class FeatureSource { Static, ClassifierLogits };
/// Transition-matrix starting point for each epoch's EM.
enum class RhoInit { Identity, Previous };

struct PipelineConfig {
  std::size_t k = 10;
  int sets = 100;    // L
  int trials = 0;    // N; 0 selects 2C - 1
  double mu = 0.5;
  int eta = 100;     // EM iteration cap
  double em_tol = 1e-6;
  EmMode mode = EmMode::MLE;
  RhoInit rho_init = RhoInit::Identity;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  int epochs = 10;
  double outer_tol = 1e-3;
  Approximation approximation = Approximation::Simplified;
  bool cross_cleaning = false;
  bool soft_labels = false;
  FeatureSource feature_source = FeatureSource::Static;
  ClassifierSpec classifier;
  double init_smoothing = 0.05;
  double llc_lambda = 0.0;
  double llc_sigma = 1.0;
  std::size_t subsample_size = 0; // 0 disables
  std::uint64_t seed = 0;
  unsigned threads = 1; // 0 = hardware concurrency

  [[nodiscard]] int resolved_trials(int classes) const;
  /// Throws on invalid values; returns non-fatal warnings.
  [[nodiscard]] std::vector<std::string> validate(int classes) const;
};

struct EpochReport {
  int epoch = 0;
  std::optional<double> clean_fraction;
  double mean_em_iterations = 0.0;
  double objective_sum = 0.0;
  std::optional<double> test_accuracy;
  double wall_time_s = 0.0;
  std::size_t degenerate_samples = 0;
  double max_posterior_change = 0.0;
};

/// Per-sample mixture parameters plus the classifier that supplies features.
struct PipelineState {
  std::vector<MixtureParams> params;
  ClassifierState classifier;

  [[nodiscard]] std::vector<ProbabilityVector> posteriors() const;
};

struct EpochOutcome {
  std::vector<MixtureParams> params;
  double mean_em_iterations = 0.0;
  double objective_sum = 0.0;
  std::size_t degenerate_samples = 0;
};

/// Metrics that need ground truth live here so cleaning code cannot see it.
class Evaluator {
public:
  explicit Evaluator(EvaluationData data) : data_(std::move(data)) {}

  [[nodiscard]] std::optional<double>
  clean_fraction(std::span<const int> pseudo_labels) const;
  [[nodiscard]] std::optional<double>
  test_accuracy(const ClassifierState &classifier) const;

private:
  EvaluationData data_;
};

/// Warm-up: train the classifier on the observed noisy labels.
[[nodiscard]] ClassifierState warm_up(const TrainingData &train,
                                      const ClassifierSpec &spec,
                                      std::uint64_t seed);

/// Initial per-sample parameters: smoothed one-hot of the noisy label and
/// the smoothed identity.
[[nodiscard]] PipelineState initial_state(const TrainingData &train,
                                          const PipelineConfig &config,
                                          ClassifierState classifier);

/// One pass of neighbour search, distribution approximation, label
/// sampling and per-sample EM. `stream` separates the random streams of
/// independent branches. Samples whose EM hits a degenerate row keep their
/// previous parameters and are counted.
[[nodiscard]] EpochOutcome clean_epoch(const TrainingData &train,
                                       const PipelineState &state,
                                       const PipelineConfig &config, int epoch,
                                       std::uint64_t stream = 0);

/// Argmax of each posterior, ties to the lowest class.
[[nodiscard]] std::vector<int>
hard_labels(std::span<const ProbabilityVector> posteriors);

/// Row-major M x C soft targets.
[[nodiscard]] std::vector<double>
soft_targets(std::span<const ProbabilityVector> posteriors);

struct PipelineResult {
  std::vector<EpochReport> reports;
  std::vector<ProbabilityVector> posteriors;
  std::optional<double> initial_clean_fraction;
  std::optional<double> warmup_test_accuracy;
  std::vector<std::string> warnings;
  ClassifierState classifier;
  bool converged = false;
};

[[nodiscard]] PipelineResult run_pipeline(const Dataset &dataset,
                                          const PipelineConfig &config);

} // namespace mixclean

#endif // MIXCLEAN_PIPELINE_HPP
