#include "mixclean/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mixclean/error.hpp"
#include "mixclean/noise_model.hpp"
#include "mixclean/parallel.hpp"
#include "mixclean/rng.hpp"

namespace mixclean {
namespace {

constexpr std::uint64_t kSubsampleTag = ~std::uint64_t{0};
constexpr std::uint64_t kWarmupTag = 1;
constexpr std::uint64_t kRetrainTag = 2;
constexpr std::uint64_t kBranchTag = 3;

bool strictly_positive(const MixtureParams &p) {
  for (double v : p.pi.values())
    if (!(v > 0.0))
      return false;
  for (const auto &col : p.rho.columns())
    for (double v : col.values())
      if (!(v > 0.0))
        return false;
  return true;
}

std::vector<std::size_t> draw_subset(std::size_t m, std::size_t size,
                                     Rng &rng) {
  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(all[i], all[j]);
  }
  all.resize(size);
  std::sort(all.begin(), all.end());
  return all;
}

double l2_change(const ProbabilityVector &a, const ProbabilityVector &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<ProbabilityVector> average(std::span<const ProbabilityVector> a,
                                       std::span<const ProbabilityVector> b) {
  std::vector<ProbabilityVector> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<double> v(a[i].size());
    for (std::size_t c = 0; c < v.size(); ++c)
      v[c] = 0.5 * (a[i][c] + b[i][c]);
    out.emplace_back(std::move(v));
  }
  return out;
}

std::vector<ProbabilityVector> posteriors_of(std::span<const MixtureParams> p) {
  std::vector<ProbabilityVector> out;
  out.reserve(p.size());
  for (const auto &x : p)
    out.push_back(x.pi);
  return out;
}

ClassifierState retrain(const TrainingData &train,
                        std::span<const ProbabilityVector> posteriors,
                        const PipelineConfig &config, std::uint64_t seed) {
  const auto classes = static_cast<std::size_t>(train.classes);
  const std::vector<double> targets =
      config.soft_labels ? soft_targets(posteriors)
                         : one_hot_targets(hard_labels(posteriors), classes);
  return train_classifier(train.features, targets, classes, config.classifier,
                          seed);
}

template <typename Fn> auto with_epoch(int epoch, Fn &&fn) {
  try {
    return fn();
  } catch (const Error &e) {
    throw Error(e.code(),
                "epoch " + std::to_string(epoch + 1) + ": " + e.what());
  }
}

} // namespace

// ---------------------------------------------------------------------------

void TrainingData::validate() const {
  require(classes >= 2, "dataset: need at least two classes");
  require(features.rows() == noisy_labels.size(),
          "dataset: " + std::to_string(features.rows()) + " feature rows but " +
              std::to_string(noisy_labels.size()) + " labels");
  require(features.rows() >= 2, "dataset: need at least two samples");
  for (std::size_t i = 0; i < noisy_labels.size(); ++i)
    if (noisy_labels[i] < 0 || noisy_labels[i] >= classes)
      fail(ErrorCode::Validation, "dataset: label " +
                                      std::to_string(noisy_labels[i]) +
                                      " at row " + std::to_string(i) +
                                      " outside [0, C)");
}

void EvaluationData::validate(const TrainingData &train) const {
  auto check_labels = [&](const std::vector<int> &labels, const char *what) {
    for (int v : labels)
      if (v < 0 || v >= train.classes)
        fail(ErrorCode::Validation,
             std::string("dataset: ") + what + " label outside [0, C)");
  };
  if (true_labels) {
    require(true_labels->size() == train.noisy_labels.size(),
            "dataset: true labels do not match the sample count");
    check_labels(*true_labels, "true");
  }
  require(test_features.has_value() == test_labels.has_value(),
          "dataset: test features and test labels must come together");
  if (test_features) {
    require(test_features->rows() == test_labels->size(),
            "dataset: test feature rows do not match test labels");
    require(test_features->dim() == train.features.dim(),
            "dataset: test feature dimension differs from training");
    check_labels(*test_labels, "test");
  }
}

int PipelineConfig::resolved_trials(int classes) const {
  return trials > 0 ? trials : identifiability_bound(classes);
}

std::vector<std::string> PipelineConfig::validate(int classes) const {
  require(k >= 1, "config: K must be >= 1");
  require(sets >= 1, "config: L must be >= 1");
  require(trials >= 0, "config: N must be >= 1 (or 0 for 2C - 1)");
  require(mu >= 0.0 && mu <= 1.0, "config: mu must lie in [0, 1]");
  require(eta >= 1, "config: eta must be >= 1");
  require(em_tol > 0.0, "config: em_tol must be positive");
  require(alpha > 0.0 && beta > 0.0, "config: priors must be positive");
  require(epochs >= 0, "config: epochs must be >= 0");
  require(outer_tol >= 0.0, "config: outer_tol must be >= 0");
  require(init_smoothing > 0.0 && init_smoothing < 1.0,
          "config: init_smoothing must lie in (0, 1)");
  require(llc_lambda >= 0.0, "config: llc_lambda must be >= 0");
  require(llc_sigma > 0.0, "config: llc_sigma must be positive");
  require(subsample_size == 0 || subsample_size > k,
          "config: subsample_size must exceed K");
  classifier.validate();
  std::vector<std::string> warnings;
  if (auto w = identifiability_warning(classes, resolved_trials(classes)))
    warnings.push_back(*w);
  return warnings;
}

std::vector<ProbabilityVector> PipelineState::posteriors() const {
  return posteriors_of(params);
}

std::optional<double>
Evaluator::clean_fraction(std::span<const int> pseudo_labels) const {
  if (!data_.true_labels)
    return std::nullopt;
  const auto &truth = *data_.true_labels;
  require(truth.size() == pseudo_labels.size(),
          "clean_fraction: size mismatch");
  if (truth.empty())
    return std::nullopt;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    hits += truth[i] == pseudo_labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::optional<double>
Evaluator::test_accuracy(const ClassifierState &classifier) const {
  if (!data_.test_features || data_.test_labels->empty())
    return std::nullopt;
  return classifier.accuracy(*data_.test_features, *data_.test_labels);
}

ClassifierState warm_up(const TrainingData &train, const ClassifierSpec &spec,
                        std::uint64_t seed) {
  train.validate();
  const auto classes = static_cast<std::size_t>(train.classes);
  return train_classifier(train.features,
                          one_hot_targets(train.noisy_labels, classes), classes,
                          spec, seed);
}

PipelineState initial_state(const TrainingData &train,
                            const PipelineConfig &config,
                            ClassifierState classifier) {
  const auto classes = static_cast<std::size_t>(train.classes);
  const int trials = config.resolved_trials(train.classes);
  PipelineState st;
  st.params.reserve(train.noisy_labels.size());
  for (int label : train.noisy_labels)
    st.params.push_back(smoothed_init(classes, static_cast<std::size_t>(label),
                                      trials, config.init_smoothing));
  st.classifier = std::move(classifier);
  return st;
}

EpochOutcome clean_epoch(const TrainingData &train, const PipelineState &state,
                         const PipelineConfig &config, int epoch,
                         std::uint64_t stream) {
  const std::size_t m = train.features.rows();
  require(state.params.size() == m, "clean_epoch: state does not match data");
  require(config.k < m, "clean_epoch: K must be smaller than M");
  const auto classes = static_cast<std::size_t>(train.classes);
  const int trials = config.resolved_trials(train.classes);
  const std::uint64_t base = derive_seed(config.seed, kBranchTag, stream);
  const auto ep = static_cast<std::uint64_t>(epoch);

  const FeatureMatrix features =
      config.feature_source == FeatureSource::ClassifierLogits
          ? state.classifier.representation(train.features)
          : train.features;

  std::vector<std::size_t> candidates;
  if (config.subsample_size > 0 && config.subsample_size < m) {
    Rng rng = Rng::stream(base, ep, kSubsampleTag);
    candidates = draw_subset(m, config.subsample_size, rng);
  } else {
    candidates.resize(m);
    std::iota(candidates.begin(), candidates.end(), 0);
  }

  const std::vector<ProbabilityVector> posteriors = state.posteriors();
  const DirichletPriors priors =
      DirichletPriors::symmetric(classes, config.alpha, config.beta);
  EmConfig em;
  em.mode = config.mode;
  em.max_iters = config.eta;
  em.tol = config.em_tol;

  EpochOutcome out;
  out.params = state.params;
  std::vector<int> iterations(m, 0);
  std::vector<double> objective(m, 0.0);
  std::vector<char> degenerate(m, 0);

  parallel_for(m, config.threads, [&](std::size_t i) {
    const NeighborSet nb =
        knn_search_among(features, i, candidates, config.k);
    LlcOptions llc;
    llc.lambda = config.llc_lambda;
    llc.sigma = config.llc_sigma;
    const CodingVector weights =
        llc_solve_detailed(features.row(i), features.select(nb.indices), llc)
            .coding;

    NoisyLabelDistribution dist;
    if (config.approximation == Approximation::Simplified) {
      std::vector<ProbabilityVector> nbp;
      nbp.reserve(nb.indices.size());
      for (std::size_t j : nb.indices)
        nbp.push_back(posteriors[j]);
      dist = approximate_noisy_distribution_simplified(posteriors[i], nbp,
                                                       weights, config.mu);
    } else {
      std::vector<MixtureParams> nbp;
      nbp.reserve(nb.indices.size());
      for (std::size_t j : nb.indices)
        nbp.push_back(state.params[j]);
      dist = approximate_noisy_distribution_full(state.params[i], nbp, weights,
                                                 config.mu);
    }

    Rng rng = Rng::stream(base, ep, i);
    const std::vector<CountVector> labels =
        sample_label_sets(dist, trials, config.sets, rng);

    // Warm start from the current posterior. The transition matrix restarts
    // from the smoothed identity unless configured otherwise: a fitted rho
    // drifts away from diagonal dominance and invites label switching.
    const MixtureParams &current = state.params[i];
    const MixtureParams init =
        config.rho_init == RhoInit::Identity
            ? MixtureParams(strictly_positive(current)
                                ? current.pi
                                : smooth(current, config.init_smoothing).pi,
                            TransitionMatrix::smoothed_identity(
                                classes, config.init_smoothing),
                            trials)
            : (strictly_positive(current)
                   ? current
                   : smooth(current, config.init_smoothing));
    try {
      EmResult fit = run_em(labels, init, priors, em);
      iterations[i] = fit.iterations;
      objective[i] = fit.objective_trace.back();
      out.params[i] = std::move(fit.params);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::Numerical)
        throw;
      degenerate[i] = 1;
    }
  });

  std::size_t fitted = 0;
  double iter_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (degenerate[i]) {
      ++out.degenerate_samples;
      continue;
    }
    ++fitted;
    iter_sum += iterations[i];
    out.objective_sum += objective[i];
  }
  out.mean_em_iterations = fitted > 0 ? iter_sum / static_cast<double>(fitted)
                                      : 0.0;
  return out;
}

std::vector<int> hard_labels(std::span<const ProbabilityVector> posteriors) {
  std::vector<int> out;
  out.reserve(posteriors.size());
  for (const auto &p : posteriors)
    out.push_back(static_cast<int>(p.argmax()));
  return out;
}

std::vector<double> soft_targets(std::span<const ProbabilityVector> posteriors) {
  std::vector<double> out;
  if (posteriors.empty())
    return out;
  out.reserve(posteriors.size() * posteriors.front().size());
  for (const auto &p : posteriors)
    out.insert(out.end(), p.values().begin(), p.values().end());
  return out;
}

PipelineResult run_pipeline(const Dataset &dataset,
                            const PipelineConfig &config) {
  const TrainingData &train = dataset.train;
  train.validate();
  dataset.eval.validate(train);
  PipelineResult result;
  result.warnings = config.validate(train.classes);
  require(config.k < train.features.rows(),
          "config: K must be smaller than the number of samples");
  const Evaluator evaluator(dataset.eval);

  auto keep_warnings = [&](const ClassifierState &c) {
    result.warnings.insert(result.warnings.end(), c.warnings.begin(),
                           c.warnings.end());
  };

  ClassifierState warm_a =
      warm_up(train, config.classifier, derive_seed(config.seed, kWarmupTag, 0));
  keep_warnings(warm_a);
  PipelineState branch_a = initial_state(train, config, std::move(warm_a));
  std::optional<PipelineState> branch_b;
  if (config.cross_cleaning) {
    ClassifierState warm_b = warm_up(train, config.classifier,
                                     derive_seed(config.seed, kWarmupTag, 1));
    keep_warnings(warm_b);
    branch_b = initial_state(train, config, std::move(warm_b));
  }

  result.initial_clean_fraction = evaluator.clean_fraction(train.noisy_labels);
  result.warmup_test_accuracy = evaluator.test_accuracy(branch_a.classifier);
  result.posteriors = branch_a.posteriors();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochOutcome out_a = with_epoch(epoch, [&] {
      return clean_epoch(train, branch_a, config, epoch, 0);
    });
    EpochReport report;
    report.epoch = epoch + 1;
    report.degenerate_samples = out_a.degenerate_samples;
    report.objective_sum = out_a.objective_sum;
    report.mean_em_iterations = out_a.mean_em_iterations;

    std::vector<ProbabilityVector> post_a = posteriors_of(out_a.params);
    std::vector<ProbabilityVector> merged;
    const auto retrain_seed =
        derive_seed(config.seed, kRetrainTag, static_cast<std::uint64_t>(epoch));
    if (branch_b) {
      EpochOutcome out_b = with_epoch(epoch, [&] {
        return clean_epoch(train, *branch_b, config, epoch, 1);
      });
      std::vector<ProbabilityVector> post_b = posteriors_of(out_b.params);
      report.degenerate_samples += out_b.degenerate_samples;
      report.objective_sum += out_b.objective_sum;
      report.mean_em_iterations =
          0.5 * (out_a.mean_em_iterations + out_b.mean_em_iterations);
      // Each model learns from the labels cleaned by the other one.
      branch_b->classifier = retrain(train, post_a, config, retrain_seed);
      branch_a.classifier = retrain(train, post_b, config, retrain_seed + 1);
      branch_b->params = std::move(out_b.params);
      merged = average(post_a, post_b);
    } else {
      branch_a.classifier = retrain(train, post_a, config, retrain_seed);
      merged = std::move(post_a);
    }
    branch_a.params = std::move(out_a.params);
    keep_warnings(branch_a.classifier);

    for (std::size_t i = 0; i < merged.size(); ++i)
      report.max_posterior_change = std::max(
          report.max_posterior_change, l2_change(merged[i], result.posteriors[i]));
    result.posteriors = std::move(merged);
    report.clean_fraction =
        evaluator.clean_fraction(hard_labels(result.posteriors));
    report.test_accuracy = evaluator.test_accuracy(branch_a.classifier);
    report.wall_time_s = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    result.reports.push_back(report);
    if (report.max_posterior_change < config.outer_tol) {
      result.converged = true;
      break;
    }
  }
  std::sort(result.warnings.begin(), result.warnings.end());
  result.warnings.erase(std::unique(result.warnings.begin(), result.warnings.end()),
                        result.warnings.end());
  result.classifier = std::move(branch_a.classifier);
  return result;
}

} // namespace mixclean
