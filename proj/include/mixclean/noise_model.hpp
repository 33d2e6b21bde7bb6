#ifndef MIXCLEAN_NOISE_MODEL_HPP
#define MIXCLEAN_NOISE_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixclean/multinomial.hpp"
#include "mixclean/neighborhood.hpp"
#include "mixclean/rng.hpp"

namespace mixclean {

/// Approximate distribution of a sample's noisy labels, blended from the
/// sample itself and its neighbours.
///
/// MixtureForm keeps one weighted multinomial mixture per contributor, so
/// it has (K + 1) * C components in total. CategoricalForm collapses every
/// contributor to a single probability vector.
struct NoisyLabelDistribution {
  enum class Kind { MixtureForm, CategoricalForm };

  Kind kind = Kind::CategoricalForm;
  ProbabilityVector categorical;
  std::vector<std::pair<double, MixtureParams>> components;

  [[nodiscard]] std::size_t classes() const;
  /// Number of multinomial components (C for each mixture, 1 if categorical).
  [[nodiscard]] std::size_t component_count() const;
  /// Distribution of one noisy label.
  [[nodiscard]] ProbabilityVector marginal() const;
  void validate() const;
};

/// mu * p(self) + (1 - mu) * sum_j A_j p(neighbour_j), mixtures kept intact.
[[nodiscard]] NoisyLabelDistribution approximate_noisy_distribution_full(
    const MixtureParams &self_params,
    std::span<const MixtureParams> neighbour_params,
    const CodingVector &weights, double mu);

/// Same blend applied to pseudo-clean posteriors, giving a categorical.
[[nodiscard]] NoisyLabelDistribution approximate_noisy_distribution_simplified(
    const ProbabilityVector &self_posterior,
    std::span<const ProbabilityVector> neighbour_posteriors,
    const CodingVector &weights, double mu);

/// L independent sets of N noisy labels. A mixture draws one component per
/// set and then N categories from it. When N is below 2C - 1 a warning is
/// appended to `warnings` (if given); sampling still proceeds.
[[nodiscard]] std::vector<CountVector>
sample_label_sets(const NoisyLabelDistribution &dist, int trials, int sets,
                  Rng &rng, std::vector<std::string> *warnings = nullptr);

enum class NoiseKind { Symmetric, Asymmetric, InstanceDependent };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Symmetric;
  double rate = 0.0;
  std::uint64_t seed = 0;
  int classes = 2;
  /// d x C row-major; InstanceDependent only. Drawn N(0, 1) from the seed
  /// when absent.
  std::optional<std::vector<double>> projection;

  void validate() const;
};

/// Corrupt clean labels.
///
///   Symmetric          flip with probability `rate` to a uniformly random
///                      other class.
///   Asymmetric         flip with probability `rate` to (c + 1) mod C.
///   InstanceDependent  s_i = softmax(x_i W). Sample i has flip propensity
///                      q_i = 1 - s_i[c_i] and, if flipped, moves to a class
///                      drawn from s_i restricted to the other classes. The
///                      flip probability is min(1, t q_i); t is calibrated by
///                      bisection against the drawn uniforms so that the
///                      realized flip count is round(rate * M).
[[nodiscard]] std::vector<int> inject_noise(std::span<const int> clean_labels,
                                            const FeatureMatrix &features,
                                            const NoiseSpec &spec);

struct NonIdentifiabilityReport {
  TransitionMatrix transition_a;
  ProbabilityVector prior_a;
  TransitionMatrix transition_b;
  ProbabilityVector prior_b;
  ProbabilityVector marginal_a;
  ProbabilityVector marginal_b;
  /// l-infinity distance between the two marginals.
  double gap = 0.0;
};

/// Two different (transition, prior) factorizations of the same 3-class
/// noisy-label distribution (0.25, 0.45, 0.3).
[[nodiscard]] NonIdentifiabilityReport nonidentifiability_demo();

} // namespace mixclean

#endif // MIXCLEAN_NOISE_MODEL_HPP
