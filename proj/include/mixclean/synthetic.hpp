#ifndef MIXCLEAN_SYNTHETIC_HPP
#define MIXCLEAN_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "mixclean/neighborhood.hpp"
#include "mixclean/noise_model.hpp"

namespace mixclean {

/// Where the class means sit.
///   Circle    evenly spaced on a circle of radius `separation` in the first
///             two coordinates (needs dim >= 2)
///   Gaussian  drawn N(0, separation^2) per coordinate
enum class ClusterLayout { Circle, Gaussian };

struct SyntheticSpec {
  std::size_t samples = 1000;
  std::size_t dim = 2;
  int classes = 2;
  ClusterLayout layout = ClusterLayout::Circle;
  double separation = 3.0;
  double spread = 1.0;
  /// Held-out points with clean labels; 0 for none.
  std::size_t test_samples = 0;
  std::uint64_t seed = 0;
  /// `classes` is taken from the spec above.
  NoiseSpec noise;

  void validate() const;
};

struct SyntheticData {
  FeatureMatrix features;
  std::vector<int> true_labels;
  std::vector<int> noisy_labels;
  FeatureMatrix test_features;
  std::vector<int> test_labels;
};

/// Gaussian clusters with labels assigned round-robin (sample i has class
/// i mod C), then corrupted by the noise spec.
[[nodiscard]] SyntheticData generate_synthetic(const SyntheticSpec &spec);

} // namespace mixclean

#endif // MIXCLEAN_SYNTHETIC_HPP
