#ifndef MIXCLEAN_CLASSIFIER_HPP
#define MIXCLEAN_CLASSIFIER_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixclean/neighborhood.hpp"

namespace mixclean {

enum class ClassifierKind { SoftmaxRegression, NearestCentroid };

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::SoftmaxRegression;
  double learning_rate = 0.5;
  int steps = 200;
  double weight_decay = 1e-4;

  void validate() const;
};

/// Trained classifier. Features are standardized with the training mean and
/// standard deviation before the linear map or centroid distances.
struct ClassifierState {
  ClassifierKind kind = ClassifierKind::SoftmaxRegression;
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> weights;   // C x d, softmax regression
  std::vector<double> bias;      // C
  std::vector<double> centroids; // C x d, nearest centroid
  std::vector<std::string> warnings;

  /// Class scores: linear logits, or negative squared centroid distances.
  [[nodiscard]] std::vector<double> logits(std::span<const double> x) const;
  [[nodiscard]] int predict(std::span<const double> x) const;
  /// M x C matrix of logits; used as an evolving feature representation.
  [[nodiscard]] FeatureMatrix representation(const FeatureMatrix &features) const;
  [[nodiscard]] double accuracy(const FeatureMatrix &features,
                                std::span<const int> labels) const;
};

/// Fit on soft targets (row-major M x C, rows on the simplex). Softmax
/// regression runs full-batch gradient descent on the cross-entropy from a
/// small N(0, 0.01) initialization drawn from `seed`.
[[nodiscard]] ClassifierState train_classifier(const FeatureMatrix &features,
                                               std::span<const double> targets,
                                               std::size_t classes,
                                               const ClassifierSpec &spec,
                                               std::uint64_t seed);

/// One-hot targets from hard labels.
[[nodiscard]] std::vector<double> one_hot_targets(std::span<const int> labels,
                                                  std::size_t classes);

} // namespace mixclean

#endif // MIXCLEAN_CLASSIFIER_HPP
