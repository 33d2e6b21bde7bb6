#include "mixclean/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "mixclean/error.hpp"
#include "mixclean/rng.hpp"

namespace mixclean {
namespace {

constexpr std::uint64_t kCenterTag = 1;
constexpr std::uint64_t kTrainTag = 2;
constexpr std::uint64_t kTestTag = 3;

std::vector<double> class_centers(const SyntheticSpec &spec) {
  const auto c = static_cast<std::size_t>(spec.classes);
  std::vector<double> centers(c * spec.dim, 0.0);
  if (spec.layout == ClusterLayout::Circle) {
    for (std::size_t k = 0; k < c; ++k) {
      const double angle =
          2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(c);
      centers[k * spec.dim] = spec.separation * std::cos(angle);
      centers[k * spec.dim + 1] = spec.separation * std::sin(angle);
    }
  } else {
    Rng rng = Rng::stream(spec.seed, kCenterTag);
    for (double &v : centers)
      v = spec.separation * rng.normal();
  }
  return centers;
}

FeatureMatrix draw_points(const SyntheticSpec &spec,
                          const std::vector<double> &centers, std::size_t m,
                          std::vector<int> &labels, Rng &rng) {
  std::vector<double> data(m * spec.dim);
  labels.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = i % static_cast<std::size_t>(spec.classes);
    labels[i] = static_cast<int>(k);
    for (std::size_t j = 0; j < spec.dim; ++j)
      data[i * spec.dim + j] =
          centers[k * spec.dim + j] + spec.spread * rng.normal();
  }
  return FeatureMatrix(m, spec.dim, std::move(data));
}

} // namespace

void SyntheticSpec::validate() const {
  require(classes >= 2, "synthetic: classes must be >= 2");
  require(samples >= static_cast<std::size_t>(classes),
          "synthetic: need at least one sample per class");
  require(dim >= 1, "synthetic: dim must be >= 1");
  require(layout != ClusterLayout::Circle || dim >= 2,
          "synthetic: circle layout needs dim >= 2");
  require(std::isfinite(separation) && separation >= 0.0,
          "synthetic: separation must be finite and >= 0");
  require(std::isfinite(spread) && spread > 0.0,
          "synthetic: spread must be positive");
  NoiseSpec n = noise;
  n.classes = classes;
  n.validate();
}

SyntheticData generate_synthetic(const SyntheticSpec &spec) {
  spec.validate();
  const std::vector<double> centers = class_centers(spec);
  SyntheticData out;
  Rng train_rng = Rng::stream(spec.seed, kTrainTag);
  out.features =
      draw_points(spec, centers, spec.samples, out.true_labels, train_rng);
  if (spec.test_samples > 0) {
    Rng test_rng = Rng::stream(spec.seed, kTestTag);
    out.test_features =
        draw_points(spec, centers, spec.test_samples, out.test_labels, test_rng);
  }
  NoiseSpec noise = spec.noise;
  noise.classes = spec.classes;
  out.noisy_labels = inject_noise(out.true_labels, out.features, noise);
  return out;
}

} // namespace mixclean
