#include "mixclean/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "mixclean/error.hpp"
#include "mixclean/multinomial.hpp"
#include "mixclean/rng.hpp"

namespace mixclean {

void ClassifierSpec::validate() const {
  if (kind == ClassifierKind::SoftmaxRegression) {
    require(steps >= 1, "classifier: steps must be >= 1");
    require(learning_rate > 0.0, "classifier: learning_rate must be positive");
  }
  require(weight_decay >= 0.0, "classifier: weight_decay must be >= 0");
}

std::vector<double> one_hot_targets(std::span<const int> labels,
                                    std::size_t classes) {
  std::vector<double> out(labels.size() * classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < classes,
            "label outside [0, C)");
    out[i * classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return out;
}

std::vector<double> ClassifierState::logits(std::span<const double> x) const {
  std::vector<double> z(dim);
  for (std::size_t r = 0; r < dim; ++r)
    z[r] = (x[r] - mean[r]) / scale[r];
  std::vector<double> out(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (kind == ClassifierKind::SoftmaxRegression) {
      double s = bias[c];
      for (std::size_t r = 0; r < dim; ++r)
        s += weights[c * dim + r] * z[r];
      out[c] = s;
    } else {
      double s = 0.0;
      for (std::size_t r = 0; r < dim; ++r) {
        const double d = z[r] - centroids[c * dim + r];
        s += d * d;
      }
      out[c] = -s;
    }
  }
  return out;
}

int ClassifierState::predict(std::span<const double> x) const {
  const auto z = logits(x);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

FeatureMatrix ClassifierState::representation(const FeatureMatrix &features) const {
  std::vector<double> out;
  out.reserve(features.rows() * classes);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto z = logits(features.row(i));
    out.insert(out.end(), z.begin(), z.end());
  }
  return {features.rows(), classes, std::move(out)};
}

double ClassifierState::accuracy(const FeatureMatrix &features,
                                 std::span<const int> labels) const {
  require(features.rows() == labels.size(), "accuracy: size mismatch");
  if (labels.empty())
    return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    hits += predict(features.row(i)) == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

ClassifierState train_classifier(const FeatureMatrix &features,
                                 std::span<const double> targets,
                                 std::size_t classes, const ClassifierSpec &spec,
                                 std::uint64_t seed) {
  spec.validate();
  const std::size_t m = features.rows();
  const std::size_t d = features.dim();
  require(m >= 1, "classifier: no training rows");
  require(classes >= 1, "classifier: need at least one class");
  require(targets.size() == m * classes, "classifier: target shape mismatch");

  ClassifierState st;
  st.kind = spec.kind;
  st.classes = classes;
  st.dim = d;
  st.mean.assign(d, 0.0);
  st.scale.assign(d, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < d; ++r)
      st.mean[r] += features.row(i)[r];
  for (double &v : st.mean)
    v /= static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < d; ++r) {
      const double dv = features.row(i)[r] - st.mean[r];
      st.scale[r] += dv * dv;
    }
  for (double &v : st.scale) {
    v = std::sqrt(v / static_cast<double>(m));
    if (!(v > 1e-12))
      v = 1.0;
  }
  std::vector<double> z(m * d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < d; ++r)
      z[i * d + r] = (features.row(i)[r] - st.mean[r]) / st.scale[r];

  if (spec.kind == ClassifierKind::NearestCentroid) {
    st.centroids.assign(classes * d, 0.0);
    std::vector<double> mass(classes, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < classes; ++c) {
        const double w = targets[i * classes + c];
        mass[c] += w;
        for (std::size_t r = 0; r < d; ++r)
          st.centroids[c * d + r] += w * z[i * d + r];
      }
    for (std::size_t c = 0; c < classes; ++c) {
      if (mass[c] > 0.0) {
        for (std::size_t r = 0; r < d; ++r)
          st.centroids[c * d + r] /= mass[c];
      } else {
        // Standardized global mean is the origin.
        for (std::size_t r = 0; r < d; ++r)
          st.centroids[c * d + r] = 0.0;
        st.warnings.push_back("class " + std::to_string(c) +
                              " has no training samples; centroid set to the "
                              "global mean");
      }
    }
    return st;
  }

  Rng rng(seed);
  st.weights.resize(classes * d);
  for (double &w : st.weights)
    w = 0.01 * rng.normal();
  st.bias.assign(classes, 0.0);

  std::vector<double> grad_w(classes * d);
  std::vector<double> grad_b(classes);
  std::vector<double> logit(classes);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (int step = 0; step < spec.steps; ++step) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double *zi = z.data() + i * d;
      for (std::size_t c = 0; c < classes; ++c) {
        double s = st.bias[c];
        for (std::size_t r = 0; r < d; ++r)
          s += st.weights[c * d + r] * zi[r];
        logit[c] = s;
      }
      const double lse = log_sum_exp(logit);
      for (std::size_t c = 0; c < classes; ++c) {
        const double err = std::exp(logit[c] - lse) - targets[i * classes + c];
        grad_b[c] += err;
        for (std::size_t r = 0; r < d; ++r)
          grad_w[c * d + r] += err * zi[r];
      }
    }
    for (std::size_t k = 0; k < grad_w.size(); ++k)
      st.weights[k] -= spec.learning_rate *
                       (grad_w[k] * inv_m + spec.weight_decay * st.weights[k]);
    for (std::size_t c = 0; c < classes; ++c)
      st.bias[c] -= spec.learning_rate * grad_b[c] * inv_m;
  }
  return st;
}

} // namespace mixclean
