#include "mixclean/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mixclean/em.hpp"
#include "mixclean/error.hpp"

namespace mixclean {
namespace {

void check_mu(double mu) {
  require(mu >= 0.0 && mu <= 1.0, "mu must lie in [0, 1]");
}

void check_weights(const CodingVector &weights, std::size_t neighbours) {
  if (weights.weights.size() != neighbours)
    fail(ErrorCode::Validation,
         "coding vector has " + std::to_string(weights.weights.size()) +
             " weights for " + std::to_string(neighbours) + " neighbours");
}

} // namespace

std::size_t NoisyLabelDistribution::classes() const {
  if (kind == Kind::CategoricalForm)
    return categorical.size();
  return components.empty() ? 0 : components.front().second.classes();
}

std::size_t NoisyLabelDistribution::component_count() const {
  if (kind == Kind::CategoricalForm)
    return 1;
  std::size_t total = 0;
  for (const auto &[w, params] : components)
    total += params.classes();
  return total;
}

ProbabilityVector NoisyLabelDistribution::marginal() const {
  if (kind == Kind::CategoricalForm)
    return categorical;
  std::vector<double> out(classes(), 0.0);
  for (const auto &[w, params] : components) {
    const ProbabilityVector m = params.marginal();
    for (std::size_t r = 0; r < out.size(); ++r)
      out[r] += w * m[r];
  }
  return ProbabilityVector(std::move(out));
}

void NoisyLabelDistribution::validate() const {
  if (kind == Kind::CategoricalForm) {
    require(categorical.size() >= 1, "categorical form needs a distribution");
    return;
  }
  require(!components.empty(), "mixture form needs components");
  double total = 0.0;
  for (const auto &[w, params] : components) {
    require(w >= 0.0, "mixture form: negative component weight");
    require(params.classes() == classes(),
            "mixture form: components disagree on C");
    total += w;
  }
  require(std::abs(total - 1.0) <= kSimplexTolerance,
          "mixture form: weights do not sum to 1");
}

NoisyLabelDistribution approximate_noisy_distribution_full(
    const MixtureParams &self_params,
    std::span<const MixtureParams> neighbour_params,
    const CodingVector &weights, double mu) {
  check_mu(mu);
  check_weights(weights, neighbour_params.size());
  NoisyLabelDistribution out;
  out.kind = NoisyLabelDistribution::Kind::MixtureForm;
  out.components.reserve(neighbour_params.size() + 1);
  out.components.emplace_back(mu, self_params);
  for (std::size_t j = 0; j < neighbour_params.size(); ++j) {
    if (neighbour_params[j].classes() != self_params.classes())
      fail(ErrorCode::Validation, "approximate_noisy_distribution_full: "
                                  "neighbour " + std::to_string(j) +
                                      " has a different class count");
    out.components.emplace_back((1.0 - mu) * weights.weights[j],
                                neighbour_params[j]);
  }
  out.validate();
  return out;
}

NoisyLabelDistribution approximate_noisy_distribution_simplified(
    const ProbabilityVector &self_posterior,
    std::span<const ProbabilityVector> neighbour_posteriors,
    const CodingVector &weights, double mu) {
  check_mu(mu);
  check_weights(weights, neighbour_posteriors.size());
  const std::size_t n = self_posterior.size();
  std::vector<double> blend(n);
  for (std::size_t c = 0; c < n; ++c)
    blend[c] = mu * self_posterior[c];
  for (std::size_t j = 0; j < neighbour_posteriors.size(); ++j) {
    if (neighbour_posteriors[j].size() != n)
      fail(ErrorCode::Validation, "approximate_noisy_distribution_simplified: "
                                  "neighbour " + std::to_string(j) +
                                      " has a different class count");
    const double w = (1.0 - mu) * weights.weights[j];
    for (std::size_t c = 0; c < n; ++c)
      blend[c] += w * neighbour_posteriors[j][c];
  }
  NoisyLabelDistribution out;
  out.kind = NoisyLabelDistribution::Kind::CategoricalForm;
  out.categorical = ProbabilityVector(std::move(blend));
  return out;
}

std::vector<CountVector> sample_label_sets(const NoisyLabelDistribution &dist,
                                           int trials, int sets, Rng &rng,
                                           std::vector<std::string> *warnings) {
  require(trials >= 1, "sample_label_sets: N must be >= 1");
  require(sets >= 1, "sample_label_sets: L must be >= 1");
  dist.validate();
  const std::size_t n = dist.classes();
  if (warnings != nullptr)
    if (auto w = identifiability_warning(static_cast<int>(n), trials))
      warnings->push_back(*w);

  std::vector<CountVector> out;
  out.reserve(static_cast<std::size_t>(sets));
  if (dist.kind == NoisyLabelDistribution::Kind::CategoricalForm) {
    const CategoricalSampler draw(dist.categorical.values());
    for (int l = 0; l < sets; ++l) {
      std::vector<int> counts(n, 0);
      for (int t = 0; t < trials; ++t)
        ++counts[draw(rng)];
      out.emplace_back(std::move(counts));
    }
    return out;
  }

  // Flatten to (K + 1) * C components: weight w_j * pi_jc, column rho_jc.
  std::vector<double> flat_weights;
  std::vector<const ProbabilityVector *> columns;
  flat_weights.reserve(dist.component_count());
  columns.reserve(dist.component_count());
  for (const auto &[w, params] : dist.components)
    for (std::size_t c = 0; c < n; ++c) {
      flat_weights.push_back(w * params.pi[c]);
      columns.push_back(&params.rho.column(c));
    }
  const CategoricalSampler pick(flat_weights);
  std::vector<std::optional<CategoricalSampler>> column_samplers(columns.size());
  for (int l = 0; l < sets; ++l) {
    const std::size_t k = pick(rng);
    if (!column_samplers[k])
      column_samplers[k].emplace(columns[k]->values());
    std::vector<int> counts(n, 0);
    for (int t = 0; t < trials; ++t)
      ++counts[(*column_samplers[k])(rng)];
    out.emplace_back(std::move(counts));
  }
  return out;
}

// ---------------------------------------------------------------------------

void NoiseSpec::validate() const {
  require(rate >= 0.0 && rate < 1.0, "noise rate must lie in [0, 1)");
  require(classes >= 2, "noise injection needs at least two classes");
}

std::vector<int> inject_noise(std::span<const int> clean_labels,
                              const FeatureMatrix &features,
                              const NoiseSpec &spec) {
  spec.validate();
  const int n = spec.classes;
  for (std::size_t i = 0; i < clean_labels.size(); ++i)
    if (clean_labels[i] < 0 || clean_labels[i] >= n)
      fail(ErrorCode::Validation, "inject_noise: label " +
                                      std::to_string(clean_labels[i]) +
                                      " at row " + std::to_string(i) +
                                      " outside [0, C)");
  std::vector<int> out(clean_labels.begin(), clean_labels.end());
  if (spec.rate == 0.0)
    return out;
  Rng rng(spec.seed);

  switch (spec.kind) {
  case NoiseKind::Symmetric:
    for (int &label : out)
      if (rng.uniform() < spec.rate)
        label = static_cast<int>(
            (static_cast<std::uint64_t>(label) + 1 +
             rng.below(static_cast<std::uint64_t>(n - 1))) %
            static_cast<std::uint64_t>(n));
    return out;
  case NoiseKind::Asymmetric:
    for (int &label : out)
      if (rng.uniform() < spec.rate)
        label = (label + 1) % n;
    return out;
  case NoiseKind::InstanceDependent:
    break;
  }

  const std::size_t m = clean_labels.size();
  require(features.rows() == m,
          "inject_noise: feature rows do not match label count");
  const std::size_t d = features.dim();
  const auto cn = static_cast<std::size_t>(n);
  std::vector<double> projection;
  if (spec.projection) {
    require(spec.projection->size() == d * cn,
            "inject_noise: projection must be d x C");
    projection = *spec.projection;
  } else {
    projection.resize(d * cn);
    for (double &w : projection)
      w = rng.normal();
  }

  std::vector<double> propensity(m);
  std::vector<int> target(m);
  std::vector<double> draws(m);
  std::vector<double> logits(cn);
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = features.row(i);
    for (std::size_t c = 0; c < cn; ++c) {
      double z = 0.0;
      for (std::size_t r = 0; r < d; ++r)
        z += x[r] * projection[r * cn + c];
      logits[c] = z;
    }
    const double lse = log_sum_exp(logits);
    std::vector<double> others(cn);
    for (std::size_t c = 0; c < cn; ++c)
      others[c] = std::exp(logits[c] - lse);
    const auto own = static_cast<std::size_t>(clean_labels[i]);
    propensity[i] = 1.0 - others[own];
    others[own] = 0.0;
    double rest = 0.0;
    for (double v : others)
      rest += v;
    if (rest > 0.0)
      target[i] = static_cast<int>(rng.categorical(others));
    else
      target[i] = static_cast<int>((own + 1 + rng.below(cn - 1)) % cn);
    draws[i] = rng.uniform();
  }

  const auto wanted = static_cast<std::size_t>(
      std::llround(spec.rate * static_cast<double>(m)));
  auto flips_at = [&](double scale) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < m; ++i)
      count += draws[i] < std::min(1.0, scale * propensity[i]) ? 1 : 0;
    return count;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (flips_at(hi) < wanted && hi < 1e12)
    hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (flips_at(mid) < wanted)
      lo = mid;
    else
      hi = mid;
  }
  for (std::size_t i = 0; i < m; ++i)
    if (draws[i] < std::min(1.0, hi * propensity[i]))
      out[i] = target[i];
  return out;
}

// ---------------------------------------------------------------------------

NonIdentifiabilityReport nonidentifiability_demo() {
  NonIdentifiabilityReport r;
  r.transition_a = TransitionMatrix::from_rows(
      {{0.8, 0.1, 0.2}, {0.15, 0.6, 0.3}, {0.05, 0.3, 0.5}});
  r.prior_a = ProbabilityVector({2.0 / 11.0, 13.0 / 22.0, 5.0 / 22.0});
  r.transition_b = TransitionMatrix::from_rows(
      {{0.7, 0.2, 0.1}, {0.1, 0.6, 0.1}, {0.2, 0.2, 0.8}});
  r.prior_b = ProbabilityVector({2.0 / 15.0, 7.0 / 10.0, 1.0 / 6.0});
  r.marginal_a = MixtureParams(r.prior_a, r.transition_a, 1).marginal();
  r.marginal_b = MixtureParams(r.prior_b, r.transition_b, 1).marginal();
  for (std::size_t i = 0; i < 3; ++i)
    r.gap = std::max(r.gap, std::abs(r.marginal_a[i] - r.marginal_b[i]));
  return r;
}

} // namespace mixclean
