#include "mixclean/multinomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mixclean/assignment.hpp"
#include "mixclean/error.hpp"

namespace mixclean {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kExhaustiveLimit = 8;

void check_same_size(std::size_t a, std::size_t b, const char *what) {
  if (a != b)
    fail(ErrorCode::Validation,
         std::string(what) + ": dimension mismatch (" + std::to_string(a) +
             " vs " + std::to_string(b) + ")");
}

} // namespace

// ---------------------------------------------------------------------------
// ProbabilityVector

ProbabilityVector::ProbabilityVector(std::vector<double> values)
    : values_(std::move(values)) {
  require(!values_.empty(), "probability vector must be non-empty");
  double sum = 0.0;
  for (double &v : values_) {
    if (!std::isfinite(v))
      fail(ErrorCode::Validation, "probability vector has a non-finite entry");
    if (v < 0.0) {
      if (v < -kSimplexTolerance)
        fail(ErrorCode::Validation,
             "probability vector has a negative entry " + std::to_string(v));
      v = 0.0;
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    fail(ErrorCode::Validation,
         "probability vector sums to " + std::to_string(sum) + ", not 1");
  if (sum != 1.0)
    for (double &v : values_)
      v /= sum;
}

ProbabilityVector ProbabilityVector::uniform(std::size_t classes) {
  require(classes >= 1, "uniform: need at least one class");
  return ProbabilityVector(
      std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

ProbabilityVector ProbabilityVector::one_hot(std::size_t classes,
                                             std::size_t hot) {
  return smoothed_one_hot(classes, hot, 0.0);
}

ProbabilityVector ProbabilityVector::smoothed_one_hot(std::size_t classes,
                                                      std::size_t hot,
                                                      double eps) {
  require(hot < classes, "one_hot: index out of range");
  require(eps >= 0.0 && eps <= 1.0, "smoothing must lie in [0, 1]");
  std::vector<double> v(classes, eps / static_cast<double>(classes));
  v[hot] += 1.0 - eps;
  return ProbabilityVector(std::move(v));
}

std::size_t ProbabilityVector::argmax() const noexcept {
  return static_cast<std::size_t>(
      std::max_element(values_.begin(), values_.end()) - values_.begin());
}

// ---------------------------------------------------------------------------
// CountVector

CountVector::CountVector(std::vector<int> counts) : counts_(std::move(counts)) {
  require(!counts_.empty(), "count vector must be non-empty");
  long total = 0;
  for (int c : counts_) {
    if (c < 0)
      fail(ErrorCode::Validation, "count vector has a negative count");
    total += c;
  }
  require(total >= 1, "count vector must record at least one trial");
  trials_ = static_cast<int>(total);
}

// ---------------------------------------------------------------------------
// TransitionMatrix

TransitionMatrix::TransitionMatrix(std::vector<ProbabilityVector> columns)
    : columns_(std::move(columns)) {
  require(!columns_.empty(), "transition matrix must have columns");
  for (const auto &col : columns_)
    check_same_size(col.size(), columns_.size(), "transition matrix");
}

TransitionMatrix TransitionMatrix::identity(std::size_t classes) {
  return smoothed_identity(classes, 0.0);
}

TransitionMatrix TransitionMatrix::smoothed_identity(std::size_t classes,
                                                     double eps) {
  std::vector<ProbabilityVector> cols;
  cols.reserve(classes);
  for (std::size_t c = 0; c < classes; ++c)
    cols.push_back(ProbabilityVector::smoothed_one_hot(classes, c, eps));
  return TransitionMatrix(std::move(cols));
}

TransitionMatrix
TransitionMatrix::from_rows(const std::vector<std::vector<double>> &rows) {
  const std::size_t n = rows.size();
  std::vector<ProbabilityVector> cols;
  cols.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) {
      check_same_size(rows[r].size(), n, "transition matrix rows");
      col[r] = rows[r][c];
    }
    cols.emplace_back(std::move(col));
  }
  return TransitionMatrix(std::move(cols));
}

bool TransitionMatrix::is_diagonally_dominant() const noexcept {
  for (std::size_t c = 0; c < columns_.size(); ++c)
    for (std::size_t r = 0; r < columns_.size(); ++r)
      if (columns_[c][r] > columns_[c][c])
        return false;
  return true;
}

// ---------------------------------------------------------------------------
// MixtureParams

MixtureParams::MixtureParams(ProbabilityVector pi_, TransitionMatrix rho_,
                             int trials_)
    : pi(std::move(pi_)), rho(std::move(rho_)), trials(trials_) {
  check_same_size(pi.size(), rho.size(), "mixture params");
  require(trials >= 1, "mixture params: trials must be positive");
}

ProbabilityVector MixtureParams::marginal() const {
  const std::size_t n = classes();
  std::vector<double> out(n, 0.0);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < n; ++r)
      out[r] += pi[c] * rho(r, c);
  return ProbabilityVector(std::move(out));
}

// ---------------------------------------------------------------------------
// Sampling

CategoricalSampler::CategoricalSampler(std::span<const double> weights)
    : cdf_(weights.size()) {
  std::partial_sum(weights.begin(), weights.end(), cdf_.begin());
  require(!cdf_.empty() && cdf_.back() > 0.0,
          "categorical sampler needs positive total weight");
}

std::size_t CategoricalSampler::operator()(Rng &rng) const noexcept {
  const double target = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  if (it == cdf_.end())
    --it;
  // Skip zero-width bins that upper_bound can land on at the top edge.
  while (it != cdf_.begin() && *it == *(it - 1))
    --it;
  return static_cast<std::size_t>(it - cdf_.begin());
}

CountVector sample_multinomial(const ProbabilityVector &p, int trials,
                               Rng &rng) {
  require(trials >= 1, "sample_multinomial: trials must be >= 1");
  require(p.size() >= 1, "sample_multinomial: empty distribution");
  const CategoricalSampler draw(p.values());
  std::vector<int> counts(p.size(), 0);
  for (int t = 0; t < trials; ++t)
    ++counts[draw(rng)];
  return CountVector(std::move(counts));
}

// ---------------------------------------------------------------------------
// Densities

double log_sum_exp(std::span<const double> values) noexcept {
  if (values.empty())
    return kNegInf;
  const double hi = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(hi))
    return hi;
  double sum = 0.0;
  for (double v : values)
    sum += std::exp(v - hi);
  return hi + std::log(sum);
}

double log_multinomial_coefficient(const CountVector &x) {
  double out = std::lgamma(static_cast<double>(x.trials()) + 1.0);
  for (int c : x.counts())
    out -= std::lgamma(static_cast<double>(c) + 1.0);
  return out;
}

double multinomial_log_pmf(const CountVector &x, const ProbabilityVector &p) {
  check_same_size(x.size(), p.size(), "multinomial_log_pmf");
  double out = log_multinomial_coefficient(x);
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (x[c] == 0)
      continue;
    if (p[c] <= 0.0)
      return kNegInf;
    out += x[c] * std::log(p[c]);
  }
  return out;
}

double mixture_log_likelihood(const CountVector &x,
                              const MixtureParams &params) {
  check_same_size(x.size(), params.classes(), "mixture_log_likelihood");
  if (x.trials() != params.trials)
    fail(ErrorCode::Validation, "mixture_log_likelihood: trial count mismatch");
  std::vector<double> terms(params.classes());
  for (std::size_t c = 0; c < terms.size(); ++c) {
    const double w = params.pi[c];
    terms[c] = w > 0.0 ? std::log(w) + multinomial_log_pmf(x, params.rho.column(c))
                       : kNegInf;
  }
  return log_sum_exp(terms);
}

// ---------------------------------------------------------------------------
// Permutation alignment

double mixture_distance(const MixtureParams &a, const MixtureParams &b,
                        std::span<const std::size_t> permutation) {
  const std::size_t n = a.classes();
  check_same_size(n, b.classes(), "mixture_distance");
  check_same_size(n, permutation.size(), "mixture_distance permutation");
  double l1 = 0.0;
  double frob = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t m = permutation[c];
    l1 += std::abs(a.pi[c] - b.pi[m]);
    for (std::size_t r = 0; r < n; ++r) {
      const double d = a.rho(r, c) - b.rho(r, m);
      frob += d * d;
    }
  }
  return l1 + std::sqrt(frob);
}

AlignedDistance permutation_aligned_distance(const MixtureParams &a,
                                             const MixtureParams &b) {
  const std::size_t n = a.classes();
  check_same_size(n, b.classes(), "permutation_aligned_distance");
  if (a.trials != b.trials)
    fail(ErrorCode::Validation,
         "permutation_aligned_distance: trial count mismatch");

  AlignedDistance best;
  if (n <= kExhaustiveLimit) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    best.distance = std::numeric_limits<double>::infinity();
    do {
      const double d = mixture_distance(a, b, perm);
      if (d < best.distance) {
        best.distance = d;
        best.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }

  std::vector<double> cost(n * n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t m = 0; m < n; ++m) {
      double col = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = a.rho(r, c) - b.rho(r, m);
        col += d * d;
      }
      cost[c * n + m] = std::abs(a.pi[c] - b.pi[m]) + std::sqrt(col);
    }
  best.permutation = solve_linear_assignment(cost, n);
  best.distance = mixture_distance(a, b, best.permutation);
  return best;
}

} // namespace mixclean
