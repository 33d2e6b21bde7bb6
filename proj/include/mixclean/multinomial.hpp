#ifndef MIXCLEAN_MULTINOMIAL_HPP
#define MIXCLEAN_MULTINOMIAL_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "mixclean/rng.hpp"

namespace mixclean {

/// Absolute tolerance on the sum of a probability vector. Inputs within it
/// are renormalized, inputs outside it are rejected.
inline constexpr double kSimplexTolerance = 1e-9;

/// A point on the probability simplex.
class ProbabilityVector {
public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> values);

  [[nodiscard]] static ProbabilityVector uniform(std::size_t classes);
  [[nodiscard]] static ProbabilityVector one_hot(std::size_t classes,
                                                 std::size_t hot);
  /// (1 - eps) * one_hot(hot) + eps / C.
  [[nodiscard]] static ProbabilityVector
  smoothed_one_hot(std::size_t classes, std::size_t hot, double eps);

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const noexcept {
    return values_;
  }
  /// Lowest index attaining the maximum.
  [[nodiscard]] std::size_t argmax() const noexcept;

  friend bool operator==(const ProbabilityVector &,
                         const ProbabilityVector &) = default;

private:
  std::vector<double> values_;
};

/// Outcome of one N-trial multinomial draw.
class CountVector {
public:
  CountVector() = default;
  explicit CountVector(std::vector<int> counts);

  [[nodiscard]] std::size_t size() const noexcept { return counts_.size(); }
  [[nodiscard]] int operator[](std::size_t i) const { return counts_[i]; }
  [[nodiscard]] int trials() const noexcept { return trials_; }
  [[nodiscard]] std::span<const int> counts() const noexcept {
    return counts_;
  }

  friend bool operator==(const CountVector &, const CountVector &) = default;

private:
  std::vector<int> counts_;
  int trials_ = 0;
};

/// Column-stochastic C x C matrix; column c is p(noisy | clean = c).
class TransitionMatrix {
public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(std::vector<ProbabilityVector> columns);

  [[nodiscard]] static TransitionMatrix identity(std::size_t classes);
  /// (1 - eps) * I + (eps / C) * 11^T. Diagonally dominant for eps < 1.
  [[nodiscard]] static TransitionMatrix smoothed_identity(std::size_t classes,
                                                          double eps);
  /// Build from row-major entries (row = noisy label, column = clean label).
  [[nodiscard]] static TransitionMatrix
  from_rows(const std::vector<std::vector<double>> &rows);

  [[nodiscard]] std::size_t size() const noexcept { return columns_.size(); }
  [[nodiscard]] const ProbabilityVector &column(std::size_t c) const {
    return columns_[c];
  }
  [[nodiscard]] const std::vector<ProbabilityVector> &columns() const noexcept {
    return columns_;
  }
  /// Entry (noisy, clean).
  [[nodiscard]] double operator()(std::size_t noisy, std::size_t clean) const {
    return columns_[clean][noisy];
  }
  [[nodiscard]] bool is_diagonally_dominant() const noexcept;

  friend bool operator==(const TransitionMatrix &,
                         const TransitionMatrix &) = default;

private:
  std::vector<ProbabilityVector> columns_;
};

/// Parameters of an N-trial multinomial mixture with C components.
struct MixtureParams {
  ProbabilityVector pi;
  TransitionMatrix rho;
  int trials = 1;

  MixtureParams() = default;
  MixtureParams(ProbabilityVector pi_, TransitionMatrix rho_, int trials_);

  [[nodiscard]] std::size_t classes() const noexcept { return pi.size(); }
  /// Distribution of a single noisy label: rho * pi.
  [[nodiscard]] ProbabilityVector marginal() const;

  friend bool operator==(const MixtureParams &,
                         const MixtureParams &) = default;
};

/// Inverse-CDF table for repeated draws from one categorical distribution.
class CategoricalSampler {
public:
  explicit CategoricalSampler(std::span<const double> weights);
  std::size_t operator()(Rng &rng) const noexcept;

private:
  std::vector<double> cdf_;
};

[[nodiscard]] double log_sum_exp(std::span<const double> values) noexcept;

/// log(N! / prod x_c!).
[[nodiscard]] double log_multinomial_coefficient(const CountVector &x);

/// Log-pmf of Mult(x; N, p). Returns -inf when some p_c = 0 with x_c > 0.
[[nodiscard]] double multinomial_log_pmf(const CountVector &x,
                                         const ProbabilityVector &p);

/// log sum_c pi_c Mult(x; N, rho_c), evaluated with log-sum-exp.
[[nodiscard]] double mixture_log_likelihood(const CountVector &x,
                                            const MixtureParams &params);

[[nodiscard]] CountVector sample_multinomial(const ProbabilityVector &p,
                                             int trials, Rng &rng);

struct AlignedDistance {
  double distance = 0.0;
  /// permutation[c] is the component of `b` matched to component c of `a`.
  std::vector<std::size_t> permutation;
};

/// Component-wise cost used for the permutation search:
/// L1 on mixture weights plus Frobenius on the transition columns.
[[nodiscard]] double mixture_distance(const MixtureParams &a,
                                      const MixtureParams &b,
                                      std::span<const std::size_t> permutation);

/// Minimum of mixture_distance over component permutations of `b`.
/// Exhaustive for C <= 8; above that the permutation comes from a linear
/// assignment on per-component costs and the reported distance is the exact
/// cost of that permutation.
[[nodiscard]] AlignedDistance
permutation_aligned_distance(const MixtureParams &a, const MixtureParams &b);

} // namespace mixclean

#endif // MIXCLEAN_MULTINOMIAL_HPP
