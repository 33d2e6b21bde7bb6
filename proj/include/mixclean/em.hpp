#ifndef MIXCLEAN_EM_HPP
#define MIXCLEAN_EM_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixclean/multinomial.hpp"

namespace mixclean {

/// L x C matrix of posterior class memberships, row-major.
class Responsibilities {
public:
  Responsibilities() = default;
  Responsibilities(std::size_t rows, std::size_t cols);
  /// Validates that every row lies on the simplex.
  Responsibilities(std::size_t rows, std::size_t cols, std::vector<double> data);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] double operator()(std::size_t l, std::size_t c) const {
    return data_[l * cols_ + c];
  }
  double &operator()(std::size_t l, std::size_t c) {
    return data_[l * cols_ + c];
  }
  [[nodiscard]] std::span<const double> row(std::size_t l) const {
    return {data_.data() + l * cols_, cols_};
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dirichlet hyperparameters: alpha on the mixture weights and beta shared by
/// every transition column.
struct DirichletPriors {
  std::vector<double> alpha;
  std::vector<double> beta;

  DirichletPriors() = default;
  DirichletPriors(std::vector<double> alpha_, std::vector<double> beta_);

  [[nodiscard]] static DirichletPriors symmetric(std::size_t classes,
                                                 double alpha, double beta);
  /// Dir(1) on both; MAP then coincides with MLE.
  [[nodiscard]] static DirichletPriors flat(std::size_t classes);
};

inline constexpr double kDefaultAlpha = 20.0;
inline constexpr double kDefaultBeta = 5.0;

enum class EmMode { MLE, MAP };

struct EmConfig {
  EmMode mode = EmMode::MAP;
  int max_iters = 100;
  double tol = 1e-6;
  double min_prob_floor = 1e-8;
  /// Raise an Internal error when the objective decreases.
  bool check_monotone = true;

  void validate() const;
};

struct EmResult {
  MixtureParams params;
  int iterations = 0;
  /// objective_trace[0] is the objective at the initial parameters and
  /// objective_trace[t] the objective after iteration t.
  std::vector<double> objective_trace;
  bool converged = false;
  /// True when a MAP numerator had to be floored (prior entries below one).
  bool floored = false;
};

/// Posterior responsibilities, computed in log space per row.
/// Throws a Numerical error naming the row when a label set is impossible
/// under every component.
[[nodiscard]] Responsibilities e_step(std::span<const CountVector> labels,
                                     const MixtureParams &params);

/// Closed-form maximum-likelihood M-step. Components with zero total
/// responsibility get pi_c = 0 and keep their column from `previous`
/// (uniform when `previous` is null).
[[nodiscard]] MixtureParams m_step_mle(std::span<const CountVector> labels,
                                       const Responsibilities &gamma,
                                       const TransitionMatrix *previous = nullptr);

/// Closed-form MAP M-step under Dirichlet priors. Numerators that would be
/// negative are floored at `min_prob_floor` and the vector renormalized;
/// `floored`, when given, reports whether that happened.
[[nodiscard]] MixtureParams m_step_map(std::span<const CountVector> labels,
                                       const Responsibilities &gamma,
                                       const DirichletPriors &priors,
                                       double min_prob_floor = 1e-8,
                                       const TransitionMatrix *previous = nullptr,
                                       bool *floored = nullptr);

/// sum_l log p(labels_l) for MLE; for MAP additionally
/// log Dir(pi; alpha) + sum_c log Dir(rho_c; beta).
[[nodiscard]] double em_objective(std::span<const CountVector> labels,
                                  const MixtureParams &params, EmMode mode,
                                  const DirichletPriors &priors);

[[nodiscard]] double log_dirichlet_density(const ProbabilityVector &x,
                                           std::span<const double> alpha);

[[nodiscard]] EmResult run_em(std::span<const CountVector> labels,
                              const MixtureParams &init,
                              const DirichletPriors &priors,
                              const EmConfig &config);

/// Initial parameters: smoothed one-hot on `observed` for pi and the
/// smoothed identity for rho.
[[nodiscard]] MixtureParams smoothed_init(std::size_t classes,
                                          std::size_t observed, int trials,
                                          double eps = 0.05);

/// Blend arbitrary parameters with uniform: (1 - eps) * x + eps / C.
[[nodiscard]] MixtureParams smooth(const MixtureParams &params, double eps);

/// Minimum noisy labels per sample for a C-class multinomial mixture: 2C - 1.
[[nodiscard]] int identifiability_bound(int classes);
[[nodiscard]] bool is_identifiable(int classes, int trials);

/// 2 * ceil(log_{support}(K)) + 1 for a K-component mixture of categorical
/// distributions over `support_size` outcomes.
[[nodiscard]] int categorical_mixture_bound(int components, int support_size);

/// Warning text when `trials` is below the identifiability bound.
[[nodiscard]] std::optional<std::string> identifiability_warning(int classes,
                                                                 int trials);

} // namespace mixclean

#endif // MIXCLEAN_EM_HPP
