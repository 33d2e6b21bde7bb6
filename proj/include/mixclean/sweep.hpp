#ifndef MIXCLEAN_SWEEP_HPP
#define MIXCLEAN_SWEEP_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixclean/em.hpp"
#include "mixclean/multinomial.hpp"
#include "mixclean/rng.hpp"

namespace mixclean {

/// Grid for the recovery experiment. Every (C, N, L, rep) cell draws a ground
/// truth, samples L label sets of N trials, and fits EM from `inits` starting
/// points. Ground truth depends only on (C, rep), so cells that differ in N or
/// L are paired.
struct SweepConfig {
  std::vector<int> classes{2};
  std::vector<int> trials{1, 3};
  std::vector<int> sets{2000};
  int reps = 20;
  /// Init 0 is the diagonally dominant start; the rest are random.
  int inits = 3;
  int heldout_sets = 2000;
  /// Transition columns are (1 - s) e_c + s Dir(1) with s ~ U[0, max_noise].
  double max_noise = 0.5;
  EmMode mode = EmMode::MLE;
  int max_iters = 1000;
  double tol = 1e-8;
  double init_smoothing = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SweepRow {
  int classes = 0;
  int trials = 0;
  int sets = 0;
  int rep = 0;
  int bound = 0;
  /// Aligned distance from the diagonally dominant fit to the truth.
  double recovery_error = 0.0;
  /// Whether that alignment is the identity permutation.
  bool identity_alignment = false;
  /// Largest pairwise aligned distance between the fits from all inits.
  double disagreement = 0.0;
  /// max - min over inits of the mean held-out log-likelihood per label set;
  /// infinite when some fit assigns a held-out set zero probability.
  double heldout_ll_spread = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// pi = (Dir(1) + uniform) / 2; column c = (1 - s) e_c + s Dir(1).
[[nodiscard]] MixtureParams random_diagonal_truth(int classes, int trials,
                                                  double max_noise, Rng &rng);

[[nodiscard]] SweepRow run_sweep_cell(const SweepConfig &config, int classes,
                                      int trials, int sets, int rep);

/// All cells in (C, N, L, rep) order.
[[nodiscard]] std::vector<SweepRow> run_sweep(const SweepConfig &config,
                                              unsigned threads = 1);

/// Decimal text, or "inf" for an infinite held-out spread.
[[nodiscard]] std::string format_spread(double spread);

/// Long-format CSV with a header line.
[[nodiscard]] std::string format_sweep_csv(std::span<const SweepRow> rows);

} // namespace mixclean

#endif // MIXCLEAN_SWEEP_HPP
