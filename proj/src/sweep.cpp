#include "mixclean/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "mixclean/error.hpp"
#include "mixclean/io.hpp"
#include "mixclean/parallel.hpp"

namespace mixclean {
namespace {

constexpr std::uint64_t kTruthTag = 1;
constexpr std::uint64_t kLabelTag = 2;
constexpr std::uint64_t kHeldoutTag = 3;
constexpr std::uint64_t kInitTag = 4;

std::vector<double> dirichlet_ones(std::size_t n, Rng &rng) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double &x : v) {
    x = rng.gamma(1.0);
    sum += x;
  }
  for (double &x : v)
    x /= sum;
  return v;
}

MixtureParams random_params(std::size_t c, int trials, Rng &rng) {
  std::vector<ProbabilityVector> cols;
  cols.reserve(c);
  ProbabilityVector pi(dirichlet_ones(c, rng));
  for (std::size_t k = 0; k < c; ++k)
    cols.emplace_back(dirichlet_ones(c, rng));
  return MixtureParams(std::move(pi), TransitionMatrix(std::move(cols)), trials);
}

std::vector<CountVector> draw_sets(const MixtureParams &truth, int sets,
                                   Rng &rng) {
  const CategoricalSampler pick(truth.pi.values());
  std::vector<CountVector> out;
  out.reserve(static_cast<std::size_t>(sets));
  for (int l = 0; l < sets; ++l)
    out.push_back(sample_multinomial(truth.rho.column(pick(rng)), truth.trials, rng));
  return out;
}

double mean_log_likelihood(std::span<const CountVector> sets,
                           const MixtureParams &params) {
  double s = 0.0;
  for (const auto &x : sets)
    s += mixture_log_likelihood(x, params);
  return s / static_cast<double>(sets.size());
}

std::uint64_t cell_key(int a, int b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

} // namespace

void SweepConfig::validate() const {
  require(!classes.empty() && !trials.empty() && !sets.empty(),
          "sweep: classes, trials and sets must be non-empty");
  for (int c : classes)
    require(c >= 2, "sweep: classes must be >= 2");
  for (int n : trials)
    require(n >= 1, "sweep: trials must be >= 1");
  for (int l : sets)
    require(l >= 1, "sweep: sets must be >= 1");
  require(reps >= 1, "sweep: reps must be >= 1");
  require(inits >= 1, "sweep: inits must be >= 1");
  require(heldout_sets >= 1, "sweep: heldout_sets must be >= 1");
  require(max_noise >= 0.0 && max_noise <= 0.5,
          "sweep: max_noise must lie in [0, 0.5]");
  require(max_iters >= 1, "sweep: max_iters must be >= 1");
  require(tol > 0.0, "sweep: tol must be positive");
  require(init_smoothing > 0.0 && init_smoothing < 1.0,
          "sweep: init_smoothing must lie in (0, 1)");
}

MixtureParams random_diagonal_truth(int classes, int trials, double max_noise,
                                    Rng &rng) {
  const auto c = static_cast<std::size_t>(classes);
  std::vector<double> pi = dirichlet_ones(c, rng);
  for (double &v : pi)
    v = 0.5 * v + 0.5 / static_cast<double>(c);
  std::vector<ProbabilityVector> cols;
  cols.reserve(c);
  for (std::size_t k = 0; k < c; ++k) {
    const double s = max_noise * rng.uniform();
    std::vector<double> col = dirichlet_ones(c, rng);
    for (double &v : col)
      v *= s;
    col[k] += 1.0 - s;
    cols.emplace_back(std::move(col));
  }
  return MixtureParams(ProbabilityVector(std::move(pi)),
                       TransitionMatrix(std::move(cols)), trials);
}

SweepRow run_sweep_cell(const SweepConfig &config, int classes, int trials,
                        int sets, int rep) {
  const auto c = static_cast<std::size_t>(classes);
  const auto r = static_cast<std::uint64_t>(rep);
  SweepRow row;
  row.classes = classes;
  row.trials = trials;
  row.sets = sets;
  row.rep = rep;
  row.bound = identifiability_bound(classes);

  Rng truth_rng =
      Rng::stream(derive_seed(config.seed, kTruthTag, cell_key(classes, 0)), r);
  const MixtureParams truth =
      random_diagonal_truth(classes, trials, config.max_noise, truth_rng);

  const std::uint64_t cell =
      derive_seed(config.seed, cell_key(classes, trials), static_cast<std::uint64_t>(sets));
  Rng label_rng = Rng::stream(cell, kLabelTag, r);
  const std::vector<CountVector> labels = draw_sets(truth, sets, label_rng);
  Rng heldout_rng = Rng::stream(cell, kHeldoutTag, r);
  const std::vector<CountVector> heldout =
      draw_sets(truth, config.heldout_sets, heldout_rng);

  const DirichletPriors priors =
      DirichletPriors::symmetric(c, kDefaultAlpha, kDefaultBeta);
  EmConfig em;
  em.mode = config.mode;
  em.max_iters = config.max_iters;
  em.tol = config.tol;

  std::vector<MixtureParams> fits;
  std::vector<double> heldout_ll;
  for (int k = 0; k < config.inits; ++k) {
    MixtureParams init;
    if (k == 0) {
      init = MixtureParams(ProbabilityVector::uniform(c),
                           TransitionMatrix::smoothed_identity(c, config.init_smoothing),
                           trials);
    } else {
      Rng init_rng = Rng::stream(cell, kInitTag, cell_key(rep, k));
      init = random_params(c, trials, init_rng);
    }
    EmResult fit = run_em(labels, init, priors, em);
    if (k == 0) {
      row.iterations = fit.iterations;
      row.converged = fit.converged;
    }
    heldout_ll.push_back(mean_log_likelihood(heldout, fit.params));
    fits.push_back(std::move(fit.params));
  }

  const AlignedDistance rec = permutation_aligned_distance(fits.front(), truth);
  row.recovery_error = rec.distance;
  row.identity_alignment = true;
  for (std::size_t k = 0; k < c; ++k)
    row.identity_alignment = row.identity_alignment && rec.permutation[k] == k;
  for (std::size_t a = 0; a < fits.size(); ++a)
    for (std::size_t b = a + 1; b < fits.size(); ++b)
      row.disagreement = std::max(
          row.disagreement, permutation_aligned_distance(fits[a], fits[b]).distance);
  // A fit that gives some held-out set zero probability cannot agree with
  // the others; its spread is reported as infinite.
  const bool finite = std::all_of(heldout_ll.begin(), heldout_ll.end(),
                                  [](double v) { return std::isfinite(v); });
  const auto [lo, hi] = std::minmax_element(heldout_ll.begin(), heldout_ll.end());
  row.heldout_ll_spread =
      finite ? *hi - *lo : std::numeric_limits<double>::infinity();
  return row;
}

std::vector<SweepRow> run_sweep(const SweepConfig &config, unsigned threads) {
  config.validate();
  std::vector<std::tuple<int, int, int, int>> cells;
  for (int c : config.classes)
    for (int n : config.trials)
      for (int l : config.sets)
        for (int rep = 0; rep < config.reps; ++rep)
          cells.emplace_back(c, n, l, rep);
  std::vector<SweepRow> rows(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const auto [c, n, l, rep] = cells[i];
    rows[i] = run_sweep_cell(config, c, n, l, rep);
  });
  return rows;
}

std::string format_spread(double spread) {
  return std::isinf(spread) ? "inf" : format_double(spread);
}

std::string format_sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "classes,trials,sets,rep,bound,identifiable,recovery_error,"
                    "identity_alignment,disagreement,heldout_ll_spread,"
                    "iterations,converged\n";
  for (const SweepRow &r : rows) {
    out += std::to_string(r.classes) + ',' + std::to_string(r.trials) + ',' +
           std::to_string(r.sets) + ',' + std::to_string(r.rep) + ',' +
           std::to_string(r.bound) + ',' + (r.trials >= r.bound ? "1" : "0") +
           ',' + format_double(r.recovery_error) + ',' +
           (r.identity_alignment ? "1" : "0") + ',' +
           format_double(r.disagreement) + ',' +
           format_spread(r.heldout_ll_spread) + ',' +
           std::to_string(r.iterations) + ',' + (r.converged ? "1" : "0") + '\n';
  }
  return out;
}

} // namespace mixclean
