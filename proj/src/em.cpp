#include "mixclean/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixclean/error.hpp"

namespace mixclean {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_labels(std::span<const CountVector> labels, std::size_t classes,
                  int trials, const char *what) {
  if (labels.empty())
    fail(ErrorCode::Validation, std::string(what) + ": L = 0 label sets");
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (labels[l].size() != classes)
      fail(ErrorCode::Validation, std::string(what) + ": label set " +
                                      std::to_string(l) +
                                      " has the wrong number of classes");
    if (labels[l].trials() != trials)
      fail(ErrorCode::Validation, std::string(what) + ": label set " +
                                      std::to_string(l) + " has " +
                                      std::to_string(labels[l].trials()) +
                                      " trials, expected " +
                                      std::to_string(trials));
  }
}

// log pi_c + sum_r x_r log rho_rc for each component; the multinomial
// coefficient is shared by all components and left out.
struct LogParams {
  std::size_t classes;
  std::vector<double> log_pi;
  std::vector<double> log_rho; // [clean * C + noisy]

  explicit LogParams(const MixtureParams &p)
      : classes(p.classes()), log_pi(classes), log_rho(classes * classes) {
    for (std::size_t c = 0; c < classes; ++c) {
      log_pi[c] = p.pi[c] > 0.0 ? std::log(p.pi[c]) : kNegInf;
      for (std::size_t r = 0; r < classes; ++r) {
        const double v = p.rho(r, c);
        log_rho[c * classes + r] = v > 0.0 ? std::log(v) : kNegInf;
      }
    }
  }

  void scores(const CountVector &x, std::span<double> out) const {
    for (std::size_t c = 0; c < classes; ++c) {
      double s = log_pi[c];
      if (s == kNegInf) {
        out[c] = kNegInf;
        continue;
      }
      const double *lr = log_rho.data() + c * classes;
      for (std::size_t r = 0; r < classes; ++r) {
        if (x[r] == 0)
          continue;
        if (lr[r] == kNegInf) {
          s = kNegInf;
          break;
        }
        s += x[r] * lr[r];
      }
      out[c] = s;
    }
  }
};

// Responsibility totals and gamma-weighted counts shared by both M-steps.
struct Sufficient {
  std::vector<double> weight;   // sum_l gamma_lc
  std::vector<double> weighted; // [clean * C + noisy] sum_l gamma_lc x_l,noisy
};

Sufficient accumulate(std::span<const CountVector> labels,
                      const Responsibilities &gamma) {
  const std::size_t n = gamma.cols();
  Sufficient s{std::vector<double>(n, 0.0), std::vector<double>(n * n, 0.0)};
  for (std::size_t l = 0; l < labels.size(); ++l) {
    for (std::size_t c = 0; c < n; ++c) {
      const double g = gamma(l, c);
      if (g == 0.0)
        continue;
      s.weight[c] += g;
      for (std::size_t r = 0; r < n; ++r)
        s.weighted[c * n + r] += g * labels[l][r];
    }
  }
  return s;
}

void check_gamma(std::span<const CountVector> labels,
                 const Responsibilities &gamma, const char *what) {
  if (labels.empty())
    fail(ErrorCode::Validation, std::string(what) + ": L = 0 label sets");
  if (gamma.rows() != labels.size())
    fail(ErrorCode::Validation,
         std::string(what) + ": responsibilities have " +
             std::to_string(gamma.rows()) + " rows for " +
             std::to_string(labels.size()) + " label sets");
  check_labels(labels, gamma.cols(), labels.front().trials(), what);
}

ProbabilityVector previous_or_uniform(const TransitionMatrix *previous,
                                      std::size_t c, std::size_t n) {
  if (previous != nullptr && previous->size() == n)
    return previous->column(c);
  return ProbabilityVector::uniform(n);
}

class NeumaierSum {
public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Floors non-positive numerators and renormalizes.
// Zero entries are floored too: once the path is taken every entry is
// kept strictly positive.
std::vector<double> floor_and_normalize(std::vector<double> v, double floor,
                                        bool &floored) {
  double sum = 0.0;
  for (double &x : v) {
    if (!(x > 0.0)) {
      x = floor;
      floored = true;
    }
    sum += x;
  }
  for (double &x : v)
    x /= sum;
  return v;
}

double squared_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

} // namespace

// ---------------------------------------------------------------------------

Responsibilities::Responsibilities(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Responsibilities::Responsibilities(std::size_t rows, std::size_t cols,
                                   std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, "responsibilities: wrong data size");
  for (std::size_t l = 0; l < rows; ++l) {
    double sum = 0.0;
    for (double v : row(l)) {
      require(v >= 0.0 && v <= 1.0, "responsibilities: entry outside [0, 1]");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= kSimplexTolerance,
            "responsibilities: row " + std::to_string(l) + " does not sum to 1");
  }
}

DirichletPriors::DirichletPriors(std::vector<double> alpha_,
                                 std::vector<double> beta_)
    : alpha(std::move(alpha_)), beta(std::move(beta_)) {
  require(!alpha.empty() && alpha.size() == beta.size(),
          "priors: alpha and beta must have the same positive length");
  for (double a : alpha)
    require(std::isfinite(a) && a > 0.0, "priors: alpha must be positive");
  for (double b : beta)
    require(std::isfinite(b) && b > 0.0, "priors: beta must be positive");
}

DirichletPriors DirichletPriors::symmetric(std::size_t classes, double alpha,
                                           double beta) {
  return {std::vector<double>(classes, alpha), std::vector<double>(classes, beta)};
}

DirichletPriors DirichletPriors::flat(std::size_t classes) {
  return symmetric(classes, 1.0, 1.0);
}

void EmConfig::validate() const {
  require(max_iters >= 1, "em: max_iters must be >= 1");
  require(tol > 0.0, "em: tol must be positive");
  require(min_prob_floor > 0.0 && min_prob_floor < 1.0,
          "em: min_prob_floor must lie in (0, 1)");
}

// ---------------------------------------------------------------------------

Responsibilities e_step(std::span<const CountVector> labels,
                        const MixtureParams &params) {
  const std::size_t n = params.classes();
  check_labels(labels, n, params.trials, "e_step");
  const LogParams lp(params);
  Responsibilities gamma(labels.size(), n);
  std::vector<double> s(n);
  for (std::size_t l = 0; l < labels.size(); ++l) {
    lp.scores(labels[l], s);
    const double hi = *std::max_element(s.begin(), s.end());
    if (hi == kNegInf)
      fail(ErrorCode::Numerical,
           "e_step: label set " + std::to_string(l) +
               " has zero probability under every component");
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      s[c] = std::exp(s[c] - hi);
      sum += s[c];
    }
    for (std::size_t c = 0; c < n; ++c)
      gamma(l, c) = s[c] / sum;
  }
  return gamma;
}

MixtureParams m_step_mle(std::span<const CountVector> labels,
                         const Responsibilities &gamma,
                         const TransitionMatrix *previous) {
  check_gamma(labels, gamma, "m_step_mle");
  const std::size_t n = gamma.cols();
  const int trials = labels.front().trials();
  const Sufficient s = accumulate(labels, gamma);
  const double count = static_cast<double>(labels.size());

  std::vector<double> pi(n);
  std::vector<ProbabilityVector> cols;
  cols.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    pi[c] = s.weight[c] / count;
    if (s.weight[c] <= 0.0) {
      pi[c] = 0.0;
      cols.push_back(previous_or_uniform(previous, c, n));
      continue;
    }
    const double denom = trials * s.weight[c];
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r)
      col[r] = s.weighted[c * n + r] / denom;
    cols.emplace_back(std::move(col));
  }
  return {ProbabilityVector(std::move(pi)), TransitionMatrix(std::move(cols)),
          trials};
}

MixtureParams m_step_map(std::span<const CountVector> labels,
                         const Responsibilities &gamma,
                         const DirichletPriors &priors, double min_prob_floor,
                         const TransitionMatrix *previous, bool *floored) {
  check_gamma(labels, gamma, "m_step_map");
  const std::size_t n = gamma.cols();
  require(priors.alpha.size() == n && priors.beta.size() == n,
          "m_step_map: prior dimension mismatch");
  const int trials = labels.front().trials();
  const Sufficient s = accumulate(labels, gamma);
  const auto cn = static_cast<double>(n);
  bool hit_floor = false;

  // Prior constants are grouped first so that Dir(1) priors contribute an
  // exact zero.
  double alpha_excess = 0.0;
  for (double a : priors.alpha)
    alpha_excess += a;
  alpha_excess -= cn;
  double beta_excess = 0.0;
  for (double b : priors.beta)
    beta_excess += b;
  beta_excess -= cn;

  std::vector<double> pi(n);
  bool pi_negative = false;
  const double pi_denom = static_cast<double>(labels.size()) + alpha_excess;
  for (std::size_t c = 0; c < n; ++c) {
    pi[c] = (s.weight[c] + (priors.alpha[c] - 1.0)) / pi_denom;
    pi_negative = pi_negative || !(pi[c] >= 0.0);
  }
  if (pi_negative || !(pi_denom > 0.0)) {
    for (std::size_t c = 0; c < n; ++c)
      pi[c] = s.weight[c] + (priors.alpha[c] - 1.0);
    pi = floor_and_normalize(std::move(pi), min_prob_floor, hit_floor);
  }

  std::vector<ProbabilityVector> cols;
  cols.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double denom = trials * s.weight[c] + beta_excess;
    std::vector<double> col(n);
    bool negative = !(denom > 0.0);
    double numer_total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double numer = s.weighted[c * n + r] + (priors.beta[r] - 1.0);
      numer_total += numer;
      col[r] = numer / denom;
      negative = negative || !(numer >= 0.0);
    }
    if (numer_total <= 0.0 && s.weight[c] <= 0.0) {
      // 0/0: an empty component under a flat prior keeps its column.
      cols.push_back(previous_or_uniform(previous, c, n));
      continue;
    }
    if (negative) {
      for (std::size_t r = 0; r < n; ++r)
        col[r] = s.weighted[c * n + r] + (priors.beta[r] - 1.0);
      col = floor_and_normalize(std::move(col), min_prob_floor, hit_floor);
    }
    cols.emplace_back(std::move(col));
  }
  if (floored != nullptr)
    *floored = hit_floor;
  return {ProbabilityVector(std::move(pi)), TransitionMatrix(std::move(cols)),
          trials};
}

double log_dirichlet_density(const ProbabilityVector &x,
                             std::span<const double> alpha) {
  require(x.size() == alpha.size(), "dirichlet: dimension mismatch");
  double total = 0.0;
  double out = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    total += alpha[i];
    out -= std::lgamma(alpha[i]);
    if (alpha[i] == 1.0)
      continue;
    if (x[i] <= 0.0)
      return alpha[i] > 1.0 ? kNegInf : std::numeric_limits<double>::infinity();
    out += (alpha[i] - 1.0) * std::log(x[i]);
  }
  return out + std::lgamma(total);
}

double em_objective(std::span<const CountVector> labels,
                    const MixtureParams &params, EmMode mode,
                    const DirichletPriors &priors) {
  const std::size_t n = params.classes();
  check_labels(labels, n, params.trials, "em_objective");
  const LogParams lp(params);
  std::vector<double> s(n);
  // Compensated sums: with many label sets, plain accumulation error near
  // convergence exceeds the change between iterates.
  NeumaierSum mixture;
  NeumaierSum coefficients;
  for (const auto &x : labels) {
    lp.scores(x, s);
    mixture.add(log_sum_exp(s));
    coefficients.add(log_multinomial_coefficient(x));
  }
  double total = mixture.value() + coefficients.value();
  if (mode == EmMode::MAP) {
    total += log_dirichlet_density(params.pi, priors.alpha);
    for (std::size_t c = 0; c < n; ++c)
      total += log_dirichlet_density(params.rho.column(c), priors.beta);
  }
  return total;
}

EmResult run_em(std::span<const CountVector> labels, const MixtureParams &init,
                const DirichletPriors &priors, const EmConfig &config) {
  config.validate();
  const std::size_t n = init.classes();
  check_labels(labels, n, init.trials, "run_em");
  if (config.mode == EmMode::MAP)
    require(priors.alpha.size() == n && priors.beta.size() == n,
            "run_em: prior dimension mismatch");

  EmResult result;
  result.params = init;
  result.objective_trace.push_back(
      em_objective(labels, init, config.mode, priors));

  for (int it = 1; it <= config.max_iters; ++it) {
    const Responsibilities gamma = e_step(labels, result.params);
    bool floored = false;
    MixtureParams next =
        config.mode == EmMode::MLE
            ? m_step_mle(labels, gamma, &result.params.rho)
            : m_step_map(labels, gamma, priors, config.min_prob_floor,
                         &result.params.rho, &floored);
    result.floored = result.floored || floored;

    const double objective = em_objective(labels, next, config.mode, priors);
    const double previous = result.objective_trace.back();
    if (config.check_monotone && !floored && std::isfinite(previous) &&
        objective < previous - (1e-9 + 1e-13 * std::abs(previous)))
      fail(ErrorCode::Internal,
           "run_em: objective decreased from " + std::to_string(previous) +
               " to " + std::to_string(objective) + " at iteration " +
               std::to_string(it));

    double rho_sq = 0.0;
    for (std::size_t c = 0; c < n; ++c)
      rho_sq += squared_diff(next.rho.column(c).values(),
                             result.params.rho.column(c).values());
    const double pi_change =
        std::sqrt(squared_diff(next.pi.values(), result.params.pi.values()));
    const double rho_change = std::sqrt(rho_sq);

    result.params = std::move(next);
    result.objective_trace.push_back(objective);
    result.iterations = it;
    if (pi_change < config.tol && rho_change < config.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

MixtureParams smoothed_init(std::size_t classes, std::size_t observed,
                            int trials, double eps) {
  return {ProbabilityVector::smoothed_one_hot(classes, observed, eps),
          TransitionMatrix::smoothed_identity(classes, eps), trials};
}

MixtureParams smooth(const MixtureParams &params, double eps) {
  require(eps >= 0.0 && eps <= 1.0, "smooth: eps must lie in [0, 1]");
  const std::size_t n = params.classes();
  const double u = eps / static_cast<double>(n);
  auto blend = [&](const ProbabilityVector &p) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = (1.0 - eps) * p[i] + u;
    return ProbabilityVector(std::move(v));
  };
  std::vector<ProbabilityVector> cols;
  cols.reserve(n);
  for (const auto &col : params.rho.columns())
    cols.push_back(blend(col));
  return {blend(params.pi), TransitionMatrix(std::move(cols)), params.trials};
}

int identifiability_bound(int classes) {
  require(classes >= 1, "identifiability_bound: C must be >= 1");
  return 2 * classes - 1;
}

bool is_identifiable(int classes, int trials) {
  return trials >= identifiability_bound(classes);
}

int categorical_mixture_bound(int components, int support_size) {
  require(components >= 1, "categorical_mixture_bound: K must be >= 1");
  require(support_size >= 2, "categorical_mixture_bound: support must be >= 2");
  // Smallest k with support^k >= K, i.e. ceil(log_support K), in integers.
  int k = 0;
  long long power = 1;
  while (power < components) {
    power *= support_size;
    ++k;
  }
  return 2 * k + 1;
}

std::optional<std::string> identifiability_warning(int classes, int trials) {
  if (is_identifiable(classes, trials))
    return std::nullopt;
  return "N = " + std::to_string(trials) +
         " noisy labels per set is below the identifiability bound 2C - 1 = " +
         std::to_string(identifiability_bound(classes)) + " for C = " +
         std::to_string(classes);
}

} // namespace mixclean
