#include "mixclean/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "mixclean/error.hpp"

namespace mixclean {
namespace {

constexpr double kRidge = 1e-10;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

NeighborSet select_nearest(const FeatureMatrix &features, std::size_t query,
                           std::span<const std::size_t> candidates,
                           std::size_t k) {
  const auto q = features.row(query);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  for (std::size_t j : candidates) {
    if (j == query)
      continue;
    scored.emplace_back(squared_distance(q, features.row(j)), j);
  }
  if (k > scored.size())
    fail(ErrorCode::Validation,
         "knn_search: K = " + std::to_string(k) + " but only " +
             std::to_string(scored.size()) + " candidate rows");
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(k),
                    scored.end());
  NeighborSet out;
  out.indices.reserve(k);
  out.distances.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.indices.push_back(scored[i].second);
    out.distances.push_back(std::sqrt(scored[i].first));
  }
  return out;
}

struct Quadratic {
  Eigen::MatrixXd q; // includes the ridge
  double scale = 1.0; // 2 * mean diagonal, used to make residuals unitless
};

Quadratic build_quadratic(std::span<const double> x, const FeatureMatrix &nb,
                          double lambda, double sigma) {
  const auto k = static_cast<Eigen::Index>(nb.rows());
  const auto d = static_cast<Eigen::Index>(nb.dim());
  Eigen::MatrixXd z(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto b = nb.row(static_cast<std::size_t>(j));
    for (Eigen::Index r = 0; r < d; ++r)
      z(r, j) = x[static_cast<std::size_t>(r)] - b[static_cast<std::size_t>(r)];
  }
  Quadratic out;
  out.q = z.transpose() * z;
  if (lambda > 0.0) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double adaptor = std::exp(z.col(j).norm() / sigma);
      out.q(j, j) += lambda * adaptor * adaptor;
    }
  }
  const double mean_diag = out.q.diagonal().mean();
  const double ridge = mean_diag > 0.0 ? kRidge * mean_diag : kRidge;
  out.q.diagonal().array() += ridge;
  out.scale = 2.0 * (mean_diag > 0.0 ? mean_diag : 1.0);
  return out;
}

double kkt_residual(const Quadratic &quad, const Eigen::VectorXd &a) {
  const Eigen::VectorXd grad = 2.0 * (quad.q * a) / quad.scale;
  std::vector<double> shifted(static_cast<std::size_t>(a.size()));
  for (Eigen::Index j = 0; j < a.size(); ++j)
    shifted[static_cast<std::size_t>(j)] = a(j) - grad(j);
  const auto proj = project_to_simplex(shifted);
  double r = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j)
    r = std::max(r, std::abs(a(j) - proj[static_cast<std::size_t>(j)]));
  return r;
}

// Minimizer of y^T Q y over {1^T y = 1, y_i = 0 outside `free`}.
Eigen::VectorXd affine_minimizer(const Eigen::MatrixXd &q,
                                 const std::vector<Eigen::Index> &free) {
  const auto m = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      sub(i, j) = q(free[static_cast<std::size_t>(i)],
                    free[static_cast<std::size_t>(j)]);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(sub);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd w = ldlt.solve(ones);
  // Two rounds of iterative refinement for near-singular free sets.
  for (int round = 0; round < 2; ++round)
    w += ldlt.solve(ones - sub * w);
  const double total = w.sum();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(q.rows());
  for (Eigen::Index i = 0; i < m; ++i)
    y(free[static_cast<std::size_t>(i)]) = w(i) / total;
  return y;
}

} // namespace

// ---------------------------------------------------------------------------

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dim,
                             std::vector<double> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  require(data_.size() == rows * dim, "feature matrix: data size mismatch");
  require(all_finite(data_), "feature matrix: non-finite entry");
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
  std::vector<double> out;
  out.reserve(rows.size() * dim_);
  for (std::size_t r : rows) {
    require(r < rows_, "feature matrix: row index out of range");
    const auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return {rows.size(), dim_, std::move(out)};
}

FeatureMatrix FeatureMatrix::scaled(double factor) const {
  std::vector<double> out(data_);
  for (double &v : out)
    v *= factor;
  return {rows_, dim_, std::move(out)};
}

double squared_distance(std::span<const double> a,
                        std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

NeighborSet knn_search(const FeatureMatrix &features, std::size_t query,
                       std::size_t k) {
  require(query < features.rows(), "knn_search: query index out of range");
  if (k >= features.rows())
    fail(ErrorCode::Validation, "knn_search: K = " + std::to_string(k) +
                                    " must be smaller than M = " +
                                    std::to_string(features.rows()));
  std::vector<std::size_t> all(features.rows());
  std::iota(all.begin(), all.end(), 0);
  return select_nearest(features, query, all, k);
}

NeighborSet knn_search_among(const FeatureMatrix &features, std::size_t query,
                             std::span<const std::size_t> candidates,
                             std::size_t k) {
  require(query < features.rows(), "knn_search: query index out of range");
  for (std::size_t j : candidates)
    require(j < features.rows(), "knn_search: candidate out of range");
  return select_nearest(features, query, candidates, k);
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  require(!v.empty(), "project_to_simplex: empty vector");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - t > 0.0)
      theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

double llc_objective(std::span<const double> x, const FeatureMatrix &neighbours,
                     std::span<const double> a, double lambda, double sigma) {
  require(a.size() == neighbours.rows(), "llc_objective: size mismatch");
  std::vector<double> residual(x.begin(), x.end());
  double penalty = 0.0;
  for (std::size_t j = 0; j < neighbours.rows(); ++j) {
    const auto b = neighbours.row(j);
    for (std::size_t r = 0; r < residual.size(); ++r)
      residual[r] -= a[j] * b[r];
    if (lambda > 0.0) {
      const double adaptor = std::exp(std::sqrt(squared_distance(x, b)) / sigma);
      penalty += adaptor * adaptor * a[j] * a[j];
    }
  }
  double out = 0.0;
  for (double r : residual)
    out += r * r;
  return out + lambda * penalty;
}

LlcSolution llc_solve_detailed(std::span<const double> x,
                               const FeatureMatrix &neighbours,
                               const LlcOptions &options) {
  const std::size_t k = neighbours.rows();
  require(k >= 1, "llc_solve: need at least one neighbour");
  require(x.size() == neighbours.dim(), "llc_solve: dimension mismatch");
  require(options.lambda >= 0.0 && std::isfinite(options.lambda),
          "llc_solve: lambda must be non-negative");
  require(options.sigma > 0.0 && std::isfinite(options.sigma),
          "llc_solve: sigma must be positive");
  if (!all_finite(x) || !all_finite(neighbours.data()))
    fail(ErrorCode::Validation, "llc_solve: non-finite input");

  const Quadratic quad = build_quadratic(x, neighbours, options.lambda,
                                         options.sigma);
  const auto n = static_cast<Eigen::Index>(k);

  // Start at the best vertex.
  Eigen::Index start = 0;
  quad.q.diagonal().minCoeff(&start);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  a(start) = 1.0;
  std::vector<char> is_free(k, 0);
  is_free[static_cast<std::size_t>(start)] = 1;

  LlcSolution out;
  int it = 0;
  for (; it < options.max_iters; ++it) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < n; ++j)
      if (is_free[static_cast<std::size_t>(j)])
        free.push_back(j);
    const Eigen::VectorXd y = affine_minimizer(quad.q, free);

    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index j : free) {
      if (y(j) < 0.0) {
        const double limit = a(j) / (a(j) - y(j));
        if (limit < step) {
          step = limit;
          blocking = j;
        }
      }
    }

    if (blocking >= 0) {
      a += step * (y - a);
      a(blocking) = 0.0;
      is_free[static_cast<std::size_t>(blocking)] = 0;
      for (Eigen::Index j = 0; j < n; ++j)
        a(j) = std::max(a(j), 0.0);
      a /= a.sum();
      continue;
    }

    // Minimizer of the current face: release the most violated bound.
    a = y;
    const Eigen::VectorXd grad = 2.0 * (quad.q * a) / quad.scale;
    double nu = 0.0;
    for (Eigen::Index j : free)
      nu += grad(j);
    nu /= static_cast<double>(free.size());
    Eigen::Index release = -1;
    double most_negative = -1e-14;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (is_free[static_cast<std::size_t>(j)])
        continue;
      const double multiplier = grad(j) - nu;
      if (multiplier < most_negative) {
        most_negative = multiplier;
        release = j;
      }
    }
    if (release < 0)
      break;
    is_free[static_cast<std::size_t>(release)] = 1;
  }

  out.iterations = it;
  out.kkt_residual = kkt_residual(quad, a);
  if (it >= options.max_iters || !(out.kkt_residual < options.kkt_tol))
    fail(ErrorCode::Numerical,
         "llc_solve: no convergence after " + std::to_string(it) +
             " iterations, KKT residual " + std::to_string(out.kkt_residual));
  out.coding.weights.assign(a.data(), a.data() + a.size());
  out.objective = llc_objective(x, neighbours, out.coding.weights,
                                options.lambda, options.sigma);
  return out;
}

CodingVector llc_solve(std::span<const double> x,
                       const FeatureMatrix &neighbours, double lambda,
                       double sigma) {
  LlcOptions options;
  options.lambda = lambda;
  options.sigma = sigma;
  return llc_solve_detailed(x, neighbours, options).coding;
}

std::pair<NeighborSet, CodingVector>
similarity_row(const FeatureMatrix &features, std::size_t i, std::size_t k,
               double lambda, double sigma) {
  NeighborSet nb = knn_search(features, i, k);
  CodingVector coding =
      llc_solve(features.row(i), features.select(nb.indices), lambda, sigma);
  return {std::move(nb), std::move(coding)};
}

} // namespace mixclean
