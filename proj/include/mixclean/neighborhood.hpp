#ifndef MIXCLEAN_NEIGHBORHOOD_HPP
#define MIXCLEAN_NEIGHBORHOOD_HPP

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mixclean {

/// Dense row-major M x d matrix of finite feature values.
class FeatureMatrix {
public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim, std::vector<double> data);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  /// Copy of the listed rows, in order.
  [[nodiscard]] FeatureMatrix select(std::span<const std::size_t> rows) const;
  [[nodiscard]] FeatureMatrix scaled(double factor) const;

  friend bool operator==(const FeatureMatrix &, const FeatureMatrix &) = default;

private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

struct NeighborSet {
  std::vector<std::size_t> indices;
  /// Euclidean, non-decreasing.
  std::vector<double> distances;
};

/// Non-negative weights summing to one.
struct CodingVector {
  std::vector<double> weights;
};

[[nodiscard]] double squared_distance(std::span<const double> a,
                                      std::span<const double> b) noexcept;

/// Exact K nearest rows to row `query` (itself excluded), ties broken by the
/// lower row index. Requires K < M.
[[nodiscard]] NeighborSet knn_search(const FeatureMatrix &features,
                                     std::size_t query, std::size_t k);

/// Same search restricted to `candidates` (the query is skipped if listed).
[[nodiscard]] NeighborSet knn_search_among(const FeatureMatrix &features,
                                           std::size_t query,
                                           std::span<const std::size_t> candidates,
                                           std::size_t k);

struct LlcOptions {
  double lambda = 0.0;
  double sigma = 1.0;
  int max_iters = 10000;
  double kkt_tol = 1e-7;
};

struct LlcSolution {
  CodingVector coding;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Locality-constrained linear coding restricted to the simplex:
///
///   min_a ||x - B^T a||^2 + lambda * ||d (.) a||^2,  1^T a = 1, a >= 0,
///   d_j = exp(||x - b_j|| / sigma),
///
/// where the rows of `neighbours` are the b_j. On the simplex the residual
/// equals sum_j a_j (x - b_j), so the problem is the quadratic a^T Q a with
/// Q = Z^T Z + lambda diag(d)^2 and z_j = x - b_j. A ridge of 1e-10 times the
/// mean diagonal of Q keeps it strictly convex.
///
/// Solved with a primal active-set method: each step minimizes over the
/// affine hull of the free set in closed form (y = Q_F^{-1} 1 / 1^T Q_F^{-1} 1)
/// and either steps to the first blocking bound or releases the bound with
/// the most negative multiplier.
[[nodiscard]] LlcSolution llc_solve_detailed(std::span<const double> x,
                                             const FeatureMatrix &neighbours,
                                             const LlcOptions &options = {});

[[nodiscard]] CodingVector llc_solve(std::span<const double> x,
                                     const FeatureMatrix &neighbours,
                                     double lambda = 0.0, double sigma = 1.0);

/// ||x - B^T a||^2 + lambda ||d (.) a||^2 evaluated directly.
[[nodiscard]] double llc_objective(std::span<const double> x,
                                   const FeatureMatrix &neighbours,
                                   std::span<const double> a, double lambda,
                                   double sigma);

/// Euclidean projection onto the probability simplex (sort-based).
[[nodiscard]] std::vector<double> project_to_simplex(std::span<const double> v);

/// kNN followed by LLC on the neighbours of row i.
[[nodiscard]] std::pair<NeighborSet, CodingVector>
similarity_row(const FeatureMatrix &features, std::size_t i, std::size_t k,
               double lambda = 0.0, double sigma = 1.0);

} // namespace mixclean

#endif // MIXCLEAN_NEIGHBORHOOD_HPP
