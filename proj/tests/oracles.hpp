// Brute-force reference implementations. Deliberately naive: linear-space
// arithmetic, exhaustive enumeration, textbook formulas. Nothing here calls
// the library's numerical routines.
#ifndef MIXCLEAN_TESTS_ORACLES_HPP
#define MIXCLEAN_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>; // row-major

/// All count vectors of length c summing to n.
inline std::vector<std::vector<int>> count_vectors(int c, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(c), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == c - 1) {
      cur[static_cast<std::size_t>(pos)] = left;
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, n);
  return out;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i)
    f *= i;
  return f;
}

/// N! / prod x! * prod p^x, in linear space.
inline double multinomial_pmf(const std::vector<int> &x, const Vec &p) {
  int n = 0;
  double v = 1.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    n += x[c];
    v *= std::pow(p[c], x[c]) / factorial(x[c]);
  }
  return v * factorial(n);
}

/// columns[c] is component c's category distribution.
inline double mixture_pmf(const std::vector<int> &x, const Vec &pi,
                          const Mat &columns) {
  double s = 0.0;
  for (std::size_t c = 0; c < pi.size(); ++c)
    s += pi[c] * multinomial_pmf(x, columns[c]);
  return s;
}

/// gamma[l][c] = pi_c Mult(x_l; rho_c) / sum_c' (...), in linear space.
inline Mat e_step(const std::vector<std::vector<int>> &labels, const Vec &pi,
                  const Mat &columns) {
  Mat g;
  for (const auto &x : labels) {
    Vec row(pi.size());
    double z = 0.0;
    for (std::size_t c = 0; c < pi.size(); ++c) {
      row[c] = pi[c] * multinomial_pmf(x, columns[c]);
      z += row[c];
    }
    for (double &v : row)
      v /= z;
    g.push_back(row);
  }
  return g;
}

struct Params {
  Vec pi;
  Mat columns;
};

/// pi_c = (1/L) sum_l g_lc;  rho_c[k] = sum_l g_lc x_lk / (N sum_l g_lc).
inline Params m_step_mle(const std::vector<std::vector<int>> &labels,
                         const Mat &g, int n) {
  const std::size_t c_count = g.front().size();
  const double l_count = static_cast<double>(labels.size());
  Params p;
  for (std::size_t c = 0; c < c_count; ++c) {
    double w = 0.0;
    for (std::size_t l = 0; l < labels.size(); ++l)
      w += g[l][c];
    p.pi.push_back(w / l_count);
    Vec col(labels.front().size());
    for (std::size_t k = 0; k < col.size(); ++k) {
      double num = 0.0;
      for (std::size_t l = 0; l < labels.size(); ++l)
        num += g[l][c] * labels[l][k];
      col[k] = num / (n * w);
    }
    p.columns.push_back(col);
  }
  return p;
}

/// pi_c = (sum_l g_lc + a_c - 1) / (L + sum a - C);
/// rho_c[k] = (sum_l g_lc x_lk + b_k - 1) / (N sum_l g_lc + sum b - C).
inline Params m_step_map(const std::vector<std::vector<int>> &labels,
                         const Mat &g, int n, const Vec &alpha,
                         const Vec &beta) {
  const std::size_t c_count = g.front().size();
  const double l_count = static_cast<double>(labels.size());
  const double sa = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  const double sb = std::accumulate(beta.begin(), beta.end(), 0.0);
  const double cc = static_cast<double>(c_count);
  Params p;
  for (std::size_t c = 0; c < c_count; ++c) {
    double w = 0.0;
    for (std::size_t l = 0; l < labels.size(); ++l)
      w += g[l][c];
    p.pi.push_back((w + alpha[c] - 1.0) / (l_count + sa - cc));
    Vec col(labels.front().size());
    for (std::size_t k = 0; k < col.size(); ++k) {
      double num = 0.0;
      for (std::size_t l = 0; l < labels.size(); ++l)
        num += g[l][c] * labels[l][k];
      col[k] = (num + beta[k] - 1.0) / (n * w + sb - cc);
    }
    p.columns.push_back(col);
  }
  return p;
}

/// ||pi_a - pi_b[s]||_1 + ||rho_a - rho_b[:, s]||_F minimised over all
/// permutations s; returns (distance, best permutation).
inline std::pair<double, std::vector<std::size_t>>
aligned_distance(const Params &a, const Params &b) {
  const std::size_t n = a.pi.size();
  std::vector<std::size_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  double best = INFINITY;
  std::vector<std::size_t> arg = s;
  do {
    double l1 = 0.0;
    double fro = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      l1 += std::abs(a.pi[c] - b.pi[s[c]]);
      for (std::size_t k = 0; k < n; ++k) {
        const double d = a.columns[c][k] - b.columns[s[c]][k];
        fro += d * d;
      }
    }
    const double v = l1 + std::sqrt(fro);
    if (v < best) {
      best = v;
      arg = s;
    }
  } while (std::next_permutation(s.begin(), s.end()));
  return {best, arg};
}

/// Minimum-cost assignment by trying every permutation.
inline double assignment_cost(const Vec &cost, std::size_t n) {
  std::vector<std::size_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  double best = INFINITY;
  do {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      v += cost[i * n + s[i]];
    best = std::min(best, v);
  } while (std::next_permutation(s.begin(), s.end()));
  return best;
}

/// Rows sorted by (squared distance, index); query excluded.
inline std::vector<std::size_t> knn(const Mat &points, std::size_t query,
                                    std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j == query)
      continue;
    double d = 0.0;
    for (std::size_t t = 0; t < points[j].size(); ++t) {
      const double e = points[j][t] - points[query][t];
      d += e * e;
    }
    all.emplace_back(d, j);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(all[i].second);
  return out;
}

/// Euclidean projection onto the simplex (Held-Wolfe-Crowder: sort
/// descending, find the largest prefix with a positive shifted entry).
inline Vec project_simplex(const Vec &v) {
  Vec u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double tau = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0)
      tau = t;
  }
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::max(0.0, v[i] - tau);
  return out;
}

/// ||x - sum_j a_j b_j||^2 + lambda sum_j (exp(||x - b_j|| / sigma) a_j)^2.
inline double llc_objective(const Vec &x, const Mat &b, const Vec &a,
                            double lambda, double sigma) {
  Vec r = x;
  double pen = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    double dist = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      r[t] -= a[j] * b[j][t];
      dist += (x[t] - b[j][t]) * (x[t] - b[j][t]);
    }
    const double dj = std::exp(std::sqrt(dist) / sigma);
    pen += dj * dj * a[j] * a[j];
  }
  double s = 0.0;
  for (double v : r)
    s += v * v;
  return s + lambda * pen;
}

/// Accelerated projected gradient on the LLC objective, up to `max_steps`
/// iterations, stopping early once an iterate is a fixed point of the
/// projected step. Works with the explicit residual form, not the Gram
/// matrix.
inline Vec llc_projected_gradient(const Vec &x, const Mat &b, double lambda,
                                  double sigma, long max_steps = 1000000) {
  const std::size_t k = b.size();
  const std::size_t d = x.size();
  Vec dsq(k);
  for (std::size_t j = 0; j < k; ++j) {
    double dist = 0.0;
    for (std::size_t t = 0; t < d; ++t)
      dist += (x[t] - b[j][t]) * (x[t] - b[j][t]);
    const double dj = std::exp(std::sqrt(dist) / sigma);
    dsq[j] = dj * dj;
  }
  auto grad = [&](const Vec &a) {
    Vec r = x;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t t = 0; t < d; ++t)
        r[t] -= a[j] * b[j][t];
    Vec g(k);
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < d; ++t)
        s += b[j][t] * r[t];
      g[j] = -2.0 * s + 2.0 * lambda * dsq[j] * a[j];
    }
    return g;
  };
  // Lipschitz constant of the gradient: 2 (||B||_2^2 + lambda max d^2),
  // bounded by the Frobenius norm.
  double lip = 0.0;
  for (const auto &row : b)
    for (double v : row)
      lip += v * v;
  lip = 2.0 * (lip + lambda * *std::max_element(dsq.begin(), dsq.end()));
  const double step = 1.0 / std::max(lip, 1e-300);

  Vec a(k, 1.0 / static_cast<double>(k));
  Vec y = a;
  double t = 1.0;
  double best_f = llc_objective(x, b, a, lambda, sigma);
  Vec best = a;
  for (long it = 0; it < max_steps; ++it) {
    const Vec g = grad(y);
    Vec z(k);
    for (std::size_t j = 0; j < k; ++j)
      z[j] = y[j] - step * g[j];
    const Vec next = project_simplex(z);
    const double f = llc_objective(x, b, next, lambda, sigma);
    if (f < best_f) {
      best_f = f;
      best = next;
    }
    double move = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      move = std::max(move, std::abs(next[j] - a[j]));
    // Restart momentum when the objective goes up.
    const double tn = f > llc_objective(x, b, a, lambda, sigma)
                          ? 1.0
                          : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t j = 0; j < k; ++j)
      y[j] = next[j] + ((t - 1.0) / tn) * (next[j] - a[j]);
    t = tn;
    a = next;
    if (move < 1e-14 && it > 100)
      break;
  }
  return best;
}

/// Pearson chi-square statistic for observed counts against probabilities.
inline double chi_square(const std::vector<long> &observed, const Vec &p) {
  long n = 0;
  for (long o : observed)
    n += o;
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = static_cast<double>(n) * p[i];
    s += (static_cast<double>(observed[i]) - e) *
         (static_cast<double>(observed[i]) - e) / e;
  }
  return s;
}

/// Upper 0.1% critical value of chi-square with `df` degrees of freedom
/// (Wilson-Hilferty approximation).
inline double chi_square_critical_999(int df) {
  const double z = 3.090232306; // standard normal 0.999 quantile
  const double k = df;
  const double h = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - h + z * std::sqrt(h), 3.0);
}

} // namespace oracle

#endif // MIXCLEAN_TESTS_ORACLES_HPP
