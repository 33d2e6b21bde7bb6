#ifndef MIXCLEAN_TESTS_HELPERS_HPP
#define MIXCLEAN_TESTS_HELPERS_HPP

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "mixclean/multinomial.hpp"
#include "mixclean/rng.hpp"
#include "oracles.hpp"

namespace testing {

inline std::vector<double> random_simplex(std::size_t n, mixclean::Rng &rng,
                                          double shape = 1.0) {
  std::vector<double> v(n);
  double s = 0.0;
  for (double &x : v) {
    x = rng.gamma(shape) + 1e-3;
    s += x;
  }
  for (double &x : v)
    x /= s;
  return v;
}

inline mixclean::MixtureParams random_params(std::size_t c, int trials,
                                             mixclean::Rng &rng) {
  std::vector<mixclean::ProbabilityVector> cols;
  for (std::size_t k = 0; k < c; ++k)
    cols.emplace_back(random_simplex(c, rng));
  return {mixclean::ProbabilityVector(random_simplex(c, rng)),
          mixclean::TransitionMatrix(std::move(cols)), trials};
}

inline oracle::Params to_oracle(const mixclean::MixtureParams &p) {
  oracle::Params o;
  o.pi.assign(p.pi.values().begin(), p.pi.values().end());
  for (const auto &col : p.rho.columns())
    o.columns.emplace_back(col.values().begin(), col.values().end());
  return o;
}

inline std::vector<std::vector<int>>
to_oracle(const std::vector<mixclean::CountVector> &labels) {
  std::vector<std::vector<int>> out;
  for (const auto &x : labels)
    out.emplace_back(x.counts().begin(), x.counts().end());
  return out;
}

inline std::vector<mixclean::CountVector>
draw_labels(const mixclean::MixtureParams &p, int sets, mixclean::Rng &rng) {
  std::vector<mixclean::CountVector> out;
  for (int l = 0; l < sets; ++l)
    out.push_back(mixclean::sample_multinomial(
        p.rho.column(rng.categorical(p.pi.values())), p.trials, rng));
  return out;
}

inline double max_abs_diff(const std::vector<double> &a,
                           const std::vector<double> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mixclean_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace testing

#endif // MIXCLEAN_TESTS_HELPERS_HPP
