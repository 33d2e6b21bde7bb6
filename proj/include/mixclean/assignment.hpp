#ifndef MIXCLEAN_ASSIGNMENT_HPP
#define MIXCLEAN_ASSIGNMENT_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace mixclean {

// Hungarian algorithm (shortest augmenting path with potentials), O(n^3).
// `cost` is row-major n x n. Returns assignment[row] = column minimizing the
// total cost.
std::vector<std::size_t> solve_linear_assignment(std::span<const double> cost,
                                                 std::size_t n);

} // namespace mixclean

#endif // MIXCLEAN_ASSIGNMENT_HPP
