#ifndef MIXCLEAN_IO_HPP
#define MIXCLEAN_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixclean/multinomial.hpp"
#include "mixclean/neighborhood.hpp"

namespace mixclean {

// File formats
//
//   features     headerless CSV, one row per sample, d columns
//   labels       one zero-based integer per line
//   posteriors   headerless CSV, M rows x C columns
//   label sets   headerless CSV, L rows x C non-negative integer counts with
//                a common row sum N
//
// Doubles are written in the shortest decimal form that parses back to the
// same value, so write -> read -> write reproduces the bytes. Blank lines are
// ignored on input. Parse errors carry "path:line:".

/// Shortest round-trip decimal representation.
[[nodiscard]] std::string format_double(double value);

[[nodiscard]] std::string read_text(const std::filesystem::path &path);

/// Write to a sibling temporary file, then rename over `path`.
void write_text_atomic(const std::filesystem::path &path,
                       std::string_view content);

[[nodiscard]] FeatureMatrix read_features(const std::filesystem::path &path);
[[nodiscard]] std::string format_features(const FeatureMatrix &features);
void write_features(const std::filesystem::path &path,
                    const FeatureMatrix &features);

[[nodiscard]] std::vector<int> read_labels(const std::filesystem::path &path);
[[nodiscard]] std::string format_labels(std::span<const int> labels);
void write_labels(const std::filesystem::path &path,
                  std::span<const int> labels);

[[nodiscard]] std::vector<ProbabilityVector>
read_posteriors(const std::filesystem::path &path);
[[nodiscard]] std::string
format_posteriors(std::span<const ProbabilityVector> posteriors);
void write_posteriors(const std::filesystem::path &path,
                      std::span<const ProbabilityVector> posteriors);

/// Rejects an empty file ("L = 0"), ragged rows and rows whose sums differ.
[[nodiscard]] std::vector<CountVector>
read_label_sets(const std::filesystem::path &path);
[[nodiscard]] std::string format_label_sets(std::span<const CountVector> sets);
void write_label_sets(const std::filesystem::path &path,
                      std::span<const CountVector> sets);

} // namespace mixclean

#endif // MIXCLEAN_IO_HPP
