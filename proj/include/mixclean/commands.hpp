#ifndef MIXCLEAN_COMMANDS_HPP
#define MIXCLEAN_COMMANDS_HPP

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>

#include "mixclean/config.hpp"
#include "mixclean/pipeline.hpp"

namespace mixclean {

inline constexpr const char *kVersion = "0.1.0";

/// Options shared by every command.
struct CommandContext {
  std::filesystem::path out = ".";
  /// Overrides the seed in the configuration when set.
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  /// Progress lines go here unless null.
  std::ostream *log = nullptr;
};

// Each command writes its artifacts plus `manifest.json` into `ctx.out` and
// returns the manifest. Artifacts never contain timings, so a replay
// reproduces them byte for byte; timings live in the manifest only.

/// nonidentifiability.json: both factorizations, their marginals and the
/// l-infinity gap. Throws a Numerical error (after writing) when the gap is
/// not below 1e-12.
RunManifest cmd_demo_nonidentifiability(const CommandContext &ctx);

/// fit.json: recovered pi and transition rows, objective trace, iteration
/// count and convergence flag.
RunManifest cmd_fit(const std::filesystem::path &labels, const Json &config,
                    const CommandContext &ctx);

/// sweep.csv: one row per (C, N, L, rep).
RunManifest cmd_identifiability_sweep(const Json &config,
                                      const CommandContext &ctx);

/// epochs.json, epochs.csv, posteriors.csv and pseudo_labels.csv.
RunManifest cmd_clean(const std::filesystem::path &data_dir, const Json &config,
                      const CommandContext &ctx);

/// features.csv, true_labels.csv, noisy_labels.csv, dataset.json and, with
/// test_samples > 0, test_features.csv and test_labels.csv.
RunManifest cmd_make_synthetic(const Json &spec, const CommandContext &ctx);

/// Re-run the command recorded in a manifest. Writes to ctx.out when it is
/// non-empty, otherwise to the manifest's own output directory.
RunManifest cmd_replay(const std::filesystem::path &manifest,
                       const CommandContext &ctx);

/// Dataset directory layout read by cmd_clean:
///   features.csv, noisy_labels.csv     required
///   true_labels.csv                    optional, evaluation only
///   test_features.csv, test_labels.csv optional pair
///   dataset.json                       optional {"classes": C}; otherwise
///                                      C = 1 + largest noisy label
[[nodiscard]] Dataset load_dataset(const std::filesystem::path &dir);

/// 0 success, 1 validation, 2 numerical, 3 I/O, 4 internal.
[[nodiscard]] int exit_code_for(const std::exception &e) noexcept;

} // namespace mixclean

#endif // MIXCLEAN_COMMANDS_HPP
