#include "mixclean/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <tuple>

#include "mixclean/error.hpp"
#include "mixclean/io.hpp"
#include "mixclean/noise_model.hpp"
#include "mixclean/sweep.hpp"
#include "mixclean/synthetic.hpp"

namespace fs = std::filesystem;

namespace mixclean {
namespace {

constexpr const char *kManifestName = "manifest.json";

class Stopwatch {
public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

RunManifest start_manifest(const char *command, const CommandContext &ctx) {
  RunManifest m;
  m.version = kVersion;
  m.command = command;
  m.threads = ctx.threads;
  m.output_dir = fs::absolute(ctx.out).lexically_normal().string();
  return m;
}

void log_line(const CommandContext &ctx, const std::string &line) {
  if (ctx.log != nullptr)
    *ctx.log << line << '\n';
}

void emit(const CommandContext &ctx, RunManifest &m, const std::string &name,
          const std::string &content) {
  write_text_atomic(ctx.out / name, content);
  m.artifacts.push_back(name);
}

RunManifest finish(const CommandContext &ctx, RunManifest m,
                   const Stopwatch &clock) {
  m.wall_times["total"] = clock.seconds();
  write_json(ctx.out / kManifestName, to_json(m));
  for (const auto &w : m.warnings)
    log_line(ctx, "warning: " + w);
  log_line(ctx, "wrote " + (ctx.out / kManifestName).string());
  return m;
}

Json rows_of(const TransitionMatrix &t) {
  Json rows = Json::array();
  for (std::size_t n = 0; n < t.size(); ++n) {
    Json row = Json::array();
    for (std::size_t c = 0; c < t.size(); ++c)
      row.push_back(t(n, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json values_of(const ProbabilityVector &p) {
  return Json(std::vector<double>(p.values().begin(), p.values().end()));
}

Json optional_number(const std::optional<double> &v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string optional_cell(const std::optional<double> &v) {
  return v ? format_double(*v) : std::string();
}

std::string absolute_string(const fs::path &p) {
  return fs::absolute(p).lexically_normal().string();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return 0.5 * (v[n / 2] + v[(n - 1) / 2]);
}

std::string format_sweep_summary(std::span<const SweepRow> rows) {
  std::map<std::tuple<int, int, int>, std::vector<const SweepRow *>> groups;
  for (const SweepRow &r : rows)
    groups[{r.classes, r.trials, r.sets}].push_back(&r);
  std::string out = "classes,trials,sets,bound,reps,median_recovery_error,"
                    "median_disagreement,max_heldout_ll_spread,"
                    "identity_alignment_rate\n";
  for (const auto &[key, group] : groups) {
    std::vector<double> err;
    std::vector<double> dis;
    double spread = 0.0;
    std::size_t identity = 0;
    for (const SweepRow *r : group) {
      err.push_back(r->recovery_error);
      dis.push_back(r->disagreement);
      spread = std::max(spread, r->heldout_ll_spread);
      identity += r->identity_alignment ? 1 : 0;
    }
    const auto [c, n, l] = key;
    out += std::to_string(c) + ',' + std::to_string(n) + ',' +
           std::to_string(l) + ',' + std::to_string(group.front()->bound) + ',' +
           std::to_string(group.size()) + ',' + format_double(median(err)) +
           ',' + format_double(median(dis)) + ',' + format_spread(spread) +
           ',' +
           format_double(static_cast<double>(identity) /
                         static_cast<double>(group.size())) +
           '\n';
  }
  return out;
}

std::string format_epochs_csv(const PipelineResult &r) {
  std::string out = "epoch,clean_fraction,test_accuracy,mean_em_iterations,"
                    "objective_sum,degenerate_samples,max_posterior_change\n";
  out += "0," + optional_cell(r.initial_clean_fraction) + ',' +
         optional_cell(r.warmup_test_accuracy) + ",,,,\n";
  for (const EpochReport &e : r.reports)
    out += std::to_string(e.epoch) + ',' + optional_cell(e.clean_fraction) +
           ',' + optional_cell(e.test_accuracy) + ',' +
           format_double(e.mean_em_iterations) + ',' +
           format_double(e.objective_sum) + ',' +
           std::to_string(e.degenerate_samples) + ',' +
           format_double(e.max_posterior_change) + '\n';
  return out;
}

Json epochs_json(const PipelineResult &r) {
  Json j;
  j["initial_clean_fraction"] = optional_number(r.initial_clean_fraction);
  j["warmup_test_accuracy"] = optional_number(r.warmup_test_accuracy);
  j["converged"] = r.converged;
  Json epochs = Json::array();
  for (const EpochReport &e : r.reports) {
    Json x;
    x["epoch"] = e.epoch;
    x["clean_fraction"] = optional_number(e.clean_fraction);
    x["test_accuracy"] = optional_number(e.test_accuracy);
    x["mean_em_iterations"] = e.mean_em_iterations;
    x["objective_sum"] = e.objective_sum;
    x["degenerate_samples"] = e.degenerate_samples;
    x["max_posterior_change"] = e.max_posterior_change;
    epochs.push_back(std::move(x));
  }
  j["epochs"] = std::move(epochs);
  return j;
}

} // namespace

RunManifest cmd_demo_nonidentifiability(const CommandContext &ctx) {
  const Stopwatch clock;
  RunManifest m = start_manifest("demo-nonidentifiability", ctx);
  m.seed = ctx.seed.value_or(0);
  const NonIdentifiabilityReport r = nonidentifiability_demo();
  Json j;
  j["target_marginal"] = {0.25, 0.45, 0.3};
  j["factorization_a"] = {{"transition", rows_of(r.transition_a)},
                          {"prior", values_of(r.prior_a)},
                          {"marginal", values_of(r.marginal_a)}};
  j["factorization_b"] = {{"transition", rows_of(r.transition_b)},
                          {"prior", values_of(r.prior_b)},
                          {"marginal", values_of(r.marginal_b)}};
  j["gap"] = r.gap;
  j["gap_below_1e-12"] = r.gap < 1e-12;
  emit(ctx, m, "nonidentifiability.json", format_json(j));
  log_line(ctx, "marginal gap " + format_double(r.gap));
  m = finish(ctx, std::move(m), clock);
  if (!(r.gap < 1e-12))
    fail(ErrorCode::Numerical,
         "factorizations disagree: gap " + format_double(r.gap));
  return m;
}

RunManifest cmd_fit(const fs::path &labels_path, const Json &config,
                    const CommandContext &ctx) {
  const Stopwatch clock;
  RunManifest m = start_manifest("fit", ctx);
  m.seed = ctx.seed.value_or(0);
  const FitConfig fc = fit_config_from_json(config);
  m.config = to_json(fc);
  m.inputs["labels"] = absolute_string(labels_path);

  const std::vector<CountVector> labels = read_label_sets(labels_path);
  const std::size_t classes = labels.front().size();
  const int trials = labels.front().trials();
  require(classes >= 1, "fit: label sets need at least one class");
  ProbabilityVector pi = ProbabilityVector::uniform(classes);
  if (fc.init_pi) {
    require(fc.init_pi->size() == classes,
            "fit: init_pi must have one entry per class");
    pi = ProbabilityVector(*fc.init_pi);
  }
  const MixtureParams init(
      std::move(pi), TransitionMatrix::smoothed_identity(classes, fc.init_smoothing),
      trials);
  if (auto w = identifiability_warning(static_cast<int>(classes), trials))
    m.warnings.push_back(*w);

  const EmResult r = run_em(labels, init, fc.priors(classes), fc.em);
  Json j;
  j["classes"] = classes;
  j["trials"] = trials;
  j["sets"] = labels.size();
  j["mode"] = fc.em.mode == EmMode::MLE ? "MLE" : "MAP";
  j["identifiable"] = is_identifiable(static_cast<int>(classes), trials);
  j["pi"] = values_of(r.params.pi);
  j["rho"] = rows_of(r.params.rho);
  j["objective_trace"] = r.objective_trace;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["floored"] = r.floored;
  emit(ctx, m, "fit.json", format_json(j));
  log_line(ctx, "fit: " + std::to_string(r.iterations) + " iterations, " +
                    (r.converged ? "converged" : "not converged"));
  return finish(ctx, std::move(m), clock);
}

RunManifest cmd_identifiability_sweep(const Json &config,
                                      const CommandContext &ctx) {
  const Stopwatch clock;
  RunManifest m = start_manifest("identifiability-sweep", ctx);
  SweepConfig sc = sweep_config_from_json(config);
  if (ctx.seed)
    sc.seed = *ctx.seed;
  m.seed = sc.seed;
  m.config = to_json(sc);
  for (int c : sc.classes)
    for (int n : sc.trials)
      if (auto w = identifiability_warning(c, n))
        m.warnings.push_back(*w);

  const std::vector<SweepRow> rows = run_sweep(sc, ctx.threads);
  emit(ctx, m, "sweep.csv", format_sweep_csv(rows));
  emit(ctx, m, "sweep_summary.csv", format_sweep_summary(rows));
  log_line(ctx, "sweep: " + std::to_string(rows.size()) + " cells");
  return finish(ctx, std::move(m), clock);
}

Dataset load_dataset(const fs::path &dir) {
  if (!fs::is_directory(dir))
    fail(ErrorCode::Io, "dataset directory not found: " + dir.string());
  Dataset ds;
  ds.train.features = read_features(dir / "features.csv");
  ds.train.noisy_labels = read_labels(dir / "noisy_labels.csv");
  if (fs::exists(dir / "dataset.json")) {
    const Json meta = read_json(dir / "dataset.json");
    require(meta.is_object() && meta.contains("classes") &&
                meta["classes"].is_number_integer(),
            (dir / "dataset.json").string() + ": needs an integer 'classes'");
    ds.train.classes = meta["classes"].get<int>();
  } else {
    require(!ds.train.noisy_labels.empty(), "dataset: no noisy labels");
    ds.train.classes =
        1 + *std::max_element(ds.train.noisy_labels.begin(),
                              ds.train.noisy_labels.end());
  }
  if (fs::exists(dir / "true_labels.csv"))
    ds.eval.true_labels = read_labels(dir / "true_labels.csv");
  const bool has_tf = fs::exists(dir / "test_features.csv");
  const bool has_tl = fs::exists(dir / "test_labels.csv");
  require(has_tf == has_tl,
          "dataset: test_features.csv and test_labels.csv must come together");
  if (has_tf) {
    ds.eval.test_features = read_features(dir / "test_features.csv");
    ds.eval.test_labels = read_labels(dir / "test_labels.csv");
  }
  ds.train.validate();
  ds.eval.validate(ds.train);
  return ds;
}

RunManifest cmd_clean(const fs::path &data_dir, const Json &config,
                      const CommandContext &ctx) {
  const Stopwatch clock;
  RunManifest m = start_manifest("clean", ctx);
  PipelineConfig pc = pipeline_config_from_json(config);
  if (ctx.seed)
    pc.seed = *ctx.seed;
  pc.threads = ctx.threads;
  m.seed = pc.seed;
  m.config = to_json(pc);
  m.inputs["data"] = absolute_string(data_dir);

  const Dataset ds = load_dataset(data_dir);
  const PipelineResult r = run_pipeline(ds, pc);
  m.warnings = r.warnings;
  for (const EpochReport &e : r.reports) {
    m.wall_times["epoch_" + std::to_string(e.epoch)] = e.wall_time_s;
    log_line(ctx, "epoch " + std::to_string(e.epoch) + " clean_fraction " +
                      (e.clean_fraction ? format_double(*e.clean_fraction)
                                        : std::string("n/a")));
  }
  emit(ctx, m, "epochs.json", format_json(epochs_json(r)));
  emit(ctx, m, "epochs.csv", format_epochs_csv(r));
  emit(ctx, m, "posteriors.csv", format_posteriors(r.posteriors));
  emit(ctx, m, "pseudo_labels.csv", format_labels(hard_labels(r.posteriors)));
  return finish(ctx, std::move(m), clock);
}

RunManifest cmd_make_synthetic(const Json &spec_json, const CommandContext &ctx) {
  const Stopwatch clock;
  RunManifest m = start_manifest("make-synthetic", ctx);
  SyntheticSpec spec = synthetic_spec_from_json(spec_json);
  if (ctx.seed) {
    spec.seed = *ctx.seed;
    spec.noise.seed = *ctx.seed;
  }
  m.seed = spec.seed;
  m.config = to_json(spec);

  const SyntheticData d = generate_synthetic(spec);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < d.true_labels.size(); ++i)
    flips += d.true_labels[i] != d.noisy_labels[i] ? 1 : 0;
  const double realized =
      static_cast<double>(flips) / static_cast<double>(d.true_labels.size());

  emit(ctx, m, "features.csv", format_features(d.features));
  emit(ctx, m, "true_labels.csv", format_labels(d.true_labels));
  emit(ctx, m, "noisy_labels.csv", format_labels(d.noisy_labels));
  if (spec.test_samples > 0) {
    emit(ctx, m, "test_features.csv", format_features(d.test_features));
    emit(ctx, m, "test_labels.csv", format_labels(d.test_labels));
  }
  Json meta;
  meta["classes"] = spec.classes;
  meta["samples"] = spec.samples;
  meta["dim"] = spec.dim;
  meta["realized_noise_rate"] = realized;
  emit(ctx, m, "dataset.json", format_json(meta));
  log_line(ctx, "realized noise rate " + format_double(realized));
  return finish(ctx, std::move(m), clock);
}

RunManifest cmd_replay(const fs::path &manifest_path, const CommandContext &ctx) {
  const RunManifest m = manifest_from_json(read_json(manifest_path));
  // The configuration snapshot already carries the resolved seeds.
  CommandContext c = ctx;
  c.seed.reset();
  if (c.out.empty())
    c.out = m.output_dir;
  auto input = [&](const char *role) {
    const auto it = m.inputs.find(role);
    if (it == m.inputs.end())
      fail(ErrorCode::Validation,
           manifest_path.string() + ": missing input '" + role + "'");
    return fs::path(it->second);
  };
  if (m.command == "demo-nonidentifiability")
    return cmd_demo_nonidentifiability(c);
  if (m.command == "fit")
    return cmd_fit(input("labels"), m.config, c);
  if (m.command == "identifiability-sweep")
    return cmd_identifiability_sweep(m.config, c);
  if (m.command == "clean")
    return cmd_clean(input("data"), m.config, c);
  if (m.command == "make-synthetic")
    return cmd_make_synthetic(m.config, c);
  fail(ErrorCode::Validation,
       manifest_path.string() + ": unknown command '" + m.command + "'");
}

int exit_code_for(const std::exception &e) noexcept {
  if (const auto *err = dynamic_cast<const Error *>(&e))
    return static_cast<int>(err->code());
  return static_cast<int>(ErrorCode::Internal);
}

} // namespace mixclean
