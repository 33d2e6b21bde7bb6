#include "mixclean/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <type_traits>
#include <utility>

#include "mixclean/error.hpp"
#include "mixclean/io.hpp"

namespace mixclean {
namespace {

template <typename E> using EnumTable = std::vector<std::pair<E, const char *>>;

const EnumTable<EmMode> kModes{{EmMode::MLE, "MLE"}, {EmMode::MAP, "MAP"}};
const EnumTable<Approximation> kApproximations{
    {Approximation::Full, "full"}, {Approximation::Simplified, "simplified"}};
const EnumTable<FeatureSource> kFeatureSources{
    {FeatureSource::Static, "static"},
    {FeatureSource::ClassifierLogits, "logits"}};
const EnumTable<RhoInit> kRhoInits{{RhoInit::Identity, "identity"},
                                   {RhoInit::Previous, "previous"}};
const EnumTable<ClassifierKind> kClassifiers{
    {ClassifierKind::SoftmaxRegression, "softmax"},
    {ClassifierKind::NearestCentroid, "centroid"}};
const EnumTable<NoiseKind> kNoiseKinds{{NoiseKind::Symmetric, "symmetric"},
                                       {NoiseKind::Asymmetric, "asymmetric"},
                                       {NoiseKind::InstanceDependent, "instance"}};
const EnumTable<ClusterLayout> kLayouts{{ClusterLayout::Circle, "circle"},
                                        {ClusterLayout::Gaussian, "gaussian"}};

template <typename E> std::string name_of(E value, const EnumTable<E> &table) {
  for (const auto &[v, n] : table)
    if (v == value)
      return n;
  fail(ErrorCode::Internal, "unnamed enumeration value");
}

// Reads keys of one JSON object into typed fields and reports the keys it
// never consumed.
class Reader {
public:
  Reader(const Json &j, std::string context)
      : j_(j), context_(std::move(context)) {
    if (!j_.is_object())
      fail(ErrorCode::Validation, context_ + ": expected a JSON object");
  }

  template <typename T> void get(const char *key, T &out) {
    const Json *v = find(key);
    if (v != nullptr)
      out = convert<T>(*v, key);
  }

  template <typename T> void get(const char *key, std::optional<T> &out) {
    const Json *v = find(key);
    if (v != nullptr && !v->is_null())
      out = convert<T>(*v, key);
  }

  template <typename E>
  void get_enum(const char *key, E &out, const EnumTable<E> &table) {
    const Json *v = find(key);
    if (v == nullptr)
      return;
    const auto s = convert<std::string>(*v, key);
    for (const auto &[value, name] : table)
      if (s == name) {
        out = value;
        return;
      }
    std::string options;
    for (const auto &[value, name] : table)
      options += (options.empty() ? "" : ", ") + std::string(name);
    bad(key, "must be one of " + options);
  }

  /// A number or an array of numbers.
  void get_vector_or_scalar(const char *key, std::vector<double> &out) {
    const Json *v = find(key);
    if (v == nullptr)
      return;
    if (v->is_number())
      out = {convert<double>(*v, key)};
    else
      out = convert<std::vector<double>>(*v, key);
  }

  const Json *sub(const char *key) { return find(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key()))
        fail(ErrorCode::Validation,
             context_ + ": unknown key '" + it.key() + "'");
  }

  [[noreturn]] void bad(const std::string &key, const std::string &what) const {
    fail(ErrorCode::Validation, context_ + ": '" + key + "' " + what);
  }

private:
  const Json *find(const char *key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T> T convert(const Json &v, const std::string &key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean())
        bad(key, "must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number())
        bad(key, "must be a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer())
        bad(key, "must be an integer");
      const auto x = v.get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX)
        bad(key, "is out of range");
      return static_cast<int>(x);
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned() &&
          !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        bad(key, "must be a non-negative integer");
      const auto x = v.get<std::uint64_t>();
      if (x > std::numeric_limits<T>::max())
        bad(key, "is out of range");
      return static_cast<T>(x);
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string())
        bad(key, "must be a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array())
        bad(key, "must be an array");
      T out;
      for (const auto &e : v)
        out.push_back(convert<typename T::value_type>(e, key));
      return out;
    }
  }

  const Json &j_;
  std::string context_;
  std::set<std::string> seen_;
};

void check_finite(const Json &j) {
  if (j.is_number_float() && !std::isfinite(j.get<double>()))
    fail(ErrorCode::Numerical, "non-finite value in structured output");
  if (j.is_structured())
    for (const auto &e : j)
      check_finite(e);
}

Json classifier_json(const ClassifierSpec &c) {
  Json j;
  j["kind"] = name_of(c.kind, kClassifiers);
  j["learning_rate"] = c.learning_rate;
  j["steps"] = c.steps;
  j["weight_decay"] = c.weight_decay;
  return j;
}

ClassifierSpec classifier_from_json(const Json &j) {
  ClassifierSpec c;
  Reader r(j, "config.classifier");
  r.get_enum("kind", c.kind, kClassifiers);
  r.get("learning_rate", c.learning_rate);
  r.get("steps", c.steps);
  r.get("weight_decay", c.weight_decay);
  r.finish();
  return c;
}

std::vector<double> expand(const std::vector<double> &v, std::size_t classes,
                           const char *what) {
  if (v.size() == 1)
    return std::vector<double>(classes, v.front());
  require(v.size() == classes, std::string("config: ") + what +
                                   " must have one entry or one per class");
  return v;
}

} // namespace

DirichletPriors FitConfig::priors(std::size_t classes) const {
  return DirichletPriors(expand(alpha, classes, "alpha"),
                         expand(beta, classes, "beta"));
}

Json to_json(const PipelineConfig &c) {
  Json j;
  j["k"] = c.k;
  j["sets"] = c.sets;
  j["trials"] = c.trials;
  j["mu"] = c.mu;
  j["eta"] = c.eta;
  j["em_tol"] = c.em_tol;
  j["mode"] = name_of(c.mode, kModes);
  j["rho_init"] = name_of(c.rho_init, kRhoInits);
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["epochs"] = c.epochs;
  j["outer_tol"] = c.outer_tol;
  j["approximation"] = name_of(c.approximation, kApproximations);
  j["cross_cleaning"] = c.cross_cleaning;
  j["soft_labels"] = c.soft_labels;
  j["feature_source"] = name_of(c.feature_source, kFeatureSources);
  j["classifier"] = classifier_json(c.classifier);
  j["init_smoothing"] = c.init_smoothing;
  j["llc_lambda"] = c.llc_lambda;
  j["llc_sigma"] = c.llc_sigma;
  j["subsample_size"] = c.subsample_size;
  j["seed"] = c.seed;
  return j;
}

PipelineConfig pipeline_config_from_json(const Json &j) {
  PipelineConfig c;
  Reader r(j, "config");
  r.get("k", c.k);
  r.get("sets", c.sets);
  r.get("trials", c.trials);
  r.get("mu", c.mu);
  r.get("eta", c.eta);
  r.get("em_tol", c.em_tol);
  r.get_enum("mode", c.mode, kModes);
  r.get_enum("rho_init", c.rho_init, kRhoInits);
  r.get("alpha", c.alpha);
  r.get("beta", c.beta);
  r.get("epochs", c.epochs);
  r.get("outer_tol", c.outer_tol);
  r.get_enum("approximation", c.approximation, kApproximations);
  r.get("cross_cleaning", c.cross_cleaning);
  r.get("soft_labels", c.soft_labels);
  r.get_enum("feature_source", c.feature_source, kFeatureSources);
  if (const Json *cl = r.sub("classifier"))
    c.classifier = classifier_from_json(*cl);
  r.get("init_smoothing", c.init_smoothing);
  r.get("llc_lambda", c.llc_lambda);
  r.get("llc_sigma", c.llc_sigma);
  r.get("subsample_size", c.subsample_size);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

Json to_json(const FitConfig &c) {
  Json j;
  j["mode"] = name_of(c.em.mode, kModes);
  j["max_iters"] = c.em.max_iters;
  j["tol"] = c.em.tol;
  j["min_prob_floor"] = c.em.min_prob_floor;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["init_smoothing"] = c.init_smoothing;
  if (c.init_pi)
    j["init_pi"] = *c.init_pi;
  return j;
}

FitConfig fit_config_from_json(const Json &j) {
  FitConfig c;
  Reader r(j, "config");
  r.get_enum("mode", c.em.mode, kModes);
  r.get("max_iters", c.em.max_iters);
  r.get("tol", c.em.tol);
  r.get("min_prob_floor", c.em.min_prob_floor);
  r.get_vector_or_scalar("alpha", c.alpha);
  r.get_vector_or_scalar("beta", c.beta);
  r.get("init_smoothing", c.init_smoothing);
  r.get("init_pi", c.init_pi);
  r.finish();
  c.em.validate();
  require(!c.alpha.empty() && !c.beta.empty(),
          "config: alpha and beta must be non-empty");
  require(c.init_smoothing > 0.0 && c.init_smoothing < 1.0,
          "config: init_smoothing must lie in (0, 1)");
  return c;
}

Json to_json(const SweepConfig &c) {
  Json j;
  j["classes"] = c.classes;
  j["trials"] = c.trials;
  j["sets"] = c.sets;
  j["reps"] = c.reps;
  j["inits"] = c.inits;
  j["heldout_sets"] = c.heldout_sets;
  j["max_noise"] = c.max_noise;
  j["mode"] = name_of(c.mode, kModes);
  j["max_iters"] = c.max_iters;
  j["tol"] = c.tol;
  j["init_smoothing"] = c.init_smoothing;
  j["seed"] = c.seed;
  return j;
}

SweepConfig sweep_config_from_json(const Json &j) {
  SweepConfig c;
  Reader r(j, "config");
  r.get("classes", c.classes);
  r.get("trials", c.trials);
  r.get("sets", c.sets);
  r.get("reps", c.reps);
  r.get("inits", c.inits);
  r.get("heldout_sets", c.heldout_sets);
  r.get("max_noise", c.max_noise);
  r.get_enum("mode", c.mode, kModes);
  r.get("max_iters", c.max_iters);
  r.get("tol", c.tol);
  r.get("init_smoothing", c.init_smoothing);
  r.get("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

Json to_json(const NoiseSpec &s) {
  Json j;
  j["kind"] = name_of(s.kind, kNoiseKinds);
  j["rate"] = s.rate;
  j["seed"] = s.seed;
  if (s.projection)
    j["projection"] = *s.projection;
  return j;
}

NoiseSpec noise_spec_from_json(const Json &j) {
  NoiseSpec s;
  Reader r(j, "config.noise");
  r.get_enum("kind", s.kind, kNoiseKinds);
  r.get("rate", s.rate);
  r.get("seed", s.seed);
  r.get("projection", s.projection);
  r.finish();
  return s;
}

Json to_json(const SyntheticSpec &s) {
  Json j;
  j["samples"] = s.samples;
  j["dim"] = s.dim;
  j["classes"] = s.classes;
  j["layout"] = name_of(s.layout, kLayouts);
  j["separation"] = s.separation;
  j["spread"] = s.spread;
  j["test_samples"] = s.test_samples;
  j["seed"] = s.seed;
  j["noise"] = to_json(s.noise);
  return j;
}

SyntheticSpec synthetic_spec_from_json(const Json &j) {
  SyntheticSpec s;
  Reader r(j, "config");
  r.get("samples", s.samples);
  r.get("dim", s.dim);
  r.get("classes", s.classes);
  r.get_enum("layout", s.layout, kLayouts);
  r.get("separation", s.separation);
  r.get("spread", s.spread);
  r.get("test_samples", s.test_samples);
  r.get("seed", s.seed);
  if (const Json *n = r.sub("noise"))
    s.noise = noise_spec_from_json(*n);
  r.finish();
  s.noise.classes = s.classes;
  s.validate();
  return s;
}

Json to_json(const RunManifest &m) {
  Json j;
  j["tool"] = m.tool;
  j["version"] = m.version;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["artifacts"] = m.artifacts;
  j["output_dir"] = m.output_dir;
  j["warnings"] = m.warnings;
  j["wall_times"] = m.wall_times;
  return j;
}

RunManifest manifest_from_json(const Json &j) {
  RunManifest m;
  Reader r(j, "manifest");
  r.get("tool", m.tool);
  r.get("version", m.version);
  r.get("command", m.command);
  r.get("seed", m.seed);
  r.get("threads", m.threads);
  if (const Json *c = r.sub("config")) {
    if (!c->is_object())
      r.bad("config", "must be an object");
    m.config = *c;
  }
  if (const Json *in = r.sub("inputs")) {
    if (!in->is_object())
      r.bad("inputs", "must be an object");
    for (auto it = in->begin(); it != in->end(); ++it) {
      if (!it->is_string())
        r.bad("inputs", "values must be strings");
      m.inputs[it.key()] = it->get<std::string>();
    }
  }
  r.get("artifacts", m.artifacts);
  r.get("output_dir", m.output_dir);
  r.get("warnings", m.warnings);
  if (const Json *w = r.sub("wall_times")) {
    if (!w->is_object())
      r.bad("wall_times", "must be an object");
    for (auto it = w->begin(); it != w->end(); ++it) {
      if (!it->is_number())
        r.bad("wall_times", "values must be numbers");
      m.wall_times[it.key()] = it->get<double>();
    }
  }
  r.finish();
  return m;
}

Json read_json(const std::filesystem::path &path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error &e) {
    fail(ErrorCode::Validation, path.string() + ": " + e.what());
  }
}

std::string format_json(const Json &j) {
  check_finite(j);
  return j.dump(2) + "\n";
}

void write_json(const std::filesystem::path &path, const Json &j) {
  write_text_atomic(path, format_json(j));
}

} // namespace mixclean
