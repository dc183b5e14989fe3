#pragma once

// The `lsds` command line: gen, train, eval, control and selftest.
//
// Exit codes: 0 success, 1 other failure, 2 usage, 3 file access, 4 file
// format or version, 5 configuration, 6 selftest failure, 7 training.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lsds/lsds.hpp"
#include "selftest.hpp"

namespace lsds::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kFormat = 4,
  kConfig = 5,
  kSelftest = 6,
  kTraining = 7,
};

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::optional<std::string> feature_set;
  std::optional<std::string> model;
  std::optional<std::string> out;
  std::optional<std::string> scene;
  std::optional<std::string> gains;
  std::string sign = "tighten";
  std::optional<std::string> data;
  std::optional<std::string> load;
  std::optional<std::string> split;
  std::size_t folds = 5;
  std::string corpus = "both";
  std::optional<std::string> detector;
  std::optional<std::string> estimator;
};

namespace detail {

inline Scene resolve_scene(const Options& o) {
  Scene s = o.scene ? load_scene(*o.scene) : Scene{};
  if (o.seed) s.seed = *o.seed;
  s.control.seed = s.seed;
  return s;
}

inline std::filesystem::path out_dir(const Options& o) {
  if (!o.out) throw UsageError("--out DIR is required");
  std::error_code ec;
  std::filesystem::create_directories(*o.out, ec);
  if (ec) throw IoError("cannot create output directory '" + *o.out + "': " + ec.message());
  return *o.out;
}

inline FeatureSet feature_set_or(const Options& o, FeatureSet fallback) {
  if (!o.feature_set) return fallback;
  return *parse_feature_set(*o.feature_set);
}

inline PdGains parse_gains(const Options& o) {
  PdGains g;
  g.sign = *parse_pd_sign(o.sign);
  if (o.gains) {
    const auto parts = lsds::detail::split_list(*o.gains);
    if (parts.size() != 2) throw UsageError("--gains expects Kp,Kd");
    try {
      g.kp = lsds::detail::scene_number(parts[0], 0);
      g.kd = lsds::detail::scene_number(parts[1], 0);
    } catch (const ParseError&) {
      throw UsageError("--gains expects two numbers, got '" + *o.gains + "'");
    }
  }
  g.validate();
  return g;
}

inline std::string g(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

inline void print_config(std::ostream& out, const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
  out << "lsds " << cmd << " configuration:\n";
  for (const auto& [k, v] : kv) out << "  " << k << " = " << v << '\n';
  out.flush();
}

inline std::string tree_hp_string(const TreeHyperparams& hp) {
  return "max_depth=" + std::to_string(hp.max_depth) + " max_features=" + std::to_string(hp.max_features) +
         " min_samples_leaf=" + std::to_string(hp.min_samples_leaf) + " min_samples_split=" +
         std::to_string(hp.min_samples_split) + " n_estimators=" + std::to_string(hp.n_estimators) +
         " learning_rate=" + g(hp.learning_rate);
}

inline std::string nn_string(const TrainConfig& c) {
  return "epochs=" + std::to_string(c.epochs) + " batch_size=" + std::to_string(c.batch_size) +
         " learning_rate=" + g(c.learning_rate) + " grad_clip=" + g(c.grad_clip);
}

inline ModelKind model_kind(const Options& o) {
  if (!o.model) throw UsageError("--model is required");
  return *parse_model_kind(*o.model);
}

inline bool is_classifier(ModelKind k) { return k == ModelKind::Rf || k == ModelKind::Gb; }

inline AnyModel train_any(ModelKind kind, const std::vector<DetectionSample>* det, const std::vector<SeveritySample>* sev,
                          FeatureSet set, const Scene& scene, std::uint64_t seed, std::size_t jobs) {
  switch (kind) {
    case ModelKind::Rf:
      return train_random_forest(std::span<const DetectionSample>(*det), scene.training.forest(seed), set, jobs);
    case ModelKind::Gb:
      return train_gradient_boosting(std::span<const DetectionSample>(*det), scene.training.boosting(seed), set);
    case ModelKind::Mlp:
      return train_mlp(std::span<const SeveritySample>(*sev), scene.training.network(seed), set);
    case ModelKind::Lstm:
      return train_lstm(std::span<const SeveritySample>(*sev), scene.training.network(seed), set);
  }
  throw UsageError("unknown model kind");
}

inline std::vector<int> predict_labels(const AnyModel& m, std::span<const DetectionSample> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, ForestModel> || std::is_same_v<M, BoostModel>) {
          for (const auto& s : samples) out.push_back(predict_class(model, select_features(s.features, model.feature_set)).label);
        } else {
          throw ConfigError("a severity model cannot classify slip");
        }
      },
      m);
  return out;
}

inline std::vector<double> predict_speeds(const AnyModel& m, std::span<const SeveritySample> samples) {
  return std::visit(
      [&](const auto& model) -> std::vector<double> {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, MlpModel> || std::is_same_v<M, LstmModel>) {
          return predict_all(model, to_regression_data(samples, model.feature_set));
        } else {
          throw ConfigError("a slip detector cannot estimate severity");
        }
      },
      m);
}

inline std::vector<double> truths(std::span<const SeveritySample> samples) {
  std::vector<double> y;
  for (const auto& s : samples) y.push_back(s.v_slip);
  return y;
}

inline std::vector<int> labels(std::span<const DetectionSample> samples) {
  std::vector<int> y;
  for (const auto& s : samples) y.push_back(s.label);
  return y;
}

template <typename Sample>
std::vector<std::string> object_order(const std::vector<Sample>& samples) {
  std::vector<std::string> order;
  for (const auto& s : samples) {
    if (std::find(order.begin(), order.end(), s.object_id) == order.end()) order.push_back(s.object_id);
  }
  return order;
}

template <typename Sample>
std::vector<Sample> of_object(const std::vector<Sample>& samples, const std::string& name) {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.object_id == name) out.push_back(s);
  }
  return out;
}

inline void print_classification(std::ostream& out, const std::string& model, const std::string& set,
                                 const std::string& split, const ClassificationReport& r) {
  out << std::left << std::setw(6) << model << std::setw(10) << set << std::setw(12) << split << std::right
      << std::fixed << std::setprecision(4) << " acc " << r.accuracy << "  prec " << r.precision << "  rec "
      << r.recall << "  f1 " << r.f1 << '\n'
      << std::defaultfloat;
}

inline void print_regression(std::ostream& out, const std::string& model, const std::string& set,
                             const std::string& split, const RegressionReport& r) {
  out << std::left << std::setw(6) << model << std::setw(10) << set << std::setw(12) << split << std::right
      << std::fixed << std::setprecision(4) << " mae " << r.mae << "  rmse " << r.rmse << "  r2 " << r.r2 << '\n'
      << std::defaultfloat;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << content;
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_gen(const Options& o, std::ostream& out) {
  const Scene scene = detail::resolve_scene(o);
  const auto dir = detail::out_dir(o);
  std::string names;
  for (const auto& obj : scene.objects) names += (names.empty() ? "" : ",") + obj.name;
  detail::print_config(out, "gen",
                       {{"scene", o.scene.value_or("(built-in defaults)")},
                        {"seed", std::to_string(scene.seed)},
                        {"jobs", std::to_string(o.jobs)},
                        {"corpus", o.corpus},
                        {"objects", names},
                        {"out", dir.string()}});
  std::ostringstream resolved;
  write_scene(resolved, scene);
  detail::write_file(dir / "scene.txt", resolved.str());
  if (o.corpus != "severity") {
    const auto det = sim::generate_detection_corpus(scene.objects, scene.seed, scene.sim, o.jobs);
    write_dataset((dir / "detection.csv").string(), det);
    std::size_t pos = 0;
    for (const auto& s : det) pos += static_cast<std::size_t>(s.label);
    out << "detection corpus: " << det.size() << " rows (" << pos << " slip) -> " << (dir / "detection.csv").string() << '\n';
  }
  if (o.corpus != "detection") {
    const auto sev = sim::generate_severity_corpus(scene.objects, scene.seed, scene.sim, o.jobs);
    write_dataset((dir / "severity.csv").string(), sev);
    out << "severity corpus: " << sev.size() << " rows -> " << (dir / "severity.csv").string() << '\n';
  }
  return kOk;
}

inline int cmd_train(const Options& o, std::ostream& out) {
  if (!o.data) throw UsageError("--data FILE is required");
  const ModelKind kind = detail::model_kind(o);
  const FeatureSet set = detail::feature_set_or(o, FeatureSet::Combined);
  const Scene scene = detail::resolve_scene(o);
  const auto dir = detail::out_dir(o);
  const DatasetKind dk = sniff_dataset(*o.data);
  if (detail::is_classifier(kind) != (dk == DatasetKind::Detection)) {
    throw ConfigError(std::string(to_string(kind)) + " needs a " +
                      (detail::is_classifier(kind) ? "detection" : "severity") + " dataset");
  }
  const auto path = dir / (std::string(to_string(kind)) + "-" + std::string(to_string(set)) + ".model");
  detail::print_config(out, "train",
                       {{"data", *o.data},
                        {"model", std::string(to_string(kind))},
                        {"feature_set", std::string(to_string(set))},
                        {"seed", std::to_string(scene.seed)},
                        {"jobs", std::to_string(o.jobs)},
                        {"hyperparameters", kind == ModelKind::Rf   ? detail::tree_hp_string(scene.training.forest(scene.seed))
                                            : kind == ModelKind::Gb ? detail::tree_hp_string(scene.training.boosting(scene.seed)) +
                                                                          " reading=" + std::string(to_string(scene.training.gb_reading))
                                                                    : detail::nn_string(scene.training.network(scene.seed))},
                        {"out", path.string()}});
  AnyModel model;
  std::size_t rows = 0;
  if (dk == DatasetKind::Detection) {
    const auto det = read_detection_dataset(*o.data);
    rows = det.size();
    model = detail::train_any(kind, &det, nullptr, set, scene, scene.seed, o.jobs);
  } else {
    const auto sev = read_severity_dataset(*o.data);
    rows = sev.size();
    model = detail::train_any(kind, nullptr, &sev, set, scene, scene.seed, o.jobs);
  }
  std::ostringstream buf;
  save_model(buf, model);
  detail::write_file(path, buf.str());
  out << "trained " << to_string(kind) << " on " << rows << " rows -> " << path.string() << '\n';
  return kOk;
}

inline int cmd_eval(const Options& o, std::ostream& out) {
  if (!o.data) throw UsageError("--data FILE is required");
  const DatasetKind dk = sniff_dataset(*o.data);
  const Scene scene = detail::resolve_scene(o);
  std::ostringstream report;

  if (o.load) {
    if (o.model || o.split || o.feature_set) throw UsageError("--load evaluates a frozen model; drop --model/--split/--feature-set");
    const AnyModel model = load_any_model(*o.load);
    const ModelKind kind = kind_of(model);
    if (detail::is_classifier(kind) != (dk == DatasetKind::Detection)) {
      throw ConfigError(std::string(to_string(kind)) + " model does not match the dataset kind");
    }
    const std::string set(to_string(feature_set_of(model)));
    detail::print_config(out, "eval", {{"data", *o.data}, {"model", *o.load}, {"kind", std::string(to_string(kind))},
                                       {"feature_set", set}, {"mode", "frozen model, per object"},
                                       {"out", o.out.value_or("(stdout only)")}});
    if (dk == DatasetKind::Detection) {
      const auto det = read_detection_dataset(*o.data);
      write_report_header(report, static_cast<const ClassificationReport*>(nullptr));
      for (const auto& name : detail::object_order(det)) {
        const auto part = detail::of_object(det, name);
        const auto r = classification_metrics(detail::labels(part), detail::predict_labels(model, part));
        write_report_row(report, to_string(kind), set, name, r);
        detail::print_classification(out, std::string(to_string(kind)), set, name, r);
      }
      const auto r = classification_metrics(detail::labels(det), detail::predict_labels(model, det));
      write_report_row(report, to_string(kind), set, "all", r);
      detail::print_classification(out, std::string(to_string(kind)), set, "all", r);
    } else {
      const auto sev = read_severity_dataset(*o.data);
      write_report_header(report, static_cast<const RegressionReport*>(nullptr));
      for (const auto& name : detail::object_order(sev)) {
        const auto part = detail::of_object(sev, name);
        const auto r = regression_metrics(detail::truths(part), detail::predict_speeds(model, part));
        write_report_row(report, to_string(kind), set, name, r);
        detail::print_regression(out, std::string(to_string(kind)), set, name, r);
      }
      const auto r = regression_metrics(detail::truths(sev), detail::predict_speeds(model, sev));
      write_report_row(report, to_string(kind), set, "all", r);
      detail::print_regression(out, std::string(to_string(kind)), set, "all", r);
    }
    if (o.out) detail::write_file(detail::out_dir(o) / ("eval-" + std::string(to_string(kind)) + "-frozen.csv"), report.str());
    return kOk;
  }

  const ModelKind kind = detail::model_kind(o);
  if (detail::is_classifier(kind) != (dk == DatasetKind::Detection)) {
    throw ConfigError(std::string(to_string(kind)) + " needs a " + (detail::is_classifier(kind) ? "detection" : "severity") +
                      " dataset");
  }
  const std::string split = o.split.value_or(dk == DatasetKind::Detection ? "kfold" : "looo");
  if (o.folds != 5 && split != "kfold") throw UsageError("--folds only applies to --split kfold");
  std::vector<FeatureSet> sets;
  if (o.feature_set) {
    sets.push_back(*parse_feature_set(*o.feature_set));
  } else {
    sets = {FeatureSet::Baseline, FeatureSet::Proposed, FeatureSet::Combined};
  }
  std::string set_names;
  for (auto s : sets) set_names += (set_names.empty() ? "" : ",") + std::string(to_string(s));
  detail::print_config(out, "eval",
                       {{"data", *o.data},
                        {"model", std::string(to_string(kind))},
                        {"feature_sets", set_names},
                        {"split", split + (split == "kfold" ? " (k=" + std::to_string(o.folds) + ")" : "")},
                        {"seed", std::to_string(scene.seed)},
                        {"jobs", std::to_string(o.jobs)},
                        {"hyperparameters", kind == ModelKind::Rf   ? detail::tree_hp_string(scene.training.forest(scene.seed))
                                            : kind == ModelKind::Gb ? detail::tree_hp_string(scene.training.boosting(scene.seed))
                                                                    : detail::nn_string(scene.training.network(scene.seed))},
                        {"out", o.out.value_or("(stdout only)")}});

  auto plan_for = [&](const auto& samples) {
    using S = typename std::decay_t<decltype(samples)>::value_type;
    if (split == "kfold") {
      if constexpr (std::is_same_v<S, DetectionSample>) {
        return stratified_kfold(std::span<const DetectionSample>(samples), o.folds, scene.seed);
      } else {
        throw UsageError("stratified k-fold needs class labels; use --split looo for severity data");
        return SplitPlan{};
      }
    }
    auto plan = leave_one_object_out(std::span<const S>(samples));
    plan.seed = scene.seed;
    return plan;
  };

  if (dk == DatasetKind::Detection) {
    const auto det = read_detection_dataset(*o.data);
    const SplitPlan plan = plan_for(det);
    for (const auto& w : plan.warnings) out << "warning: " << w << '\n';
    write_report_header(report, static_cast<const ClassificationReport*>(nullptr));
    for (FeatureSet set : sets) {
      const auto res = run_cv<ClassificationReport>(
          plan,
          [&](const Split& sp) {
            const auto train = gather(std::span<const DetectionSample>(det), sp.train);
            const auto test = gather(std::span<const DetectionSample>(det), sp.test);
            const AnyModel m = detail::train_any(kind, &train, nullptr, set, scene, scene.seed, 1);
            return classification_metrics(detail::labels(test), detail::predict_labels(m, test));
          },
          o.jobs);
      const std::string sname(to_string(set));
      for (std::size_t i = 0; i < res.splits.size(); ++i) write_report_row(report, to_string(kind), sname, res.split_names[i], res.splits[i]);
      write_report_row(report, to_string(kind), sname, "mean", res.mean);
      detail::print_classification(out, std::string(to_string(kind)), sname, "mean", res.mean);
    }
  } else {
    const auto sev = read_severity_dataset(*o.data);
    const SplitPlan plan = plan_for(sev);
    for (const auto& w : plan.warnings) out << "warning: " << w << '\n';
    write_report_header(report, static_cast<const RegressionReport*>(nullptr));
    for (FeatureSet set : sets) {
      const auto res = run_cv<RegressionReport>(
          plan,
          [&](const Split& sp) {
            const auto train = gather(std::span<const SeveritySample>(sev), sp.train);
            const auto test = gather(std::span<const SeveritySample>(sev), sp.test);
            const AnyModel m = detail::train_any(kind, nullptr, &train, set, scene, scene.seed, 1);
            return regression_metrics(detail::truths(test), detail::predict_speeds(m, test));
          },
          o.jobs);
      const std::string sname(to_string(set));
      for (std::size_t i = 0; i < res.splits.size(); ++i) write_report_row(report, to_string(kind), sname, res.split_names[i], res.splits[i]);
      write_report_row(report, to_string(kind), sname, "mean", res.mean);
      detail::print_regression(out, std::string(to_string(kind)), sname, "mean", res.mean);
    }
  }
  if (o.out) {
    detail::write_file(detail::out_dir(o) / ("eval-" + std::string(to_string(kind)) + "-" + split + ".csv"), report.str());
  }
  return kOk;
}

inline int cmd_control(const Options& o, std::ostream& out) {
  if (!o.detector || !o.estimator) throw UsageError("--detector and --estimator model files are required");
  const Scene scene = detail::resolve_scene(o);
  const PdGains gains = detail::parse_gains(o);
  const auto dir = detail::out_dir(o);
  const AnyModel det = load_any_model(*o.detector);
  const AnyModel est = load_any_model(*o.estimator);
  if (!detail::is_classifier(kind_of(det))) throw ConfigError("--detector must be an rf or gb model");
  if (detail::is_classifier(kind_of(est))) throw ConfigError("--estimator must be an mlp or lstm model");
  const auto& cfg = scene.control;
  detail::print_config(out, "control",
                       {{"scene", o.scene.value_or("(built-in defaults)")},
                        {"seed", std::to_string(scene.seed)},
                        {"detector", *o.detector + " (" + std::string(to_string(kind_of(det))) + ")"},
                        {"estimator", *o.estimator + " (" + std::string(to_string(kind_of(est))) + ")"},
                        {"gains", "Kp=" + detail::g(gains.kp) + " Kd=" + detail::g(gains.kd)},
                        {"sign", std::string(to_string(gains.sign))},
                        {"object", cfg.object.name},
                        {"commanded_velocity", detail::g(cfg.commanded_velocity) + " cm/s"},
                        {"initial_position", detail::g(cfg.initial_position())},
                        {"max_ticks", std::to_string(scene.max_ticks)},
                        {"out", dir.string()}});
  sim::VerticalSlideEnv env(cfg);
  EpisodeTrace trace;
  std::visit(
      [&](const auto& d, const auto& e) {
        using D = std::decay_t<decltype(d)>;
        using E = std::decay_t<decltype(e)>;
        if constexpr ((std::is_same_v<D, ForestModel> || std::is_same_v<D, BoostModel>) &&
                      (std::is_same_v<E, MlpModel> || std::is_same_v<E, LstmModel>)) {
          trace = run_episode(env, d, e, gains, scene.max_ticks, scene.sim.features);
        }
      },
      det, est);
  const EpisodeReport r = episode_report(trace);
  std::ostringstream t, rep;
  write_trace(t, trace);
  write_episode_report(rep, r);
  detail::write_file(dir / "trace.csv", t.str());
  detail::write_file(dir / "report.csv", rep.str());
  out << "settling ticks " << r.settling_ticks << ", final hold " << r.final_hold_ticks << " ticks, peak slip "
      << detail::g(r.peak_true_severity) << " cm/s, severity MAE " << detail::g(r.severity.mae) << " cm/s (raw "
      << detail::g(r.severity_raw.mae) << "), misclassified ticks " << r.misclassifications << ", p in ["
      << detail::g(r.p_min) << ", " << detail::g(r.p_max) << "]\n";
  return kOk;
}

inline int cmd_selftest(const Options& o, std::ostream& out) {
  const std::uint64_t seed = o.seed.value_or(0);
  detail::print_config(out, "selftest", {{"seed", std::to_string(seed)}, {"jobs", std::to_string(o.jobs)}});
  bool ok = true;
  for (const auto& c : run_selftest(seed)) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    ok &= c.pass;
  }
  out << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? kOk : kSelftest;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tactile slip detection, severity estimation and slip-mitigation control"};
  app.name("lsds");
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed (overrides the scene seed; default 0)");
    sub->add_option("--jobs", o.jobs, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  };
  auto scene_opt = [&](CLI::App* sub) {
    sub->add_option("--scene", o.scene, "LSDS-SCENE v1 configuration file");
  };
  auto out_opt = [&](CLI::App* sub) { sub->add_option("--out", o.out, "Output directory"); };
  auto set_opt = [&](CLI::App* sub) {
    sub->add_option("--feature-set", o.feature_set, "baseline | proposed | combined")
        ->check(CLI::IsMember({"baseline", "proposed", "combined"}));
  };
  auto model_opt = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "rf | gb | mlp | lstm")->check(CLI::IsMember({"rf", "gb", "mlp", "lstm"}));
  };

  auto* gen = app.add_subcommand("gen", "Generate the detection and severity corpora");
  common(gen);
  scene_opt(gen);
  out_opt(gen);
  gen->add_option("--corpus", o.corpus, "detection | severity | both")->check(CLI::IsMember({"detection", "severity", "both"}));

  auto* train = app.add_subcommand("train", "Train one model on a dataset file");
  common(train);
  scene_opt(train);
  out_opt(train);
  set_opt(train);
  model_opt(train);
  train->add_option("--data", o.data, "LSDS-DATA v1 dataset");

  auto* eval = app.add_subcommand("eval", "Cross-validate a model kind, or score a frozen model per object");
  common(eval);
  scene_opt(eval);
  out_opt(eval);
  set_opt(eval);
  model_opt(eval);
  eval->add_option("--data", o.data, "LSDS-DATA v1 dataset");
  eval->add_option("--load", o.load, "Frozen LSDS-MODEL v1 file to score");
  eval->add_option("--split", o.split, "kfold | looo")->check(CLI::IsMember({"kfold", "looo"}));
  eval->add_option("--folds", o.folds, "Folds for --split kfold")->check(CLI::Range(2, 1000));

  auto* control = app.add_subcommand("control", "Run the closed-loop vertical sliding episode");
  common(control);
  scene_opt(control);
  out_opt(control);
  control->add_option("--gains", o.gains, "Kp,Kd (default 3.10,0.42)");
  control->add_option("--sign", o.sign, "tighten | literal")->check(CLI::IsMember({"tighten", "literal"}));
  control->add_option("--detector", o.detector, "Slip detector model (rf or gb)");
  control->add_option("--estimator", o.estimator, "Severity estimator model (mlp or lstm)");

  auto* selftest = app.add_subcommand("selftest", "Run the analytic-oracle and gradient-check suites");
  common(selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (control->parsed()) return cmd_control(o, out);
    if (selftest->parsed()) return cmd_selftest(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "file error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const LoadError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << '\n';
    return kTraining;
  } catch (const SplitError& e) {
    err << "training error: " << e.what() << '\n';
    return kTraining;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace lsds::cli
