#pragma once

// LSDS-MODEL v1 text format:
//
//   LSDS-MODEL v1
//   kind rf|gb|mlp|lstm
//   feature_set baseline|proposed|combined
//   hyperparameters
//   <key> <value>            one per line
//   parameters
//   ...                      kind-specific, floats with 17 significant digits
//   end
//
// A file without the closing `end` line is treated as truncated.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lsds/error.hpp"
#include "lsds/features.hpp"
#include "lsds/learn/ensemble.hpp"
#include "lsds/learn/nn.hpp"

namespace lsds {

inline constexpr std::string_view kModelMagic = "LSDS-MODEL v1";

enum class ModelKind { Rf, Gb, Mlp, Lstm };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Rf: return "rf";
    case ModelKind::Gb: return "gb";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Lstm: return "lstm";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "rf") return ModelKind::Rf;
  if (s == "gb") return ModelKind::Gb;
  if (s == "mlp") return ModelKind::Mlp;
  if (s == "lstm") return ModelKind::Lstm;
  return std::nullopt;
}

inline ModelKind kind_of(const ForestModel&) { return ModelKind::Rf; }
inline ModelKind kind_of(const BoostModel&) { return ModelKind::Gb; }
inline ModelKind kind_of(const MlpModel&) { return ModelKind::Mlp; }
inline ModelKind kind_of(const LstmModel&) { return ModelKind::Lstm; }

using AnyModel = std::variant<ForestModel, BoostModel, MlpModel, LstmModel>;

namespace detail {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class ModelWriter {
 public:
  explicit ModelWriter(std::ostream& os) : os_(os) {}

  void kv(std::string_view key, double v) { os_ << key << ' ' << g17(v) << '\n'; }
  void kv(std::string_view key, std::size_t v) { os_ << key << ' ' << v << '\n'; }
  void kv(std::string_view key, std::string_view v) { os_ << key << ' ' << v << '\n'; }
  void line(std::string_view s) { os_ << s << '\n'; }

  void values(std::string_view key, const double* v, std::size_t n) {
    os_ << key << ' ' << n;
    for (std::size_t i = 0; i < n; ++i) os_ << ' ' << g17(v[i]);
    os_ << '\n';
  }

  void tree(const DecisionTree& t) {
    os_ << "tree " << t.nodes().size() << '\n';
    for (const TreeNode& n : t.nodes()) {
      os_ << n.feature << ' ' << g17(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << g17(n.value) << ' '
          << g17(n.weight) << '\n';
    }
  }

  void tensor(std::string_view name, const Mat& m) {
    os_ << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    // column-major, matching Eigen's storage
    for (Eigen::Index i = 0; i < m.size(); ++i) os_ << (i ? " " : "") << g17(m.data()[i]);
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

// Line-oriented reader; every failure is a LoadError naming the line.
class ModelReader {
 public:
  explicit ModelReader(std::istream& is) : is_(is) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw LoadError("model file line " + std::to_string(lineno_) + ": " + what);
  }

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(is_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::vector<std::string> toks;
      for (std::string t; ss >> t;) toks.push_back(std::move(t));
      return toks;
    }
    ++lineno_;
    throw LoadError("model file truncated at line " + std::to_string(lineno_));
  }

  std::string raw_line() {
    std::string line;
    if (!std::getline(is_, line)) throw LoadError("model file is empty");
    ++lineno_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  std::vector<std::string> expect(std::string_view key, std::size_t n_values) {
    auto toks = next();
    if (toks.empty() || toks[0] != key) fail("expected '" + std::string(key) + "'");
    if (toks.size() != n_values + 1) fail("'" + std::string(key) + "' takes " + std::to_string(n_values) + " value(s)");
    return toks;
  }

  double number(const std::string& s) const {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail("malformed number '" + s + "'");
    return v;
  }

  template <typename Int>
  Int integer(const std::string& s) const {
    Int v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail("malformed integer '" + s + "'");
    return v;
  }

  double real_kv(std::string_view key) { return number(expect(key, 1)[1]); }
  std::size_t size_kv(std::string_view key) { return integer<std::size_t>(expect(key, 1)[1]); }

  std::vector<double> values(std::string_view key) {
    auto toks = next();
    if (toks.size() < 2 || toks[0] != key) fail("expected '" + std::string(key) + "' value list");
    const auto n = integer<std::size_t>(toks[1]);
    if (toks.size() != n + 2) fail("'" + std::string(key) + "' declares " + std::to_string(n) + " values");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(number(toks[i + 2]));
    return out;
  }

  DecisionTree tree(std::size_t n_features) {
    const std::size_t n = integer<std::size_t>(expect("tree", 1)[1]);
    if (n == 0) fail("tree has no nodes");
    std::vector<TreeNode> nodes(n);
    for (auto& node : nodes) {
      auto toks = next();
      if (toks.size() != 6) fail("tree node needs 6 fields");
      node.feature = integer<std::int32_t>(toks[0]);
      node.threshold = number(toks[1]);
      node.left = integer<std::int32_t>(toks[2]);
      node.right = integer<std::int32_t>(toks[3]);
      node.value = number(toks[4]);
      node.weight = number(toks[5]);
    }
    // Children must point forward so prediction always terminates.
    for (std::size_t i = 0; i < n; ++i) {
      const TreeNode& node = nodes[i];
      if (node.is_leaf()) continue;
      if (static_cast<std::size_t>(node.feature) >= n_features) fail("tree node feature out of range");
      for (std::int32_t c : {node.left, node.right}) {
        if (c <= static_cast<std::int32_t>(i) || static_cast<std::size_t>(c) >= n) fail("tree node child out of range");
      }
    }
    return DecisionTree(std::move(nodes));
  }

  Mat tensor(std::string_view name, Eigen::Index rows, Eigen::Index cols) {
    auto head = next();
    if (head.size() != 4 || head[0] != "tensor" || head[1] != name) fail("expected tensor '" + std::string(name) + "'");
    if (integer<Eigen::Index>(head[2]) != rows || integer<Eigen::Index>(head[3]) != cols) {
      fail("tensor '" + std::string(name) + "' should be " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    auto toks = next();
    if (static_cast<Eigen::Index>(toks.size()) != rows * cols) fail("tensor '" + std::string(name) + "' has wrong length");
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = number(toks[static_cast<std::size_t>(i)]);
    return m;
  }

 private:
  std::istream& is_;
  std::size_t lineno_ = 0;
};

inline void write_tree_hp(ModelWriter& w, const TreeHyperparams& hp) {
  w.line("hyperparameters");
  w.kv("max_depth", hp.max_depth);
  w.kv("max_features", hp.max_features);
  w.kv("min_samples_leaf", hp.min_samples_leaf);
  w.kv("min_samples_split", hp.min_samples_split);
  w.kv("n_estimators", hp.n_estimators);
  w.kv("learning_rate", hp.learning_rate);
  w.kv("seed", static_cast<std::size_t>(hp.seed));
}

inline TreeHyperparams read_tree_hp(ModelReader& r) {
  r.expect("hyperparameters", 0);
  TreeHyperparams hp;
  hp.max_depth = r.size_kv("max_depth");
  hp.max_features = r.size_kv("max_features");
  hp.min_samples_leaf = r.size_kv("min_samples_leaf");
  hp.min_samples_split = r.size_kv("min_samples_split");
  hp.n_estimators = r.size_kv("n_estimators");
  hp.learning_rate = r.real_kv("learning_rate");
  hp.seed = r.integer<std::uint64_t>(r.expect("seed", 1)[1]);
  return hp;
}

template <typename Net>
void write_net(ModelWriter& w, const Net& m, const std::vector<std::string>& names) {
  w.line("hyperparameters");
  w.kv("learning_rate", m.config.learning_rate);
  w.kv("epochs", m.config.epochs);
  w.kv("batch_size", m.config.batch_size);
  w.kv("grad_clip", m.config.grad_clip);
  w.kv("seed", static_cast<std::size_t>(m.config.seed));
  w.kv("dropout", m.dropout);
  w.line("parameters");
  w.kv("n_inputs", m.n_inputs);
  w.kv("final_loss", m.final_loss);
  w.values("input_mean", m.norm.mean.data(), static_cast<std::size_t>(m.norm.mean.size()));
  w.values("input_scale", m.norm.scale.data(), static_cast<std::size_t>(m.norm.scale.size()));
  w.kv("target_mean", m.norm.y_mean);
  w.kv("target_scale", m.norm.y_scale);
  w.kv("tensors", m.params.size());
  for (std::size_t k = 0; k < m.params.size(); ++k) w.tensor(names[k], m.params[k]);
}

// `blank` supplies the expected tensor shapes for the declared input width.
template <typename Net, typename Init>
Net read_net(ModelReader& r, FeatureSet set, const std::vector<std::string>& names, Init&& blank) {
  r.expect("hyperparameters", 0);
  TrainConfig cfg;
  cfg.learning_rate = r.real_kv("learning_rate");
  cfg.epochs = r.size_kv("epochs");
  cfg.batch_size = r.size_kv("batch_size");
  cfg.grad_clip = r.real_kv("grad_clip");
  cfg.seed = r.integer<std::uint64_t>(r.expect("seed", 1)[1]);
  const double dropout = r.real_kv("dropout");
  r.expect("parameters", 0);
  const std::size_t n_inputs = r.size_kv("n_inputs");
  if (n_inputs != feature_count(set)) r.fail("n_inputs does not match the feature set");
  Net m = blank(n_inputs, set);
  m.config = cfg;
  m.dropout = dropout;
  m.final_loss = r.real_kv("final_loss");
  const auto mean = r.values("input_mean");
  const auto scale = r.values("input_scale");
  if (mean.size() != n_inputs || scale.size() != n_inputs) r.fail("standardizer width does not match n_inputs");
  m.norm.mean = Eigen::Map<const Vec>(mean.data(), static_cast<Eigen::Index>(n_inputs));
  m.norm.scale = Eigen::Map<const Vec>(scale.data(), static_cast<Eigen::Index>(n_inputs));
  m.norm.y_mean = r.real_kv("target_mean");
  m.norm.y_scale = r.real_kv("target_scale");
  if (r.size_kv("tensors") != m.params.size()) r.fail("wrong tensor count");
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    m.params[k] = r.tensor(names[k], m.params[k].rows(), m.params[k].cols());
  }
  return m;
}

inline std::vector<std::string> mlp_names() {
  std::vector<std::string> out;
  for (const char* n : MlpModel::param_names()) out.emplace_back(n);
  return out;
}

struct ModelHeader {
  ModelKind kind;
  FeatureSet feature_set;
};

inline ModelHeader read_header(ModelReader& r) {
  if (r.raw_line() != kModelMagic) throw LoadError("not an " + std::string(kModelMagic) + " file");
  const auto kind_tok = r.expect("kind", 1)[1];
  const auto kind = parse_model_kind(kind_tok);
  if (!kind) r.fail("unknown model kind '" + kind_tok + "'");
  const auto set_tok = r.expect("feature_set", 1)[1];
  const auto set = parse_feature_set(set_tok);
  if (!set) r.fail("unknown feature set '" + set_tok + "'");
  return {*kind, *set};
}

inline AnyModel read_body(ModelReader& r, const ModelHeader& h) {
  const std::size_t width = feature_count(h.feature_set);
  AnyModel out;
  switch (h.kind) {
    case ModelKind::Rf: {
      ForestModel m;
      m.feature_set = h.feature_set;
      m.hp = read_tree_hp(r);
      r.expect("parameters", 0);
      m.n_features = r.size_kv("n_features");
      if (m.n_features != width) r.fail("n_features does not match the feature set");
      const std::size_t n = r.size_kv("trees");
      for (std::size_t i = 0; i < n; ++i) m.trees.push_back(r.tree(m.n_features));
      out = std::move(m);
      break;
    }
    case ModelKind::Gb: {
      BoostModel m;
      m.feature_set = h.feature_set;
      m.hp = read_tree_hp(r);
      r.expect("parameters", 0);
      m.n_features = r.size_kv("n_features");
      if (m.n_features != width) r.fail("n_features does not match the feature set");
      m.effective_max_features = r.size_kv("effective_max_features");
      m.init_score = r.real_kv("init_score");
      m.loss_trace = r.values("loss_trace");
      const std::size_t n = r.size_kv("stages");
      for (std::size_t i = 0; i < n; ++i) m.stages.push_back(r.tree(m.n_features));
      out = std::move(m);
      break;
    }
    case ModelKind::Mlp:
      out = read_net<MlpModel>(r, h.feature_set, mlp_names(),
                               [](std::size_t n, FeatureSet s) { return init_mlp(n, s, 0); });
      break;
    case ModelKind::Lstm:
      out = read_net<LstmModel>(r, h.feature_set, LstmModel::param_names(),
                                [](std::size_t n, FeatureSet s) { return init_lstm(n, s, 0); });
      break;
  }
  r.expect("end", 0);
  return out;
}

}  // namespace detail

inline void save_model(std::ostream& os, const ForestModel& m) {
  detail::ModelWriter w(os);
  w.line(kModelMagic);
  w.kv("kind", to_string(ModelKind::Rf));
  w.kv("feature_set", to_string(m.feature_set));
  detail::write_tree_hp(w, m.hp);
  w.line("parameters");
  w.kv("n_features", m.n_features);
  w.kv("trees", m.trees.size());
  for (const auto& t : m.trees) w.tree(t);
  w.line("end");
}

inline void save_model(std::ostream& os, const BoostModel& m) {
  detail::ModelWriter w(os);
  w.line(kModelMagic);
  w.kv("kind", to_string(ModelKind::Gb));
  w.kv("feature_set", to_string(m.feature_set));
  detail::write_tree_hp(w, m.hp);
  w.line("parameters");
  w.kv("n_features", m.n_features);
  w.kv("effective_max_features", m.effective_max_features);
  w.kv("init_score", m.init_score);
  w.values("loss_trace", m.loss_trace.data(), m.loss_trace.size());
  w.kv("stages", m.stages.size());
  for (const auto& t : m.stages) w.tree(t);
  w.line("end");
}

inline void save_model(std::ostream& os, const MlpModel& m) {
  detail::ModelWriter w(os);
  w.line(kModelMagic);
  w.kv("kind", to_string(ModelKind::Mlp));
  w.kv("feature_set", to_string(m.feature_set));
  detail::write_net(w, m, detail::mlp_names());
  w.line("end");
}

inline void save_model(std::ostream& os, const LstmModel& m) {
  detail::ModelWriter w(os);
  w.line(kModelMagic);
  w.kv("kind", to_string(ModelKind::Lstm));
  w.kv("feature_set", to_string(m.feature_set));
  detail::write_net(w, m, LstmModel::param_names());
  w.line("end");
}

inline void save_model(std::ostream& os, const AnyModel& m) {
  std::visit([&](const auto& model) { save_model(os, model); }, m);
}

// The whole file is parsed before anything is returned, so a failed load
// never yields a partial model.
inline AnyModel load_any_model(std::istream& is) {
  detail::ModelReader r(is);
  const auto header = detail::read_header(r);
  return detail::read_body(r, header);
}

template <typename Model>
Model load_model(std::istream& is) {
  detail::ModelReader r(is);
  const auto header = detail::read_header(r);
  const ModelKind expected = kind_of(Model{});
  if (header.kind != expected) {
    throw LoadError("model kind mismatch: expected '" + std::string(to_string(expected)) + "', found '" +
                    std::string(to_string(header.kind)) + "'");
  }
  return std::get<Model>(detail::read_body(r, header));
}

template <typename Model>
void save_model(const std::string& path, const Model& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  save_model(os, m);
  if (!os) throw IoError("write to '" + path + "' failed");
}

inline AnyModel load_any_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return load_any_model(is);
}

template <typename Model>
Model load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return load_model<Model>(is);
}

inline ModelKind kind_of(const AnyModel& m) {
  return std::visit([](const auto& model) { return kind_of(model); }, m);
}

inline FeatureSet feature_set_of(const AnyModel& m) {
  return std::visit([](const auto& model) { return model.feature_set; }, m);
}

}  // namespace lsds
