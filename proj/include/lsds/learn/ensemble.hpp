#pragma once

// Slip-detection classifiers: a bagged random forest (Gini trees, majority
// vote) and binary gradient boosting (regression trees fitted to logistic-loss
// residuals).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lsds/dataset.hpp"
#include "lsds/error.hpp"
#include "lsds/features.hpp"
#include "lsds/learn/tree.hpp"
#include "lsds/parallel.hpp"
#include "lsds/rng.hpp"

namespace lsds {

struct TreeHyperparams {
  std::size_t max_depth = 20;
  std::size_t max_features = 3;
  std::size_t min_samples_leaf = 5;
  std::size_t min_samples_split = 10;
  std::size_t n_estimators = 40;
  double learning_rate = 0.1;  // boosting only
  std::uint64_t seed = 0;

  static TreeHyperparams random_forest() { return {20, 3, 5, 10, 40, 0.1, 0}; }
  // Depth 9, max_features 450 (clamped to the feature count), leaf size 115;
  // the remaining values are the usual library defaults.
  static TreeHyperparams gradient_boosting() { return {9, 450, 115, 2, 100, 0.1, 0}; }
  // Alternate reading of the same list with 450 as the stage count and every
  // feature considered at each split.
  static TreeHyperparams gradient_boosting_alternate() { return {9, kNumFeatures, 115, 2, 450, 0.1, 0}; }

  void validate() const {
    if (max_depth < 1 || max_features < 1 || min_samples_leaf < 1 || min_samples_split < 1 || n_estimators < 1) {
      throw ConfigError("tree hyperparameter counts must be >= 1");
    }
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  }

  friend bool operator==(const TreeHyperparams&, const TreeHyperparams&) = default;
};

struct ClassificationData {
  FeatureMatrix x;
  std::vector<double> y;  // 0 or 1
};

inline ClassificationData to_classification_data(std::span<const DetectionSample> samples, FeatureSet set) {
  ClassificationData d;
  d.x = FeatureMatrix(samples.size(), feature_count(set));
  d.y.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto f = select_features(samples[i].features, set);
    std::copy(f.begin(), f.end(), d.x.row(i).begin());
    d.y[i] = static_cast<double>(samples[i].label);
  }
  return d;
}

struct ClassPrediction {
  int label = 0;
  double score = 0.0;
};

inline int label_from_score(double score) { return score >= 0.5 ? 1 : 0; }

inline void check_two_classes(std::span<const double> y) {
  if (y.size() < 2) throw TrainingError("need at least two training samples");
  bool pos = false;
  bool neg = false;
  for (double v : y) {
    if (v == 1.0) {
      pos = true;
    } else if (v == 0.0) {
      neg = true;
    } else {
      throw TrainingError("class labels must be 0 or 1");
    }
  }
  if (!pos || !neg) throw TrainingError("training data holds a single class");
}

inline void check_dimension(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw InferenceError("feature vector has " + std::to_string(got) + " values, model expects " +
                         std::to_string(expected));
  }
}

// ---------------------------------------------------------------------------
// Random forest

struct ForestModel {
  FeatureSet feature_set = FeatureSet::Combined;
  std::size_t n_features = 0;
  TreeHyperparams hp;
  std::vector<DecisionTree> trees;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

namespace detail {

// Poisson(1) multiplicity from a 64-bit key. Keying on the sample's content
// rather than its position keeps the bootstrap independent of input order.
inline double poisson1(std::uint64_t key) {
  const double u = static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
  double p = 0.36787944117144233;  // e^-1
  double cdf = p;
  int k = 0;
  while (u > cdf && k < 20) {
    ++k;
    p /= k;
    cdf += p;
  }
  return static_cast<double>(k);
}

inline std::vector<std::uint64_t> sample_keys(const ClassificationData& d) {
  std::vector<std::uint64_t> keys(d.y.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    keys[i] = hash_doubles(d.x.row(i), static_cast<std::uint64_t>(d.y[i]) + 0x51ed);
  }
  return keys;
}

}  // namespace detail

inline ForestModel train_random_forest(const ClassificationData& data, const TreeHyperparams& hp,
                                       FeatureSet set = FeatureSet::Combined, std::size_t jobs = 1) {
  hp.validate();
  check_two_classes(data.y);
  const auto columns = to_columns(data.x);
  const auto keys = detail::sample_keys(data);

  ForestModel model;
  model.feature_set = set;
  model.n_features = data.x.cols;
  model.hp = hp;
  model.trees.resize(hp.n_estimators);

  TreeGrowParams gp;
  gp.max_depth = hp.max_depth;
  gp.max_features = hp.max_features;
  gp.min_samples_leaf = static_cast<double>(hp.min_samples_leaf);
  gp.min_samples_split = static_cast<double>(hp.min_samples_split);
  gp.criterion = SplitCriterion::Gini;

  parallel_for(hp.n_estimators, jobs, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(hp.seed, t);
    std::vector<double> w(keys.size());
    double total = 0.0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      w[i] = detail::poisson1(keys[i] ^ tree_seed);
      total += w[i];
    }
    if (total == 0.0) std::fill(w.begin(), w.end(), 1.0);
    Rng rng(derive_seed(tree_seed, 0xfea7));
    model.trees[t] = std::move(grow_tree(columns, data.y, w, gp, rng).tree);
  });
  return model;
}

inline ForestModel train_random_forest(std::span<const DetectionSample> samples, const TreeHyperparams& hp,
                                       FeatureSet set = FeatureSet::Combined, std::size_t jobs = 1) {
  return train_random_forest(to_classification_data(samples, set), hp, set, jobs);
}

inline ClassPrediction predict_class(const ForestModel& m, std::span<const double> x) {
  check_dimension(m.n_features, x.size());
  std::size_t votes = 0;
  for (const auto& t : m.trees) votes += t.predict(x) >= 0.5 ? 1u : 0u;
  const double score = static_cast<double>(votes) / static_cast<double>(m.trees.size());
  return {label_from_score(score), score};
}

// ---------------------------------------------------------------------------
// Gradient boosting

struct BoostModel {
  FeatureSet feature_set = FeatureSet::Combined;
  std::size_t n_features = 0;
  TreeHyperparams hp;
  std::size_t effective_max_features = 0;
  double init_score = 0.0;  // log-odds of the training prior
  std::vector<DecisionTree> stages;
  std::vector<double> loss_trace;  // mean training loss before stage 0 and after each stage

  friend bool operator==(const BoostModel&, const BoostModel&) = default;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^f) - y f, evaluated without overflow.
inline double logistic_loss(double y, double f) {
  return std::max(f, 0.0) + std::log1p(std::exp(-std::abs(f))) - y * f;
}

inline BoostModel train_gradient_boosting(const ClassificationData& data, const TreeHyperparams& hp,
                                          FeatureSet set = FeatureSet::Combined) {
  hp.validate();
  check_two_classes(data.y);
  const std::size_t n = data.y.size();
  const auto columns = to_columns(data.x);

  BoostModel model;
  model.feature_set = set;
  model.n_features = data.x.cols;
  model.hp = hp;
  model.effective_max_features = std::min(hp.max_features, data.x.cols);

  double pos = 0.0;
  for (double v : data.y) pos += v;
  const double prior = pos / static_cast<double>(n);
  model.init_score = std::log(prior / (1.0 - prior));

  std::vector<double> f(n, model.init_score);
  std::vector<double> residual(n);
  const std::vector<double> ones(n, 1.0);
  auto mean_loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += logistic_loss(data.y[i], f[i]);
    return s / static_cast<double>(n);
  };
  model.loss_trace.push_back(mean_loss());

  TreeGrowParams gp;
  gp.max_depth = hp.max_depth;
  gp.max_features = model.effective_max_features;
  gp.min_samples_leaf = static_cast<double>(hp.min_samples_leaf);
  gp.min_samples_split = static_cast<double>(hp.min_samples_split);
  gp.criterion = SplitCriterion::SquaredError;
  Rng rng(derive_seed(hp.seed, 0xb005));

  for (std::size_t stage = 0; stage < hp.n_estimators; ++stage) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = data.y[i] - sigmoid(f[i]);
    GrownTree g = grow_tree(columns, residual, ones, gp, rng);
    auto& nodes = g.tree.nodes();

    std::vector<std::vector<std::uint32_t>> members(nodes.size());
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(g.leaf_of[i])].push_back(static_cast<std::uint32_t>(i));

    for (std::size_t leaf = 0; leaf < nodes.size(); ++leaf) {
      if (!nodes[leaf].is_leaf()) continue;
      const auto& ids = members[leaf];
      double num = 0.0;
      double den = 0.0;
      for (auto i : ids) {
        const double p = sigmoid(f[i]);
        num += residual[i];
        den += p * (1.0 - p);
      }
      double step = std::abs(den) < 1e-150 ? 0.0 : hp.learning_rate * num / den;
      // Shrink the Newton step until the leaf's loss does not increase.
      auto leaf_loss = [&](double delta) {
        double s = 0.0;
        for (auto i : ids) s += logistic_loss(data.y[i], f[i] + delta);
        return s;
      };
      const double base = leaf_loss(0.0);
      int halvings = 0;
      while (step != 0.0 && leaf_loss(step) > base) {
        step = ++halvings > 60 ? 0.0 : step / 2.0;
      }
      nodes[leaf].value = step;
      for (auto i : ids) f[i] += step;
    }
    model.stages.push_back(std::move(g.tree));
    model.loss_trace.push_back(mean_loss());
  }
  return model;
}

inline BoostModel train_gradient_boosting(std::span<const DetectionSample> samples, const TreeHyperparams& hp,
                                          FeatureSet set = FeatureSet::Combined) {
  return train_gradient_boosting(to_classification_data(samples, set), hp, set);
}

// Pre-logistic score using the first `n_stages` stages.
inline double raw_score(const BoostModel& m, std::span<const double> x, std::size_t n_stages) {
  check_dimension(m.n_features, x.size());
  double s = m.init_score;
  const std::size_t k = std::min(n_stages, m.stages.size());
  for (std::size_t i = 0; i < k; ++i) s += m.stages[i].predict(x);
  return s;
}

inline ClassPrediction predict_class(const BoostModel& m, std::span<const double> x) {
  const double score = sigmoid(raw_score(m, x, m.stages.size()));
  return {label_from_score(score), score};
}

template <typename Model>
ClassPrediction predict_class(const Model& m, const FeatureVector& v) {
  const auto x = select_features(v, m.feature_set);
  return predict_class(m, std::span<const double>(x));
}

}  // namespace lsds
