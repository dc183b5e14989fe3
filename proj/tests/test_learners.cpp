#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lsds/learn/ensemble.hpp"
#include "lsds/learn/nn.hpp"
#include "lsds/model_io.hpp"

using namespace lsds;

namespace {

// Two interleaved classes: label = sign(x0 * x1), with noise features.
std::vector<DetectionSample> xor_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DetectionSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, kNumFeatures> a{};
    for (double& v : a) v = normal(rng);
    out.push_back({from_array(a), a[0] * a[3] > 0.0 ? 1 : 0, "obj", Scenario::Slip, 0});
  }
  return out;
}

double accuracy(const auto& model, const std::vector<DetectionSample>& ss) {
  std::size_t ok = 0;
  for (const auto& s : ss) ok += predict_class(model, s.features).label == s.label ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(ss.size());
}

// Sequences whose target is a smooth function of the features.
std::vector<SeveritySample> regression_samples(std::size_t sequences, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SeveritySample> out;
  for (std::uint32_t s = 0; s < sequences; ++s) {
    for (int t = 0; t < 20; ++t) {
      std::array<double, kNumFeatures> a{};
      for (double& v : a) v = normal(rng);
      out.push_back({from_array(a), std::max(0.0, 2.0 + a[2] + 0.5 * a[4]), "obj", s});
    }
  }
  return out;
}

TrainConfig quick(std::size_t epochs, std::uint64_t seed = 1) {
  TrainConfig c;
  c.epochs = epochs;
  c.learning_rate = 3e-3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Tree, GiniFitsSeparableDataExactly) {
  FeatureMatrix x(8, 1);
  std::vector<double> y(8), w(8, 1.0);
  for (std::size_t i = 0; i < 8; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i >= 5 ? 1.0 : 0.0;
  }
  Rng rng(1);
  const GrownTree g = grow_tree(to_columns(x), y, w, {}, rng);
  EXPECT_EQ(g.tree.depth(), 1u);
  EXPECT_EQ(g.tree.nodes()[0].threshold, 4.5);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(g.tree.predict(x.row(i)), y[i]);
}

TEST(Tree, RespectsDepthAndLeafSize) {
  const auto ss = xor_samples(600, 2);
  const auto d = to_classification_data(std::span<const DetectionSample>(ss), FeatureSet::Combined);
  const std::vector<double> w(ss.size(), 1.0);
  TreeGrowParams p;
  p.max_depth = 4;
  p.min_samples_leaf = 20;
  Rng rng(3);
  const GrownTree g = grow_tree(to_columns(d.x), d.y, w, p, rng);
  EXPECT_LE(g.tree.depth(), 4u);
  for (const auto& n : g.tree.nodes()) {
    if (n.is_leaf()) {
      EXPECT_GE(n.weight, 20.0);
    }
  }
}

TEST(Forest, LearnsXorAndIsDeterministicAcrossJobs) {
  const auto train = xor_samples(1500, 4), test = xor_samples(500, 5);
  auto hp = TreeHyperparams::random_forest();
  hp.n_estimators = 15;
  hp.seed = 9;
  const ForestModel a = train_random_forest(std::span<const DetectionSample>(train), hp);
  const ForestModel b = train_random_forest(std::span<const DetectionSample>(train), hp, FeatureSet::Combined, 3);
  EXPECT_EQ(a, b);
  EXPECT_GT(accuracy(a, test), 0.85);
  hp.seed = 10;
  EXPECT_NE(train_random_forest(std::span<const DetectionSample>(train), hp), a);
}

TEST(Forest, ScoreIsAFraction) {
  const auto ss = xor_samples(300, 6);
  auto hp = TreeHyperparams::random_forest();
  hp.n_estimators = 5;
  const ForestModel m = train_random_forest(std::span<const DetectionSample>(ss), hp);
  for (const auto& s : ss) {
    const auto p = predict_class(m, s.features);
    EXPECT_GE(p.score, 0.0);
    EXPECT_LE(p.score, 1.0);
    EXPECT_EQ(p.label, p.score >= 0.5 ? 1 : 0);
  }
}

TEST(Forest, RejectsSingleClassAndWrongWidth) {
  auto ss = xor_samples(50, 7);
  for (auto& s : ss) s.label = 1;
  EXPECT_THROW(train_random_forest(std::span<const DetectionSample>(ss), TreeHyperparams::random_forest()), TrainingError);
  const auto ok = xor_samples(100, 8);
  auto hp = TreeHyperparams::random_forest();
  hp.n_estimators = 2;
  const ForestModel m = train_random_forest(std::span<const DetectionSample>(ok), hp, FeatureSet::Baseline);
  const std::vector<double> x(9, 0.0);
  EXPECT_THROW(predict_class(m, std::span<const double>(x)), InferenceError);
  hp.n_estimators = 0;
  EXPECT_THROW(train_random_forest(std::span<const DetectionSample>(ok), hp), ConfigError);
}

TEST(Boosting, LossTraceNeverIncreasesAndLearnsXor) {
  const auto train = xor_samples(1500, 11), test = xor_samples(500, 12);
  auto hp = TreeHyperparams::gradient_boosting();
  hp.n_estimators = 40;
  hp.min_samples_leaf = 10;
  const BoostModel m = train_gradient_boosting(std::span<const DetectionSample>(train), hp);
  ASSERT_EQ(m.loss_trace.size(), 41u);
  for (std::size_t i = 1; i < m.loss_trace.size(); ++i) EXPECT_LE(m.loss_trace[i], m.loss_trace[i - 1] + 1e-12);
  EXPECT_GT(accuracy(m, test), 0.85);
}

TEST(Boosting, MaxFeaturesClampsToWidth) {
  const auto ss = xor_samples(400, 13);
  auto hp = TreeHyperparams::gradient_boosting();
  hp.n_estimators = 3;
  EXPECT_EQ(train_gradient_boosting(std::span<const DetectionSample>(ss), hp).effective_max_features, 9u);
  EXPECT_EQ(train_gradient_boosting(std::span<const DetectionSample>(ss), hp, FeatureSet::Baseline).effective_max_features, 2u);
  const auto alt = TreeHyperparams::gradient_boosting_alternate();
  EXPECT_EQ(alt.n_estimators, 450u);
  EXPECT_EQ(alt.max_depth, 9u);
}

TEST(Boosting, InitScoreIsPriorLogOdds) {
  auto ss = xor_samples(400, 14);
  std::size_t pos = 0;
  for (const auto& s : ss) pos += static_cast<std::size_t>(s.label);
  auto hp = TreeHyperparams::gradient_boosting();
  hp.n_estimators = 1;
  const BoostModel m = train_gradient_boosting(std::span<const DetectionSample>(ss), hp);
  const double p = static_cast<double>(pos) / 400.0;
  EXPECT_NEAR(m.init_score, std::log(p / (1 - p)), 1e-12);
}

// ---------------------------------------------------------------------------

TEST(Standardizer, FitsMeanAndPopulationScale) {
  FeatureMatrix x(4, 2);
  const double col0[] = {1, 2, 3, 4};
  for (std::size_t i = 0; i < 4; ++i) {
    x(i, 0) = col0[i];
    x(i, 1) = 5.0;
  }
  const std::vector<double> y{0, 0, 2, 2};
  const Standardizer s = Standardizer::fit(x, y);
  EXPECT_DOUBLE_EQ(s.mean(0), 2.5);
  EXPECT_DOUBLE_EQ(s.scale(0), std::sqrt(1.25));
  EXPECT_EQ(s.scale(1), 1.0);  // constant column
  EXPECT_DOUBLE_EQ(s.target(2.0), 1.0);
  EXPECT_DOUBLE_EQ(s.untarget(s.target(0.7)), 0.7);
}

TEST(RegressionData, WindowsArePaddedAtSequenceStarts) {
  std::vector<SeveritySample> ss;
  for (std::uint32_t i = 0; i < 9; ++i) ss.push_back({FeatureVector{}, 0.0, "o", i < 3 ? 0u : 1u});
  const RegressionData d = to_regression_data(std::span<const SeveritySample>(ss), FeatureSet::Combined);
  EXPECT_EQ(d.windows[0], (std::array<std::uint32_t, 5>{0, 0, 0, 0, 0}));
  EXPECT_EQ(d.windows[2], (std::array<std::uint32_t, 5>{0, 0, 0, 1, 2}));
  EXPECT_EQ(d.windows[4], (std::array<std::uint32_t, 5>{3, 3, 3, 3, 4}));
  EXPECT_EQ(d.windows[8], (std::array<std::uint32_t, 5>{4, 5, 6, 7, 8}));
}

TEST(Networks, GradientsMatchCentralDifferences) {
  const auto ss = regression_samples(3, 21);
  const RegressionData d = to_regression_data(std::span<const SeveritySample>(ss), FeatureSet::Combined);
  Rng rng(5);
  MlpModel mlp = init_mlp(kNumFeatures, FeatureSet::Combined, 5);
  mlp.norm = Standardizer::fit(d.x, d.y);
  const std::vector<std::uint32_t> rows{1, 8, 30, 44};
  const Mat x = detail::normalized_rows(d, rows, mlp.norm), y = detail::normalized_targets(d, rows, mlp.norm);
  const MlpMasks mm = mlp_masks(mlp, x.cols(), rng);
  for (double e : gradient_check(mlp, [&](const MlpModel& m, std::vector<Mat>* g) { return mlp_loss(m, x, y, &mm, g); })) {
    EXPECT_LE(e, 1e-4);
  }
  LstmModel lstm = init_lstm(kNumFeatures, FeatureSet::Combined, 5);
  lstm.norm = Standardizer::fit(d.x, d.y);
  const auto xs = detail::window_inputs(d, rows, lstm.norm);
  const LstmMasks lm = lstm_masks(lstm, y.cols(), rng);
  const auto errs = gradient_check(lstm, [&](const LstmModel& m, std::vector<Mat>* g) { return lstm_loss(m, xs, y, &lm, g); });
  EXPECT_EQ(errs.size(), LstmModel::param_names().size());
  for (double e : errs) EXPECT_LE(e, 1e-4);
}

TEST(Networks, MlpFitsConstantTarget) {
  auto ss = regression_samples(10, 22);
  for (auto& s : ss) s.v_slip = 3.0;
  const MlpModel early = train_mlp(std::span<const SeveritySample>(ss), quick(1));
  const MlpModel m = train_mlp(std::span<const SeveritySample>(ss), quick(80));
  EXPECT_TRUE(std::isfinite(m.final_loss));
  double err_early = 0.0, err = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    const auto x = select_features(ss[i].features, FeatureSet::Combined);
    err_early = std::max(err_early, std::abs(predict_severity(early, x) - 3.0));
    err = std::max(err, std::abs(predict_severity(m, x) - 3.0));
  }
  EXPECT_LT(err, 0.05);
  EXPECT_LT(err, 0.5 * err_early);
}

TEST(Networks, BothNetworksBeatTheMeanPredictor) {
  const auto train = regression_samples(40, 23), test = regression_samples(10, 24);
  const RegressionData td = to_regression_data(std::span<const SeveritySample>(test), FeatureSet::Combined);
  double mean = 0.0;
  for (const auto& s : train) mean += s.v_slip;
  mean /= static_cast<double>(train.size());
  double base = 0.0;
  for (double y : td.y) base += std::abs(y - mean);
  base /= static_cast<double>(td.y.size());
  auto mae = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - td.y[i]);
    return s / static_cast<double>(p.size());
  };
  const MlpModel mlp = train_mlp(std::span<const SeveritySample>(train), quick(30));
  const LstmModel lstm = train_lstm(std::span<const SeveritySample>(train), quick(15));
  EXPECT_LT(mae(predict_all(mlp, td)), 0.5 * base);
  EXPECT_LT(mae(predict_all(lstm, td)), 0.7 * base);
}

TEST(Networks, TrainingIsSeedDeterministic) {
  const auto ss = regression_samples(5, 25);
  const LstmModel a = train_lstm(std::span<const SeveritySample>(ss), quick(2, 4));
  const LstmModel b = train_lstm(std::span<const SeveritySample>(ss), quick(2, 4));
  const LstmModel c = train_lstm(std::span<const SeveritySample>(ss), quick(2, 5));
  ASSERT_EQ(a.params.size(), b.params.size());
  for (std::size_t k = 0; k < a.params.size(); ++k) EXPECT_TRUE(a.params[k] == b.params[k]);
  EXPECT_FALSE(a.params[0] == c.params[0]);
}

TEST(Networks, PredictionsAreNonNegativeAndShapeChecked) {
  const auto ss = regression_samples(5, 26);
  const MlpModel m = train_mlp(std::span<const SeveritySample>(ss), quick(1));
  const LstmModel l = train_lstm(std::span<const SeveritySample>(ss), quick(1));
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(kNumFeatures * kWindowLength);
    for (double& v : x) v = 10.0 * normal(rng);
    EXPECT_GE(predict_severity(l, x), 0.0);
    x.resize(kNumFeatures);
    EXPECT_GE(predict_severity(m, x), 0.0);
  }
  EXPECT_THROW(predict_severity(m, std::vector<double>(4)), ShapeError);
  EXPECT_THROW(predict_severity(l, std::vector<double>(kNumFeatures)), ShapeError);
  EXPECT_THROW(train_mlp(std::span<const SeveritySample>(ss), quick(0)), ConfigError);
}

// ---------------------------------------------------------------------------

namespace {

template <typename Model>
void expect_round_trip(const Model& m, std::size_t width) {
  std::stringstream buf;
  save_model(buf, m);
  const std::string text = buf.str();
  EXPECT_EQ(text.rfind("LSDS-MODEL v1\n", 0), 0u);
  const Model back = load_model<Model>(buf);
  std::stringstream again;
  save_model(again, back);
  EXPECT_EQ(again.str(), text);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(width);
    for (double& v : x) v = 3.0 * normal(rng);
    if constexpr (std::is_same_v<Model, ForestModel> || std::is_same_v<Model, BoostModel>) {
      ASSERT_EQ(predict_class(m, std::span<const double>(x)).score, predict_class(back, std::span<const double>(x)).score);
    } else {
      ASSERT_EQ(predict_severity(m, x), predict_severity(back, x));
    }
  }
}

ForestModel small_forest() {
  const auto ss = xor_samples(300, 31);
  auto hp = TreeHyperparams::random_forest();
  hp.n_estimators = 4;
  return train_random_forest(std::span<const DetectionSample>(ss), hp);
}

}  // namespace

TEST(ModelIo, RoundTripsEveryKind) {
  expect_round_trip(small_forest(), kNumFeatures);
  const auto ss = xor_samples(300, 32);
  auto hp = TreeHyperparams::gradient_boosting();
  hp.n_estimators = 5;
  hp.min_samples_leaf = 10;
  expect_round_trip(train_gradient_boosting(std::span<const DetectionSample>(ss), hp, FeatureSet::Proposed), 7);
  const auto rs = regression_samples(4, 33);
  expect_round_trip(train_mlp(std::span<const SeveritySample>(rs), quick(1), FeatureSet::Baseline), 2);
  expect_round_trip(train_lstm(std::span<const SeveritySample>(rs), quick(1)), kNumFeatures * kWindowLength);
}

TEST(ModelIo, AnyModelKeepsKindAndFeatureSet) {
  std::stringstream buf;
  save_model(buf, small_forest());
  const AnyModel m = load_any_model(buf);
  EXPECT_EQ(kind_of(m), ModelKind::Rf);
  EXPECT_EQ(feature_set_of(m), FeatureSet::Combined);
  for (auto k : {ModelKind::Rf, ModelKind::Gb, ModelKind::Mlp, ModelKind::Lstm}) EXPECT_EQ(parse_model_kind(to_string(k)), k);
}

TEST(ModelIo, TruncatedFileIsALoadError) {
  std::stringstream buf;
  save_model(buf, small_forest());
  const std::string text = buf.str();
  for (std::size_t cut : {text.size() / 3, text.size() / 2, text.size() - 5}) {
    std::istringstream is(text.substr(0, cut));
    EXPECT_THROW(load_model<ForestModel>(is), LoadError) << "cut at " << cut;
  }
  std::istringstream empty("");
  EXPECT_THROW(load_any_model(empty), LoadError);
}

TEST(ModelIo, WrongKindAndBadMagicAreRejected) {
  std::stringstream buf;
  save_model(buf, small_forest());
  try {
    load_model<LstmModel>(buf);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 'lstm'"), std::string::npos) << e.what();
  }
  std::istringstream bad("LSDS-MODEL v2\nkind rf\n");
  EXPECT_THROW(load_any_model(bad), LoadError);
}

TEST(ModelIo, CorruptTreeIndexIsRejected) {
  std::stringstream buf;
  save_model(buf, small_forest());
  std::string text = buf.str();
  // Point the root's left child back at itself.
  const auto at = text.find("\ntree ");
  ASSERT_NE(at, std::string::npos);
  const auto line = text.find('\n', at + 1) + 1;
  const auto end = text.find('\n', line);
  std::istringstream fields(text.substr(line, end - line));
  std::string feature, threshold, left, right, rest;
  fields >> feature >> threshold >> left >> right;
  std::getline(fields, rest);
  text.replace(line, end - line, feature + " " + threshold + " 0 " + right + rest);
  std::istringstream is(text);
  EXPECT_THROW(load_model<ForestModel>(is), LoadError);
}

TEST(Properties, ForestIgnoresTrainingOrder) {
  auto ss = xor_samples(800, 41);
  auto hp = TreeHyperparams::random_forest();
  hp.n_estimators = 8;
  hp.seed = 5;
  const ForestModel a = train_random_forest(std::span<const DetectionSample>(ss), hp);
  Rng rng(6);
  shuffle(std::span<DetectionSample>(ss), rng);
  const ForestModel b = train_random_forest(std::span<const DetectionSample>(ss), hp);
  const auto probe = xor_samples(300, 42);
  for (const auto& s : probe) ASSERT_EQ(predict_class(a, s.features).score, predict_class(b, s.features).score);
}

TEST(Properties, BoostingStagesAreAdditive) {
  const auto ss = xor_samples(500, 43);
  auto hp = TreeHyperparams::gradient_boosting();
  hp.n_estimators = 6;
  hp.min_samples_leaf = 10;
  const BoostModel m = train_gradient_boosting(std::span<const DetectionSample>(ss), hp);
  for (const auto& s : xor_samples(50, 44)) {
    const auto x = select_features(s.features, FeatureSet::Combined);
    const double full = raw_score(m, x, 6), less = raw_score(m, x, 5);
    ASSERT_NEAR(full - less, m.stages.back().predict(x), 1e-12);
  }
}
