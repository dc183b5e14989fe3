#pragma once

// Built-in checks run by `lsds selftest`: closed-form field values, the PD
// step arithmetic, gradient checks of both networks and a model round trip.

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lsds/lsds.hpp"

namespace lsds::cli {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace selftest_detail {

inline bool close(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

inline std::string num(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

inline MarkerField unit_lattice() { return MarkerField::lattice(7, 9, 1.0, 1.0, {4.0, 3.0}); }

inline CheckResult linear_field() {
  MarkerField f = unit_lattice();
  for (std::size_t i = 0; i < f.size(); ++i) f.displacements[i] = {0.5 * f.ref_positions[i].x, 0.5 * f.ref_positions[i].y};
  const DivCurl dc = divergence_curl(f, {1.0, 1.0});
  return {"linear field: div 63, curl 0", close(dc.div, 63.0) && close(dc.curl, 0.0),
          "div " + num(dc.div) + " curl " + num(dc.curl)};
}

inline CheckResult constant_field() {
  MarkerField f = unit_lattice();
  for (auto& d : f.displacements) d = {0.7, 0.7};
  const DivCurl dc = divergence_curl(f, {1.0, 1.0});
  return {"constant field: div 0, curl 0", dc.div == 0.0 && dc.curl == 0.0,
          "div " + num(dc.div) + " curl " + num(dc.curl)};
}

inline CheckResult rotation_field() {
  MarkerField f = unit_lattice();
  const double w = 0.1;
  for (std::size_t i = 0; i < f.size(); ++i) f.displacements[i] = {-w * f.ref_positions[i].y, w * f.ref_positions[i].x};
  const DivCurl dc = divergence_curl(f, {1.0, 1.0});
  return {"rotation field: div 0, curl 12.6", close(dc.div, 0.0) && close(dc.curl, 12.6),
          "div " + num(dc.div) + " curl " + num(dc.curl)};
}

inline CheckResult velocities() {
  MarkerField a = MarkerField::standard();
  MarkerField b = a;
  for (auto& d : b.displacements) d = {0.12, 0.16};
  const MeanVelocity m = mean_net_velocity(marker_velocities(a, b, 0.04));
  return {"mean velocity (3, 4, 5)", close(m.vx, 3.0) && close(m.vy, 4.0) && close(m.net, 5.0),
          num(m.vx) + ", " + num(m.vy) + ", " + num(m.net)};
}

inline CheckResult contact_area() {
  DepthMap d = DepthMap::zeros();
  for (std::size_t i = 0; i < 7680; ++i) d.depth[i * 10] = 2.0;
  DepthMap edge = DepthMap::zeros();
  for (auto& z : edge.depth) z = 1.0;
  const double a = normalized_contact_area(d);
  const double e = normalized_contact_area(edge);
  return {"contact area 0.1, strict threshold", a == 0.1 && e == 0.0, num(a) + ", " + num(e)};
}

inline CheckResult entropy() {
  MarkerField f = MarkerField::lattice(8, 8, 1.0, 1.0);
  for (std::size_t i = 0; i < 64; ++i) f.displacements[i] = {0.625 * static_cast<double>(i / 4) + 0.3, 0.0};
  MarkerField same = MarkerField::standard();
  for (auto& d : same.displacements) d = {1.5, 0.0};
  const double h = displacement_entropy(f);
  const double z = displacement_entropy(same);
  return {"entropy: uniform 16 bins 4 bits, identical 0", close(h, 4.0) && z == 0.0, num(h) + ", " + num(z)};
}

inline CheckResult ewma_and_rate() {
  EwmaState s = EwmaState::with_alpha(0.3);
  s = ewma_update(s, 10.0);
  s = ewma_update(s, 20.0);
  const double r = temporal_rate(1.0, 1.5, 0.04);
  return {"EWMA 10 -> 13, rate 12.5", close(s.value, 13.0) && close(r, 12.5), num(s.value) + ", " + num(r)};
}

inline CheckResult pd_arithmetic() {
  const PdGains g{3.10, 0.42, PdSign::Tighten};
  const PdStep a = pd_step({0.0, 100.0}, true, 2.56, g);
  const PdStep b = pd_step({0.0, 222.0}, true, 2.56, g);
  const PdStep c = pd_step({1.0, 100.0}, false, 5.0, g);
  const bool ok = close(a.adjustment, 9.0112) && close(a.p_new, 109.0112) && b.p_new == 225.0 && c.p_new == 100.0 &&
                  c.state.e_previous == 1.0;
  return {"PD step 100 -> 109.0112, clamp 225, hold", ok, num(a.p_new) + ", " + num(b.p_new) + ", " + num(c.p_new)};
}

inline RegressionData random_regression(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SeveritySample> ss;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, kNumFeatures> a{};
    for (double& v : a) v = normal(rng);
    ss.push_back({from_array(a), uniform(rng, 0.0, 5.0), "obj", static_cast<std::uint32_t>(i / 8)});
  }
  RegressionData d = to_regression_data(ss, FeatureSet::Combined);
  return d;
}

inline CheckResult gradients(std::uint64_t seed) {
  const RegressionData d = random_regression(24, seed);
  double worst = 0.0;
  {
    MlpModel m = init_mlp(kNumFeatures, FeatureSet::Combined, seed);
    m.norm = Standardizer::fit(d.x, d.y);
    const std::vector<std::uint32_t> rows{0, 3, 5, 8, 13, 21};
    const Mat x = detail::normalized_rows(d, rows, m.norm);
    const Mat y = detail::normalized_targets(d, rows, m.norm);
    Rng rng(derive_seed(seed, 1));
    const MlpMasks masks = mlp_masks(m, x.cols(), rng);
    for (double e : gradient_check(m, [&](const MlpModel& mm, std::vector<Mat>* g) { return mlp_loss(mm, x, y, &masks, g); })) {
      worst = std::max(worst, e);
    }
  }
  {
    LstmModel m = init_lstm(kNumFeatures, FeatureSet::Combined, seed);
    m.norm = Standardizer::fit(d.x, d.y);
    const std::vector<std::uint32_t> rows{2, 9, 17};
    const auto xs = detail::window_inputs(d, rows, m.norm);
    const Mat y = detail::normalized_targets(d, rows, m.norm);
    Rng rng(derive_seed(seed, 2));
    const LstmMasks masks = lstm_masks(m, y.cols(), rng);
    for (double e : gradient_check(m, [&](const LstmModel& mm, std::vector<Mat>* g) { return lstm_loss(mm, xs, y, &masks, g); })) {
      worst = std::max(worst, e);
    }
  }
  return {"gradient check MLP+LSTM, seed " + std::to_string(seed), worst <= 1e-4, "max rel error " + num(worst)};
}

inline CheckResult forest_round_trip() {
  Rng rng(11);
  std::vector<DetectionSample> ss;
  for (std::size_t i = 0; i < 200; ++i) {
    std::array<double, kNumFeatures> a{};
    for (double& v : a) v = normal(rng);
    ss.push_back({from_array(a), a[0] + 0.3 * a[3] > 0.0 ? 1 : 0, "obj", Scenario::Slip, 0});
  }
  auto hp = TreeHyperparams::random_forest();
  hp.n_estimators = 5;
  const ForestModel m = train_random_forest(std::span<const DetectionSample>(ss), hp);
  std::stringstream buf;
  save_model(buf, m);
  const ForestModel back = load_model<ForestModel>(buf);
  bool same = true;
  for (const auto& s : ss) {
    const auto x = select_features(s.features, FeatureSet::Combined);
    same &= predict_class(m, x).score == predict_class(back, x).score;
  }
  return {"forest save/load round trip", same && back.trees == m.trees, same ? "identical" : "predictions differ"};
}

}  // namespace selftest_detail

inline std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  using namespace selftest_detail;
  std::vector<std::function<CheckResult()>> checks = {
      linear_field, constant_field, rotation_field, velocities, contact_area, entropy, ewma_and_rate, pd_arithmetic,
      forest_round_trip};
  for (std::uint64_t s = 0; s < 3; ++s) checks.push_back([seed, s] { return gradients(derive_seed(seed, s)); });
  std::vector<CheckResult> out;
  for (auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"(check threw)", false, e.what()});
    }
  }
  return out;
}

}  // namespace lsds::cli
