#pragma once

// Closed-loop episode: sensor frame -> features -> slip detector -> (only on
// detected slip) severity estimator -> PD step -> next gripper command.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>
#include <string>
#include <vector>

#include "lsds/control/pd.hpp"
#include "lsds/error.hpp"
#include "lsds/eval/metrics.hpp"
#include "lsds/features.hpp"
#include "lsds/learn/ensemble.hpp"
#include "lsds/learn/nn.hpp"
#include "lsds/sim/vertical.hpp"

namespace lsds {

struct TraceRow {
  double timestamp = 0.0;
  FeatureVector features;
  bool slip = false;
  double severity = 0.0;  // estimate, cm/s; 0 when no slip was detected
  double v_true = 0.0;    // cm/s
  double v_ref = 0.0;     // EWMA-filtered v_true, the quantity the estimator is trained on
  double p = 0.0;         // gripper position during this tick
};

struct EpisodeTrace {
  std::vector<TraceRow> rows;
  std::size_t estimator_calls = 0;
  double dt = kTickSeconds;
};

// Rolling window of the last kWindowLength feature vectors; before it fills,
// the oldest slots repeat the first vector.
class FeatureWindow {
 public:
  void push(const FeatureVector& v) {
    if (items_.empty()) {
      items_.assign(kWindowLength, v);
    } else {
      items_.pop_front();
      items_.push_back(v);
    }
  }

  std::vector<double> flatten(FeatureSet set) const {
    std::vector<double> out;
    for (const auto& v : items_) {
      const auto f = select_features(v, set);
      out.insert(out.end(), f.begin(), f.end());
    }
    return out;
  }

  const FeatureVector& latest() const { return items_.back(); }

 private:
  std::deque<FeatureVector> items_;
};

inline double estimate_severity(const MlpModel& m, const FeatureWindow& w) {
  const auto x = select_features(w.latest(), m.feature_set);
  return predict_severity(m, std::span<const double>(x));
}

inline double estimate_severity(const LstmModel& m, const FeatureWindow& w) {
  const auto x = w.flatten(m.feature_set);
  return predict_severity(m, std::span<const double>(x));
}

template <typename Detector, typename Estimator>
EpisodeTrace run_episode(sim::VerticalSlideEnv& env, const Detector& detector, const Estimator& estimator,
                         const PdGains& gains, std::size_t max_ticks, const FeatureConfig& features = {}) {
  gains.validate();
  if (detector.feature_set != FeatureSet::Combined || estimator.feature_set != FeatureSet::Combined) {
    throw ConfigError("closed-loop models must use the combined feature set (detector: " +
                      std::string(to_string(detector.feature_set)) +
                      ", estimator: " + std::string(to_string(estimator.feature_set)) + ")");
  }
  EpisodeTrace trace;
  FeatureExtractor extract(features);
  FeatureWindow window;
  PdState pd{0.0, env.config().initial_position()};
  for (std::size_t t = 0; t < max_ticks; ++t) {
    const sim::SlideStep step = env.step(pd.p_current, trace.dt);
    const FeatureVector fv = extract(step.frame.field, step.frame.depth, trace.dt);
    window.push(fv);
    TraceRow row;
    row.timestamp = step.frame.field.timestamp;
    row.features = fv;
    row.v_true = step.v_slip_true;
    row.v_ref = step.v_slip_measured;
    row.p = step.p;
    row.slip = predict_class(detector, fv).label == 1;
    if (row.slip) {
      row.severity = estimate_severity(estimator, window);
      ++trace.estimator_calls;
    }
    pd = pd_step(pd, row.slip, row.severity, gains).state;
    trace.rows.push_back(row);
  }
  return trace;
}

struct EpisodeReport {
  std::size_t ticks = 0;
  std::size_t settling_ticks = 0;     // ticks until the true slip speed is 0 for good
  std::size_t final_hold_ticks = 0;   // trailing ticks with true slip speed 0
  std::size_t slip_ticks = 0;         // ticks with true slip speed > 0
  double peak_true_severity = 0.0;
  // Over the slip phase: ticks where the true speed or the estimate is nonzero.
  RegressionReport severity;          // estimate vs filtered reference
  RegressionReport severity_raw;      // estimate vs unfiltered true speed
  std::size_t severity_ticks = 0;
  std::size_t misclassifications = 0; // slip flag disagrees with true slip
  double p_min = 0.0;
  double p_max = 0.0;
};

inline EpisodeReport episode_report(const EpisodeTrace& trace) {
  if (trace.rows.empty()) throw DomainError("episode trace is empty");
  EpisodeReport r;
  r.ticks = trace.rows.size();
  r.p_min = r.p_max = trace.rows.front().p;
  std::vector<double> ref, truth, est;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const TraceRow& row = trace.rows[i];
    const bool slipping = row.v_true > 0.0;
    if (slipping) {
      r.settling_ticks = i + 1;
      ++r.slip_ticks;
    }
    r.peak_true_severity = std::max(r.peak_true_severity, row.v_true);
    if (row.slip != slipping) ++r.misclassifications;
    if (row.v_true != 0.0 || row.severity != 0.0) {
      ref.push_back(row.v_ref);
      truth.push_back(row.v_true);
      est.push_back(row.severity);
    }
    r.p_min = std::min(r.p_min, row.p);
    r.p_max = std::max(r.p_max, row.p);
  }
  r.final_hold_ticks = r.ticks - r.settling_ticks;
  r.severity_ticks = truth.size();
  if (!truth.empty()) {
    r.severity = regression_metrics(ref, est);
    r.severity_raw = regression_metrics(truth, est);
  }
  return r;
}

inline void write_trace(std::ostream& os, const EpisodeTrace& trace) {
  os << "timestamp";
  for (auto name : combined_feature_names()) os << ',' << name;
  os << ",slip,severity,v_true,v_ref,p\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << buf;
  };
  for (const auto& row : trace.rows) {
    put(row.timestamp);
    for (double v : as_array(row.features)) {
      os << ',';
      put(v);
    }
    os << ',' << (row.slip ? 1 : 0) << ',';
    put(row.severity);
    os << ',';
    put(row.v_true);
    os << ',';
    put(row.v_ref);
    os << ',';
    put(row.p);
    os << '\n';
  }
}

inline void write_episode_report(std::ostream& os, const EpisodeReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "ticks,%zu\nsettling_ticks,%zu\nfinal_hold_ticks,%zu\nslip_ticks,%zu\npeak_true_severity,%.6f\n"
                "severity_ticks,%zu\nseverity_mae,%.6f\nseverity_rmse,%.6f\nseverity_r2,%.6f\nseverity_raw_mae,%.6f\n"
                "misclassifications,%zu\np_min,%.6f\np_max,%.6f\n",
                r.ticks, r.settling_ticks, r.final_hold_ticks, r.slip_ticks, r.peak_true_severity, r.severity_ticks,
                r.severity.mae, r.severity.rmse, r.severity.r2, r.severity_raw.mae, r.misclassifications, r.p_min, r.p_max);
  os << buf;
}

}  // namespace lsds
