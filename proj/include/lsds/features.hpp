#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsds/field.hpp"

namespace lsds {

// The nine tactile features of one tick. Column order is fixed by
// combined_feature_names().
struct FeatureVector {
  double timestamp = 0.0;
  double H = 0.0;
  double dH_dt = 0.0;
  double v_net = 0.0;
  double div = 0.0;
  double curl = 0.0;
  double d_div_dt = 0.0;
  double d_curl_dt = 0.0;
  double A_n = 0.0;
  double dA_n_dt = 0.0;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class FeatureSet { Baseline, Proposed, Combined };

inline constexpr std::size_t kNumFeatures = 9;

inline constexpr std::size_t feature_count(FeatureSet s) {
  switch (s) {
    case FeatureSet::Baseline: return 2;
    case FeatureSet::Proposed: return 7;
    case FeatureSet::Combined: return 9;
  }
  return 0;
}

inline constexpr std::array<std::string_view, kNumFeatures> combined_feature_names() {
  return {"H", "dH_dt", "v_net", "div", "curl", "d_div_dt", "d_curl_dt", "A_n", "dA_n_dt"};
}

inline std::string_view to_string(FeatureSet s) {
  switch (s) {
    case FeatureSet::Baseline: return "baseline";
    case FeatureSet::Proposed: return "proposed";
    case FeatureSet::Combined: return "combined";
  }
  return "?";
}

inline std::optional<FeatureSet> parse_feature_set(std::string_view s) {
  if (s == "baseline") return FeatureSet::Baseline;
  if (s == "proposed") return FeatureSet::Proposed;
  if (s == "combined") return FeatureSet::Combined;
  return std::nullopt;
}

inline std::array<double, kNumFeatures> as_array(const FeatureVector& v) {
  return {v.H, v.dH_dt, v.v_net, v.div, v.curl, v.d_div_dt, v.d_curl_dt, v.A_n, v.dA_n_dt};
}

inline FeatureVector from_array(const std::array<double, kNumFeatures>& a, double timestamp = 0.0) {
  return {timestamp, a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]};
}

// Baseline: [H, dH_dt]; Proposed: [v_net, div, curl, d_div_dt, d_curl_dt, A_n,
// dA_n_dt]; Combined: Baseline followed by Proposed.
inline std::vector<double> select_features(const FeatureVector& v, FeatureSet set) {
  const auto all = as_array(v);
  switch (set) {
    case FeatureSet::Baseline: return {all.begin(), all.begin() + 2};
    case FeatureSet::Proposed: return {all.begin() + 2, all.end()};
    case FeatureSet::Combined: return {all.begin(), all.end()};
  }
  return {};
}

struct FeatureConfig {
  EntropyBins entropy{};
  double depth_threshold = kDefaultDepthThreshold;
  // Unset: derive the pitch from the reference lattice.
  std::optional<GridSpacing> spacing;
  double ewma_alpha = 0.3;
};

// Temporal state of one sensor stream.
struct StreamState {
  std::optional<MarkerField> prev_field;
  double prev_H = 0.0;
  double prev_div = 0.0;
  double prev_curl = 0.0;
  double prev_A_n = 0.0;
  EwmaState truth_filter{};

  bool has_previous() const noexcept { return prev_field.has_value(); }
};

inline StreamState make_stream_state(const FeatureConfig& cfg = {}) {
  StreamState s;
  s.truth_filter = EwmaState::with_alpha(cfg.ewma_alpha);
  return s;
}

struct Extraction {
  StreamState state;
  FeatureVector features;
};

// Computes the nine features for one tick. The first frame of a stream has
// every rate feature (including v_net) equal to 0.
inline Extraction extract_features(StreamState state, const MarkerField& field, const DepthMap& depth,
                                   double dt, const FeatureConfig& cfg = {}) {
  require_positive_dt(dt);
  const GridSpacing spacing = cfg.spacing ? *cfg.spacing : GridSpacing::from_lattice(field);

  FeatureVector fv;
  fv.timestamp = field.timestamp;
  fv.H = displacement_entropy(field, cfg.entropy);
  const DivCurl dc = divergence_curl(field, spacing);
  fv.div = dc.div;
  fv.curl = dc.curl;
  fv.A_n = normalized_contact_area(depth, cfg.depth_threshold);

  if (state.prev_field) {
    fv.v_net = mean_net_velocity(marker_velocities(*state.prev_field, field, dt)).net;
    fv.dH_dt = temporal_rate(state.prev_H, fv.H, dt);
    fv.d_div_dt = temporal_rate(state.prev_div, fv.div, dt);
    fv.d_curl_dt = temporal_rate(state.prev_curl, fv.curl, dt);
    fv.dA_n_dt = temporal_rate(state.prev_A_n, fv.A_n, dt);
  } else {
    validate(field);
  }

  state.prev_field = field;
  state.prev_H = fv.H;
  state.prev_div = fv.div;
  state.prev_curl = fv.curl;
  state.prev_A_n = fv.A_n;
  return {std::move(state), fv};
}

// Stateful wrapper for streaming use.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureConfig cfg = {}) : cfg_(cfg), state_(make_stream_state(cfg)) {}

  FeatureVector operator()(const MarkerField& field, const DepthMap& depth, double dt = kTickSeconds) {
    Extraction e = extract_features(std::move(state_), field, depth, dt, cfg_);
    state_ = std::move(e.state);
    return e.features;
  }

  void reset() { state_ = make_stream_state(cfg_); }
  const StreamState& state() const noexcept { return state_; }
  const FeatureConfig& config() const noexcept { return cfg_; }

 private:
  FeatureConfig cfg_;
  StreamState state_;
};

}  // namespace lsds
