#pragma once

// Data-collection scenarios and the corpus generators built on them.
//
// A scenario is first planned as a contact trajectory (forces, slip state,
// gripper speed per tick), then rendered through a TactileSensor and the
// feature pipeline. Every stream gets its own seed derived from the corpus
// seed, the object name and the stream number, so streams can be generated
// in any order or in parallel.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "lsds/dataset.hpp"
#include "lsds/features.hpp"
#include "lsds/parallel.hpp"
#include "lsds/rng.hpp"
#include "lsds/sim/contact.hpp"
#include "lsds/sim/object.hpp"
#include "lsds/sim/sensor.hpp"

namespace lsds::sim {

struct ScenarioTick {
  TactileInput input;
  double gripper_speed = 0.0;  // cm/s relative to the object, before filtering
  bool disengaged = false;
};

using Trajectory = std::vector<ScenarioTick>;

struct DetectionProtocol {
  std::size_t static_streams = 10;
  std::size_t tightness_levels = 5;
  std::size_t ticks_per_level = 30;
  std::size_t grasp_increments = 10;
  std::size_t grasp_hold_ticks = 125;  // 5 s
  std::size_t slip_streams = 10;
  std::size_t slip_ticks = 150;
  double slip_velocity_min = 0.5;  // cm/s
  double slip_velocity_max = 7.5;
  std::size_t rotation_streams = 0;
  std::size_t rotation_ticks = 150;

  friend bool operator==(const DetectionProtocol&, const DetectionProtocol&) = default;
};

struct SeverityProtocol {
  std::vector<double> velocities{0.8, 2.3, 3.8, 4.5, 6.7};  // cm/s
  std::size_t repeats = 5;
  std::size_t rest_ticks = 12;
  std::size_t move_ticks = 60;
  std::size_t release_ticks = 16;
  std::size_t ramp_ticks = 5;
  double grip_force_min = 3.0;  // N
  double grip_force_max = 8.0;
  double speed_noise = 0.05;  // cm/s, tracking noise on the measured gripper speed

  friend bool operator==(const SeverityProtocol&, const SeverityProtocol&) = default;
};

struct SimConfig {
  SensorModel sensor{};
  FeatureConfig features{};
  DetectionProtocol detection{};
  SeverityProtocol severity{};
};

namespace detail {

inline std::uint64_t name_key(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

inline Vec2 unit(Vec2 v) {
  const double n = std::hypot(v.x, v.y);
  return n > 0.0 ? Vec2{v.x / n, v.y / n} : Vec2{0.0, 1.0};
}

inline ScenarioTick stuck_tick(const ObjectSpec& obj, double p, Vec2 load, double torque = 0.0) {
  ScenarioTick t;
  ContactState c;
  c.normal_force = normal_force(GripperState::at(p, obj), obj);
  c.tangential_load = std::hypot(load.x, load.y);
  t.input.contact = c;
  t.input.load_vector = load;
  t.input.load_direction = unit(load);
  t.input.torque = torque;
  return t;
}

// A tick of imposed slip at speed v (cm/s). The driving load sits on the
// static limit at onset and on the kinetic level afterwards.
inline ScenarioTick driven_slip_tick(const ObjectSpec& obj, double p, double v, bool onset) {
  ScenarioTick t;
  ContactState c;
  c.normal_force = normal_force(GripperState::at(p, obj), obj);
  c.tangential_load = (onset ? obj.mu_s * 1.01 : obj.mu_k) * c.normal_force;
  c.slipping = v > 0.0;
  c.v_slip = v > 0.0 ? v : 0.0;
  t.input.contact = c;
  t.input.load_direction = {0.0, 1.0};
  t.gripper_speed = c.v_slip;
  return t;
}

inline double clamp_p(double p) { return std::clamp(p, kGripperMin, kGripperMax); }

}  // namespace detail

// Arm moves the grasped object along a smooth path while the grip is
// tightened in `tightness_levels` steps. The grip always holds.
inline Trajectory static_trajectory(const ObjectSpec& obj, const DetectionProtocol& proto, Rng& rng) {
  const double amp = uniform(rng, 0.5, 2.0);  // m/s^2
  const double f1 = uniform(rng, 0.2, 0.8);
  const double f2 = uniform(rng, 0.2, 0.8);
  const double ph1 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double ph2 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double worst = obj.mass * (kGravity + 2.0 * amp);

  Trajectory out;
  double p_prev = 0.0;
  for (std::size_t level = 0; level < proto.tightness_levels; ++level) {
    const double margin = 1.2 + 0.35 * static_cast<double>(level);
    const double p_target = detail::clamp_p(obj.position_for_force(margin * worst / obj.mu_s));
    if (level == 0) p_prev = p_target;
    for (std::size_t k = 0; k < proto.ticks_per_level; ++k) {
      const double blend = std::min(1.0, static_cast<double>(k + 1) / 3.0);
      const double p = p_prev + (p_target - p_prev) * blend;
      const double t = static_cast<double>(out.size()) * kTickSeconds;
      const double ax = amp * std::sin(2.0 * std::numbers::pi * f1 * t + ph1);
      const double ay = amp * std::sin(2.0 * std::numbers::pi * f2 * t + ph2);
      const Vec2 load{obj.mass * ax, obj.mass * (kGravity + ay)};
      out.push_back(detail::stuck_tick(obj, p, load, 0.4 * obj.mass * ax));
    }
    p_prev = p_target;
  }
  return out;
}

// Object resting on a table; the gripper closes one position unit at a time,
// holding each step for `grasp_hold_ticks`.
inline Trajectory grasp_trajectory(const ObjectSpec& obj, const DetectionProtocol& proto, Rng& rng) {
  const double start = obj.p_contact + uniform(rng, 1.0, 3.0);
  Trajectory out;
  double p_prev = start;
  for (std::size_t step = 0; step <= proto.grasp_increments; ++step) {
    const double p_target = detail::clamp_p(start + static_cast<double>(step));
    const double share = uniform(rng, 0.0, 0.1);
    const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Vec2 load{share * obj.weight() * std::cos(angle), share * obj.weight() * std::sin(angle)};
    for (std::size_t k = 0; k < proto.grasp_hold_ticks; ++k) {
      const double blend = std::min(1.0, static_cast<double>(k + 1) / 2.0);
      out.push_back(detail::stuck_tick(obj, p_prev + (p_target - p_prev) * blend, load));
    }
    p_prev = p_target;
  }
  return out;
}

// Induced slip. Even-numbered streams drag the object at a wandering imposed
// speed; odd-numbered ones loosen the grip under gravity until it slips, then
// regrip, using grip_dynamics.
inline Trajectory slip_trajectory(const ObjectSpec& obj, const DetectionProtocol& proto, std::size_t index, Rng& rng) {
  Trajectory out;
  const std::size_t n = proto.slip_ticks;
  if (index % 2 == 0) {
    const double p = detail::clamp_p(obj.position_for_force(1.1 * obj.weight() / obj.mu_s));
    const std::size_t pre = 15 + uniform_index(rng, 16);
    const std::size_t len = std::min<std::size_t>(60 + uniform_index(rng, 41), n - pre - 5);
    const double target = uniform(rng, proto.slip_velocity_min, proto.slip_velocity_max);
    double v = target;
    for (std::size_t t = 0; t < n; ++t) {
      if (t < pre || t >= pre + len) {
        out.push_back(detail::stuck_tick(obj, p, {0.0, obj.weight()}));
        continue;
      }
      const std::size_t k = t - pre;
      v = std::clamp(v * (1.0 + 0.05 * normal(rng)), 0.6 * target, 1.4 * target);
      double scale = 1.0;
      if (k < 3) scale = static_cast<double>(k + 1) / 4.0;
      if (len - k <= 3) scale = static_cast<double>(len - k) / 4.0;
      out.push_back(detail::driven_slip_tick(obj, p, v * scale, k == 0));
    }
    return out;
  }

  const double amp = uniform(rng, 0.0, 1.0);
  const double freq = uniform(rng, 0.3, 1.0);
  const double hold_force = 1.15 * obj.mass * (kGravity + amp) / obj.mu_s;
  double p = detail::clamp_p(obj.position_for_force(hold_force));
  const double loosen = 0.15 * hold_force / obj.stiffness / uniform(rng, 15.0, 40.0);
  const double regrip = 0.08 * hold_force / obj.stiffness;
  enum class Phase { Loosen, React, Regrip, Hold } phase = Phase::Loosen;
  std::size_t wait = 0;
  ContactState c;
  for (std::size_t t = 0; t < n; ++t) {
    const double a = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) * kTickSeconds);
    const double demand = obj.mass * (kGravity + a);
    switch (phase) {
      case Phase::Loosen:
        p = detail::clamp_p(p - loosen);
        break;
      case Phase::React:
        if (wait == 0) phase = Phase::Regrip;
        else --wait;
        break;
      case Phase::Regrip:
        p = detail::clamp_p(p + regrip * uniform(rng, 0.5, 1.5));
        break;
      case Phase::Hold:
        if (wait == 0) phase = Phase::Loosen;
        else --wait;
        break;
    }
    c = grip_dynamics(GripperState::at(p, obj), obj, demand, kTickSeconds, c);
    if (phase == Phase::Loosen && c.slipping) {
      phase = Phase::React;
      wait = 1 + uniform_index(rng, 3);
    } else if (phase == Phase::Regrip && !c.slipping) {
      phase = Phase::Hold;
      wait = 8 + uniform_index(rng, 13);
    }
    ScenarioTick tick;
    tick.input.contact = c;
    tick.input.load_direction = {0.0, 1.0};
    tick.input.load_vector = {0.0, demand};
    tick.gripper_speed = c.v_slip;
    out.push_back(tick);
  }
  return out;
}

// Twisting the grasped object: oscillating torque with a breathing grip.
inline Trajectory rotation_trajectory(const ObjectSpec& obj, std::size_t ticks, Rng& rng) {
  const double torque_max = uniform(rng, 2.0, 4.0);  // N*cm
  const double freq = uniform(rng, 0.3, 0.8);
  const double base = 2.0 * obj.weight() / obj.mu_s;
  Trajectory out;
  for (std::size_t t = 0; t < ticks; ++t) {
    const double phase = 2.0 * std::numbers::pi * freq * static_cast<double>(t) * kTickSeconds;
    const double fn = base * (1.0 + 0.15 * std::sin(phase));
    const double p = detail::clamp_p(obj.position_for_force(fn));
    out.push_back(detail::stuck_tick(obj, p, {0.0, obj.weight()}, torque_max * std::sin(phase)));
  }
  return out;
}

// The object is clamped; the gripper slides along it at `velocity` with a
// light grip, then opens. Ground truth is the EWMA-filtered measured gripper
// speed, and exactly 0 once the fingers have let go.
struct SlideTrajectory {
  Trajectory ticks;
  std::vector<double> truth;
};

inline SlideTrajectory slide_trajectory(const ObjectSpec& obj, double velocity, const SeverityProtocol& proto,
                                        double ewma_alpha, Rng& rng) {
  if (!(velocity >= 0.0)) throw ConfigError("slide velocity must be >= 0");
  const double fn = uniform(rng, proto.grip_force_min, proto.grip_force_max);
  const double p = detail::clamp_p(obj.position_for_force(fn));
  SlideTrajectory out;
  EwmaState filter = EwmaState::with_alpha(ewma_alpha);
  for (std::size_t t = 0; t < proto.rest_ticks; ++t) {
    out.ticks.push_back(detail::stuck_tick(obj, p, {}));
    filter = ewma_update(filter, 0.0);
    out.truth.push_back(filter.value);
  }
  for (std::size_t k = 0; k < proto.move_ticks; ++k) {
    const double ramp = std::min(1.0, static_cast<double>(k + 1) / static_cast<double>(std::max<std::size_t>(proto.ramp_ticks, 1)));
    const double speed = velocity * ramp;
    out.ticks.push_back(detail::driven_slip_tick(obj, p, speed, k == 0));
    const double measured = std::max(0.0, speed + (speed > 0.0 ? proto.speed_noise * normal(rng) : 0.0));
    filter = ewma_update(filter, measured);
    out.truth.push_back(filter.value);
  }
  for (std::size_t t = 0; t < proto.release_ticks; ++t) {
    ScenarioTick tick;
    tick.disengaged = true;
    out.ticks.push_back(tick);
    out.truth.push_back(0.0);
  }
  return out;
}

// Renders a trajectory through a fresh sensor and feature extractor. `on_frame`
// (optional) sees every rendered frame alongside its features.
using FrameCallback = std::function<void(std::size_t, const SensorFrame&, const FeatureVector&)>;

inline std::vector<FeatureVector> render_stream(const ObjectSpec& obj, const Trajectory& traj, std::uint64_t seed,
                                                const SimConfig& cfg = {}, const FrameCallback& on_frame = {}) {
  TactileSensor sensor(obj, cfg.sensor, seed);
  FeatureExtractor extract(cfg.features);
  std::vector<FeatureVector> out;
  out.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const SensorFrame frame = sensor.tick(traj[t].input);
    out.push_back(quantize(extract(frame.field, frame.depth)));
    if (on_frame) on_frame(t, frame, out.back());
  }
  return out;
}

inline std::uint64_t stream_seed(std::uint64_t corpus_seed, const std::string& object, std::uint64_t stream) {
  return derive_seed(derive_seed(corpus_seed, detail::name_key(object)), stream);
}

// Detection corpus for one object: static, grasp, slip (and optional
// rotation) streams. Labels follow ContactState.slipping tick by tick.
inline std::vector<DetectionSample> detection_samples(const ObjectSpec& obj, std::uint64_t seed, const SimConfig& cfg = {}) {
  obj.validate();
  const DetectionProtocol& proto = cfg.detection;
  std::vector<DetectionSample> out;
  std::uint32_t sequence = 0;
  auto emit = [&](Scenario scenario, const Trajectory& traj) {
    const auto feats = render_stream(obj, traj, stream_seed(seed, obj.name, 0x5e9000 + sequence), cfg);
    for (std::size_t t = 0; t < traj.size(); ++t) {
      out.push_back({feats[t], traj[t].input.contact.slipping ? 1 : 0, obj.name, scenario, sequence});
    }
    ++sequence;
  };
  for (std::size_t s = 0; s < proto.static_streams; ++s) {
    Rng rng(stream_seed(seed, obj.name, sequence));
    emit(Scenario::Static, static_trajectory(obj, proto, rng));
  }
  {
    Rng rng(stream_seed(seed, obj.name, sequence));
    emit(Scenario::Grasp, grasp_trajectory(obj, proto, rng));
  }
  for (std::size_t s = 0; s < proto.slip_streams; ++s) {
    Rng rng(stream_seed(seed, obj.name, sequence));
    emit(Scenario::Slip, slip_trajectory(obj, proto, s, rng));
  }
  for (std::size_t s = 0; s < proto.rotation_streams; ++s) {
    Rng rng(stream_seed(seed, obj.name, sequence));
    emit(Scenario::Rotation, rotation_trajectory(obj, proto.rotation_ticks, rng));
  }
  return out;
}

// Severity corpus for one object: every velocity, `repeats` times. Each
// (velocity, repeat) pair is one contiguous sequence.
inline std::vector<SeveritySample> severity_samples(const ObjectSpec& obj, std::uint64_t seed, const SimConfig& cfg = {}) {
  obj.validate();
  const SeverityProtocol& proto = cfg.severity;
  std::vector<SeveritySample> out;
  std::uint32_t sequence = 0;
  for (double v : proto.velocities) {
    for (std::size_t r = 0; r < proto.repeats; ++r) {
      Rng rng(stream_seed(seed, obj.name, 0x5e7000 + sequence));
      const SlideTrajectory slide = slide_trajectory(obj, v, proto, cfg.features.ewma_alpha, rng);
      const auto feats = render_stream(obj, slide.ticks, stream_seed(seed, obj.name, 0x5e7800 + sequence), cfg);
      for (std::size_t t = 0; t < feats.size(); ++t) {
        out.push_back({feats[t], to_float32(slide.truth[t]), obj.name, sequence});
      }
      ++sequence;
    }
  }
  return out;
}

template <typename Sample, typename PerObject>
std::vector<Sample> concat_objects(const std::vector<ObjectSpec>& objects, std::size_t jobs, PerObject&& per_object) {
  if (objects.empty()) throw ConfigError("corpus generation needs at least one object");
  std::vector<std::vector<Sample>> parts(objects.size());
  parallel_for(objects.size(), jobs, [&](std::size_t i) { parts[i] = per_object(objects[i]); });
  std::vector<Sample> out;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.reserve(total);
  for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
  return out;
}

inline std::vector<DetectionSample> generate_detection_corpus(const std::vector<ObjectSpec>& objects, std::uint64_t seed,
                                                              const SimConfig& cfg = {}, std::size_t jobs = 1) {
  return concat_objects<DetectionSample>(objects, jobs, [&](const ObjectSpec& o) { return detection_samples(o, seed, cfg); });
}

inline std::vector<SeveritySample> generate_severity_corpus(const std::vector<ObjectSpec>& objects, std::uint64_t seed,
                                                            const SimConfig& cfg = {}, std::size_t jobs = 1) {
  return concat_objects<SeveritySample>(objects, jobs, [&](const ObjectSpec& o) { return severity_samples(o, seed, cfg); });
}

}  // namespace lsds::sim
