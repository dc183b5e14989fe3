#pragma once

// Vertical sliding task: the gripper lifts a held pipe at a commanded speed.
// Gravity plus the lift acceleration is the tangential demand; an
// under-gripped start makes the pipe slip until the grip is tightened.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

#include "lsds/sim/contact.hpp"
#include "lsds/sim/object.hpp"
#include "lsds/sim/sensor.hpp"

namespace lsds::sim {

struct VerticalSlideConfig {
  ObjectSpec object = pipe_object();
  double commanded_velocity = 3.8;  // cm/s
  double accel_time = 0.5;          // s to reach the commanded speed
  double lift_delay = 0.4;          // s of holding still before the lift starts
  double actuation_time = 0.12;     // s, first-order lag of the finger servo
  double ewma_alpha = 0.3;          // filter of the measured slip speed
  double grip_margin = 0.995;       // initial grip as a fraction of the hold force at peak demand
  double drop_distance = 8.0;       // cm of slip after which the pipe leaves the fingers
  std::optional<double> start_position;  // overrides the margin-derived start
  SensorModel sensor{};
  std::uint64_t seed = 0;

  void validate() const {
    object.validate();
    if (!(commanded_velocity >= 0.0)) throw ConfigError("commanded velocity must be >= 0");
    if (!(accel_time > 0.0)) throw ConfigError("acceleration time must be positive");
    if (!(lift_delay >= 0.0)) throw ConfigError("lift delay must be >= 0");
    if (!(actuation_time >= 0.0)) throw ConfigError("actuation time must be >= 0");
    if (!(ewma_alpha > 0.0 && ewma_alpha <= 1.0)) throw ConfigError("EWMA alpha must lie in (0, 1]");
    if (!(grip_margin > 0.0)) throw ConfigError("grip margin must be positive");
    if (!(drop_distance > 0.0)) throw ConfigError("drop distance must be positive");
  }

  // Peak tangential demand during the lift, N.
  double peak_demand() const {
    return object.mass * (kGravity + commanded_velocity / accel_time / 100.0);
  }

  // Gripper position whose grip is `grip_margin` of what the peak demand needs.
  double initial_position() const {
    if (start_position) return std::clamp(*start_position, kGripperMin, kGripperMax);
    return std::clamp(object.position_for_force(grip_margin * peak_demand() / object.mu_s), kGripperMin, kGripperMax);
  }
};

struct SlideStep {
  SensorFrame frame;
  ContactState contact;
  double v_slip_true = 0.0;      // cm/s
  double v_slip_measured = 0.0;  // EWMA-filtered v_slip_true, the estimator's reference
  double gripper_velocity = 0.0;
  double p = 0.0;                // actual finger position after this tick
  bool dropped = false;
};

class VerticalSlideEnv {
 public:
  explicit VerticalSlideEnv(VerticalSlideConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))),
        sensor_(cfg_.object, cfg_.sensor, cfg_.seed),
        p_(cfg_.initial_position()),
        filter_(EwmaState::with_alpha(cfg_.ewma_alpha)) {}

  const VerticalSlideConfig& config() const noexcept { return cfg_; }
  double time() const noexcept { return time_; }
  bool dropped() const noexcept { return dropped_; }
  double position() const noexcept { return p_; }

  // Applies a gripper position command and advances one tick. The fingers
  // move toward the command with the servo lag.
  SlideStep step(double p_command, double dt = kTickSeconds) {
    require_positive_dt(dt);
    const double target = std::clamp(p_command, kGripperMin, kGripperMax);
    const double follow = cfg_.actuation_time > 0.0 ? 1.0 - std::exp(-dt / cfg_.actuation_time) : 1.0;
    p_ = std::clamp(p_ + (target - p_) * follow, kGripperMin, kGripperMax);
    const double p = p_;
    const double v_before = gripper_velocity(time_);
    time_ += dt;
    const double v_after = gripper_velocity(time_);
    const double accel = (v_after - v_before) / dt / 100.0;  // m/s^2
    const double demand = cfg_.object.mass * (kGravity + accel);

    SlideStep out;
    out.p = p;
    out.gripper_velocity = v_after;
    if (!dropped_) {
      contact_ = grip_dynamics(GripperState::at(p, cfg_.object), cfg_.object, demand, dt, contact_);
      if (contact_.slip_distance >= cfg_.drop_distance) dropped_ = true;
    }
    if (dropped_) {
      contact_ = ContactState{};
      contact_.slip_distance = cfg_.drop_distance;
    }
    TactileInput in;
    in.contact = contact_;
    in.load_direction = {0.0, 1.0};
    in.load_vector = {0.0, contact_.in_contact() ? demand : 0.0};
    out.frame = sensor_.tick(in, dt);
    out.contact = contact_;
    out.v_slip_true = contact_.v_slip;
    filter_ = ewma_update(filter_, contact_.v_slip);
    out.v_slip_measured = filter_.value;
    out.dropped = dropped_;
    return out;
  }

 private:
  double gripper_velocity(double t) const {
    const double moving = std::max(0.0, t - cfg_.lift_delay);
    return cfg_.commanded_velocity * std::min(1.0, moving / cfg_.accel_time);
  }

  VerticalSlideConfig cfg_;
  TactileSensor sensor_;
  ContactState contact_{};
  double p_ = 0.0;
  EwmaState filter_;
  double time_ = 0.0;
  bool dropped_ = false;
};

inline VerticalSlideEnv vertical_slide_env(const ObjectSpec& object, double commanded_velocity, double initial_p,
                                           std::uint64_t seed = 0) {
  VerticalSlideConfig cfg;
  cfg.object = object;
  cfg.commanded_velocity = commanded_velocity;
  cfg.start_position = initial_p;
  cfg.seed = seed;
  return VerticalSlideEnv(cfg);
}

}  // namespace lsds::sim
