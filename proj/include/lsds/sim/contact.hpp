#pragma once

// Coulomb stick-slip between one gripper finger and the held object. Forces
// in N, slip velocity in cm/s, time in s.

#include <algorithm>
#include <cmath>

#include "lsds/error.hpp"
#include "lsds/field.hpp"
#include "lsds/sim/object.hpp"

namespace lsds::sim {

struct GripperState {
  double p = 0.0;          // 0 = fully open, 225 = fully closed
  double p_contact = 0.0;  // position at first contact
  double finger_gap_mm = 50.0;

  static GripperState at(double p, const ObjectSpec& obj) {
    GripperState g;
    g.p = std::clamp(p, kGripperMin, kGripperMax);
    g.p_contact = obj.p_contact;
    g.finger_gap_mm = 50.0 * (1.0 - g.p / kGripperMax);
    return g;
  }
};

struct ContactState {
  double normal_force = 0.0;      // F_n >= 0
  double tangential_load = 0.0;   // |F_t|
  bool slipping = false;
  double v_slip = 0.0;            // cm/s, 0 unless slipping
  double slip_distance = 0.0;     // cm travelled since the stream began
  Vec2 shear{};                   // accumulated gel shear, px

  bool in_contact() const noexcept { return normal_force > 0.0; }
};

inline double normal_force(const GripperState& g, const ObjectSpec& obj) {
  return obj.stiffness * std::max(g.p - g.p_contact, 0.0);
}

// Advances the contact one step. `prev` carries the slip velocity from the
// previous tick; the returned state has F_n and F_t for this tick.
inline ContactState grip_dynamics(const GripperState& gripper, const ObjectSpec& obj, double demand, double dt,
                                  const ContactState& prev = {}) {
  require_positive_dt(dt);
  ContactState c = prev;
  c.normal_force = normal_force(gripper, obj);
  c.tangential_load = std::abs(demand);

  const double static_limit = obj.mu_s * c.normal_force;
  const double kinetic = obj.mu_k * c.normal_force;
  if (!prev.slipping || prev.v_slip <= 0.0) {
    if (c.tangential_load <= static_limit) {
      c.slipping = false;
      c.v_slip = 0.0;
      return c;
    }
    // Onset: starts from rest and accelerates this step.
    c.slipping = true;
    c.v_slip = 100.0 * (c.tangential_load - kinetic) / obj.mass * dt;
  } else {
    // Kinetic friction opposes motion; it can stop the object but never reverse it.
    const double v = prev.v_slip + 100.0 * (c.tangential_load - kinetic) / obj.mass * dt;
    if (v <= 0.0) {
      c.v_slip = 0.0;
      c.slipping = false;
    } else {
      c.v_slip = v;
      c.slipping = true;
    }
  }
  c.slip_distance += c.v_slip * dt;
  return c;
}

}  // namespace lsds::sim
