#pragma once

// PD slip-mitigation step for a parallel gripper (0 = open, 225 = closed).
// The error is the estimated slip speed against a target of 0, and the
// derivative term is the plain difference e - e_previous with no division by
// the tick length.

#include <algorithm>
#include <optional>
#include <string_view>

#include "lsds/error.hpp"
#include "lsds/sim/object.hpp"

namespace lsds {

// Tighten closes the gripper on positive error (p + adjustment). Literal
// applies p - adjustment, which opens it.
enum class PdSign { Tighten, Literal };

inline std::string_view to_string(PdSign s) { return s == PdSign::Tighten ? "tighten" : "literal"; }

inline std::optional<PdSign> parse_pd_sign(std::string_view s) {
  if (s == "tighten") return PdSign::Tighten;
  if (s == "literal") return PdSign::Literal;
  return std::nullopt;
}

struct PdGains {
  double kp = 3.10;
  double kd = 0.42;
  PdSign sign = PdSign::Tighten;

  void validate() const {
    if (!(kp >= 0.0) || !(kd >= 0.0)) throw ConfigError("PD gains must be non-negative");
  }
};

struct PdState {
  double e_previous = 0.0;  // cm/s
  double p_current = 0.0;
};

struct PdStep {
  PdState state;
  double p_new = 0.0;
  double adjustment = 0.0;
};

inline PdStep pd_step(const PdState& state, bool slip_detected, double severity, const PdGains& gains) {
  if (!(severity >= 0.0)) throw DomainError("severity must be >= 0");
  PdStep out{state, state.p_current, 0.0};
  if (!slip_detected) return out;
  const double e = severity;  // target slip speed is 0
  const double de = e - state.e_previous;
  out.adjustment = gains.kp * e + gains.kd * de;
  const double raw = gains.sign == PdSign::Tighten ? state.p_current + out.adjustment : state.p_current - out.adjustment;
  out.p_new = std::max(std::min(raw, sim::kGripperMax), sim::kGripperMin);
  out.state.e_previous = e;
  out.state.p_current = out.p_new;
  return out;
}

}  // namespace lsds
