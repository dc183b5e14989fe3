#pragma once

#include <string>
#include <vector>

#include "lsds/error.hpp"

namespace lsds::sim {

inline constexpr double kGravity = 9.81;  // m/s^2
inline constexpr double kGripperMin = 0.0;
inline constexpr double kGripperMax = 225.0;

// Physical and sensing parameters of a grasped object. Synthetic stand-ins;
// nothing here is a measured property of a real object.
struct ObjectSpec {
  std::string name;
  double mu_s = 0.6;             // static friction coefficient
  double mu_k = 0.5;             // kinetic friction coefficient, < mu_s
  double stiffness = 0.3;        // N of grip force per gripper position unit past contact
  double mass = 0.3;             // kg
  double texture_noise = 0.06;   // px, per-marker Gaussian noise while in contact
  double deformability = 0.1;    // 0 rigid .. 1 very soft
  double contact_radius = 60.0;  // px, contact patch radius at the reference force
  double p_contact = 120.0;      // gripper position at first contact

  void validate() const {
    if (!(mu_k > 0.0 && mu_k < mu_s)) throw ConfigError(name + ": need 0 < mu_k < mu_s");
    if (!(mass > 0.0)) throw ConfigError(name + ": mass must be positive");
    if (!(texture_noise >= 0.0)) throw ConfigError(name + ": texture noise must be >= 0");
    if (!(deformability >= 0.0 && deformability <= 1.0)) throw ConfigError(name + ": deformability must lie in [0,1]");
    if (!(stiffness > 0.0)) throw ConfigError(name + ": stiffness must be positive");
    if (!(contact_radius > 0.0)) throw ConfigError(name + ": contact radius must be positive");
    if (!(p_contact >= kGripperMin && p_contact < kGripperMax)) throw ConfigError(name + ": p_contact outside gripper range");
  }

  double weight() const { return mass * kGravity; }

  // Gripper position that produces normal force `fn`.
  double position_for_force(double fn) const { return p_contact + fn / stiffness; }

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

// Fifteen training objects spanning friction, mass, compliance and texture.
inline std::vector<ObjectSpec> training_objects() {
  //        name          mu_s  mu_k  stiff  mass  sigma def   radius p_contact
  return {
      {"mug",            0.70, 0.58, 0.40, 0.35, 0.05, 0.05, 62.0, 120.0},
      {"bottle",         0.55, 0.46, 0.35, 0.45, 0.04, 0.10, 58.0, 110.0},
      {"can",            0.50, 0.43, 0.45, 0.30, 0.04, 0.02, 55.0, 125.0},
      {"box",            0.65, 0.55, 0.30, 0.25, 0.07, 0.15, 70.0, 100.0},
      {"ball",           0.80, 0.66, 0.25, 0.20, 0.06, 0.35, 50.0, 115.0},
      {"tube",           0.60, 0.52, 0.35, 0.15, 0.05, 0.25, 52.0, 140.0},
      {"block",          0.75, 0.62, 0.50, 0.40, 0.08, 0.00, 72.0, 105.0},
      {"cup",            0.58, 0.49, 0.30, 0.18, 0.05, 0.20, 56.0, 130.0},
      {"marker",         0.62, 0.53, 0.40, 0.10, 0.06, 0.05, 42.0, 160.0},
      {"wallet",         0.85, 0.70, 0.22, 0.22, 0.09, 0.40, 66.0, 145.0},
      {"remote",         0.68, 0.57, 0.38, 0.16, 0.07, 0.10, 48.0, 135.0},
      {"foam",           0.90, 0.74, 0.18, 0.12, 0.10, 0.55, 64.0, 120.0},
      {"jar",            0.52, 0.45, 0.42, 0.50, 0.04, 0.03, 68.0,  95.0},
      {"cloth",          0.95, 0.78, 0.15, 0.14, 0.12, 0.50, 74.0, 150.0},
      {"toy",            0.72, 0.60, 0.28, 0.26, 0.08, 0.30, 54.0, 125.0},
  };
}

// Five objects never seen in training. The sponge is porous and very soft:
// small contact patch and heavy texture noise.
inline std::vector<ObjectSpec> heldout_objects() {
  return {
      {"book",     0.78, 0.64, 0.30, 0.40, 0.08, 0.30, 66.0, 110.0},
      {"scissors", 0.56, 0.47, 0.45, 0.15, 0.07, 0.05, 36.0, 165.0},
      {"plank",    0.64, 0.54, 0.50, 0.35, 0.05, 0.00, 70.0, 105.0},
      {"sponge",   0.92, 0.76, 0.12, 0.06, 0.22, 0.90, 30.0, 120.0},
      {"duster",   0.74, 0.61, 0.26, 0.12, 0.07, 0.40, 60.0, 130.0},
  };
}

// Smooth, slippery pipe used for the closed-loop sliding task.
inline ObjectSpec pipe_object() { return {"pipe", 0.45, 0.441, 0.05, 0.25, 0.05, 0.02, 58.0, 20.0}; }

inline const ObjectSpec* find_object(const std::vector<ObjectSpec>& objects, const std::string& name) {
  for (const auto& o : objects) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

}  // namespace lsds::sim
