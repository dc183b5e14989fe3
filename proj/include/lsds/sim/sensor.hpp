#pragma once

// Synthetic vision-based tactile sensor. Each tick turns a contact state into
// a 7x9 marker displacement field and a 320x240 depth map:
//
//   displacement = radial expansion ~ F_n     (divergence)
//                + uniform gel shear           (stick-slip sawtooth while slipping)
//                + in-plane twist ~ torque     (curl)
//                + Gaussian texture noise
//
// The depth map is a paraboloid contact patch whose radius and peak grow with
// F_n; slip and torsion make its peak flicker.

#include <algorithm>
#include <cmath>

#include "lsds/field.hpp"
#include "lsds/rng.hpp"
#include "lsds/sim/contact.hpp"
#include "lsds/sim/object.hpp"

namespace lsds::sim {

struct SensorModel {
  double radial_gain = 0.25;       // px per N at one reference radius
  double radial_scale = 100.0;     // px, reference radius for the radial profile
  double shear_compliance = 0.5;   // px of gel shear per N of tangential load while stuck
  double slip_gain = 3.0;          // px of gel drag per cm of slip
  double release_min = 0.8;        // px, gel stick-slip release span
  double release_max = 1.6;
  double shear_decay = 0.8;        // fraction of excess shear released at each stick-slip event
  double twist_gain = 0.08;        // rad-like twist per N*cm of torque
  double reference_force = 5.0;    // N, force at which the patch has its nominal radius
  double depth_gain = 3.0;         // depth units of the patch peak at the reference force
  double slip_depth_jitter = 0.12; // relative patch-peak flicker while slipping
  double twist_depth_jitter = 0.25;// relative flicker per unit torque
  double sensor_noise = 0.02;      // px, always present
  double slip_noise_gain = 0.6;    // extra texture noise while slipping, relative to sigma

  friend bool operator==(const SensorModel&, const SensorModel&) = default;
};

// Everything the sensor needs to render one tick.
struct TactileInput {
  ContactState contact;
  Vec2 load_direction{0.0, 1.0};  // unit direction of tangential load and slip
  Vec2 load_vector{};             // tangential load as a vector, N (defaults to magnitude * direction)
  double torque = 0.0;            // N*cm about the patch centre
};

struct SensorFrame {
  MarkerField field;
  DepthMap depth;
};

// Per-stream sensor state: the gel's shear memory and the noise generator.
class TactileSensor {
 public:
  TactileSensor(ObjectSpec object, SensorModel model, std::uint64_t seed)
      : object_(std::move(object)), model_(model), rng_(seed), lattice_(MarkerField::standard()) {
    next_release_ = draw_release();
  }

  const ObjectSpec& object() const noexcept { return object_; }
  const SensorModel& model() const noexcept { return model_; }
  Vec2 shear() const noexcept { return shear_; }
  double time() const noexcept { return time_; }

  SensorFrame tick(const TactileInput& in, double dt = kTickSeconds) {
    require_positive_dt(dt);
    update_shear(in, dt);

    const ContactState& c = in.contact;
    const double fn = std::max(c.normal_force, 0.0);
    const double soft = object_.deformability;
    const double patch_radius = fn > 0.0 ? object_.contact_radius * (1.0 - 0.3 * soft) *
                                               std::cbrt(fn / model_.reference_force)
                                         : 0.0;

    SensorFrame out{lattice_, DepthMap::zeros()};
    out.field.timestamp = time_;
    time_ += dt;

    const double radial = model_.radial_gain * fn * (1.0 - 0.5 * soft);
    const double twist = model_.twist_gain * in.torque;
    const double spread = std::max(patch_radius, 1e-9) * 1.6;
    double sigma = model_.sensor_noise;
    if (c.in_contact()) {
      const double slip_part = c.slipping ? model_.slip_noise_gain * std::min(c.v_slip, 8.0) / 8.0 : 0.0;
      sigma += object_.texture_noise * (1.0 + slip_part);
    }
    const Vec2 centre{160.0, 120.0};
    for (std::size_t i = 0; i < out.field.size(); ++i) {
      const Vec2 q = out.field.ref_positions[i];
      const double xi = q.x - centre.x;
      const double eta = q.y - centre.y;
      const double w = fn > 0.0 ? std::exp(-(xi * xi + eta * eta) / (2.0 * spread * spread)) : 0.0;
      Vec2 d;
      d.x = (radial * xi / model_.radial_scale - twist * eta / model_.radial_scale) * w + shear_.x;
      d.y = (radial * eta / model_.radial_scale + twist * xi / model_.radial_scale) * w + shear_.y;
      if (sigma > 0.0) {
        d.x += sigma * normal(rng_);
        d.y += sigma * normal(rng_);
      }
      out.field.displacements[i] = d;
    }

    if (fn > 0.0) {
      double peak = model_.depth_gain * std::pow(fn / model_.reference_force, 2.0 / 3.0) * (1.0 - 0.6 * soft);
      double jitter = 0.0;
      if (c.slipping) jitter += model_.slip_depth_jitter;
      jitter += model_.twist_depth_jitter * std::min(std::abs(in.torque), 4.0) / 4.0;
      if (jitter > 0.0) peak *= std::max(0.0, 1.0 + jitter * normal(rng_));
      paint_patch(out.depth, centre, patch_radius, peak);
    }
    return out;
  }

 private:
  double draw_release() { return uniform(rng_, model_.release_min, model_.release_max); }

  void update_shear(const TactileInput& in, double dt) {
    const ContactState& c = in.contact;
    if (!c.in_contact()) {
      shear_ = {};
      stick_offset_ = {};
      was_slipping_ = false;
      return;
    }
    const Vec2 u = in.load_direction;
    if (!c.slipping) {
      Vec2 load = in.load_vector;
      if (load.x == 0.0 && load.y == 0.0) load = {u.x * c.tangential_load, u.y * c.tangential_load};
      const Vec2 elastic{model_.shear_compliance * load.x, model_.shear_compliance * load.y};
      // Re-sticking freezes whatever shear the slip left in the gel.
      if (was_slipping_) stick_offset_ = {shear_.x - elastic.x, shear_.y - elastic.y};
      shear_ = {stick_offset_.x + elastic.x, stick_offset_.y + elastic.y};
      was_slipping_ = false;
      return;
    }
    // Slipping: the gel is dragged along u and periodically lets go.
    const double floor = model_.shear_compliance * object_.mu_k * c.normal_force;
    double along = shear_.x * u.x + shear_.y * u.y;
    const Vec2 across{shear_.x - along * u.x, shear_.y - along * u.y};
    if (!was_slipping_) next_release_ = draw_release();
    along += model_.slip_gain * c.v_slip * dt;
    int events = 0;
    while (along > floor + next_release_ && events < 8) {
      along = floor + (along - floor) * (1.0 - model_.shear_decay);
      next_release_ = draw_release();
      ++events;
    }
    shear_ = {across.x + along * u.x, across.y + along * u.y};
    was_slipping_ = true;
  }

  static void paint_patch(DepthMap& map, Vec2 centre, double radius, double peak) {
    if (radius <= 0.0 || peak <= 0.0) return;
    const auto w = static_cast<std::ptrdiff_t>(map.width);
    const auto h = static_cast<std::ptrdiff_t>(map.height);
    const auto x0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(centre.x - radius)));
    const auto x1 = std::min<std::ptrdiff_t>(w - 1, static_cast<std::ptrdiff_t>(std::ceil(centre.x + radius)));
    const auto y0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(centre.y - radius)));
    const auto y1 = std::min<std::ptrdiff_t>(h - 1, static_cast<std::ptrdiff_t>(std::ceil(centre.y + radius)));
    const double r2 = radius * radius;
    for (std::ptrdiff_t y = y0; y <= y1; ++y) {
      for (std::ptrdiff_t x = x0; x <= x1; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - centre.x;
        const double dy = static_cast<double>(y) + 0.5 - centre.y;
        const double q = dx * dx + dy * dy;
        if (q < r2) map.depth[static_cast<std::size_t>(y * w + x)] = peak * (1.0 - q / r2);
      }
    }
  }

  ObjectSpec object_;
  SensorModel model_;
  Rng rng_;
  MarkerField lattice_;
  Vec2 shear_{};
  Vec2 stick_offset_{};
  double next_release_ = 1.0;
  bool was_slipping_ = false;
  double time_ = 0.0;
};

// One-shot form: renders a frame from a contact state with a caller-owned sensor.
inline SensorFrame synth_tick(TactileSensor& sensor, const TactileInput& in, double dt = kTickSeconds) {
  return sensor.tick(in, dt);
}

}  // namespace lsds::sim
