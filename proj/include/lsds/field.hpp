#pragma once

// Deformation-field mathematics on the gel marker lattice: marker kinematics,
// discrete divergence/curl, contact area, displacement entropy, temporal rates
// and exponential smoothing. Everything here is a pure function of its inputs.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lsds/error.hpp"

namespace lsds {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

// Marker displacements of one sensor frame, stored row-major (row = image y,
// column = image x).
struct MarkerField {
  static constexpr std::size_t kDefaultRows = 7;
  static constexpr std::size_t kDefaultCols = 9;
  static constexpr double kDefaultPitch = 30.0;

  double timestamp = 0.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Vec2> ref_positions;
  std::vector<Vec2> displacements;

  std::size_t size() const noexcept { return rows * cols; }
  std::size_t index(std::size_t r, std::size_t c) const noexcept { return r * cols + c; }
  const Vec2& at(std::size_t r, std::size_t c) const { return displacements[index(r, c)]; }
  Vec2& at(std::size_t r, std::size_t c) { return displacements[index(r, c)]; }

  // Rectangular lattice with zero displacement, centred on `center`.
  static MarkerField lattice(std::size_t rows, std::size_t cols, double pitch_x, double pitch_y,
                             Vec2 center = {160.0, 120.0}) {
    MarkerField f;
    f.rows = rows;
    f.cols = cols;
    f.ref_positions.reserve(rows * cols);
    const double x0 = center.x - pitch_x * (static_cast<double>(cols) - 1.0) / 2.0;
    const double y0 = center.y - pitch_y * (static_cast<double>(rows) - 1.0) / 2.0;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        f.ref_positions.push_back({x0 + pitch_x * static_cast<double>(c),
                                   y0 + pitch_y * static_cast<double>(r)});
      }
    }
    f.displacements.assign(rows * cols, Vec2{});
    return f;
  }

  static MarkerField standard() {
    return lattice(kDefaultRows, kDefaultCols, kDefaultPitch, kDefaultPitch);
  }
};

// Throws GeometryError if array lengths or the lattice ordering are wrong.
inline void validate(const MarkerField& f) {
  const std::size_t n = f.rows * f.cols;
  if (f.displacements.size() != n || f.ref_positions.size() != n) {
    throw GeometryError("marker field arrays do not match a " + std::to_string(f.rows) + "x" +
                        std::to_string(f.cols) + " lattice");
  }
  for (std::size_t r = 0; r < f.rows; ++r) {
    for (std::size_t c = 0; c < f.cols; ++c) {
      const Vec2& p = f.ref_positions[f.index(r, c)];
      if (c > 0 && !(p.x > f.ref_positions[f.index(r, c - 1)].x)) {
        throw GeometryError("reference positions are not increasing along a row");
      }
      if (r > 0 && !(p.y > f.ref_positions[f.index(r - 1, c)].y)) {
        throw GeometryError("reference positions are not increasing along a column");
      }
    }
  }
}

inline bool same_lattice(const MarkerField& a, const MarkerField& b) {
  return a.rows == b.rows && a.cols == b.cols && a.ref_positions == b.ref_positions &&
         a.displacements.size() == b.displacements.size();
}

struct GridSpacing {
  double dx = MarkerField::kDefaultPitch;
  double dy = MarkerField::kDefaultPitch;

  // Pitch of the reference lattice; falls back to the default pitch along an
  // axis with a single marker.
  static GridSpacing from_lattice(const MarkerField& f) {
    GridSpacing s;
    if (f.cols > 1 && f.ref_positions.size() >= 2) s.dx = f.ref_positions[1].x - f.ref_positions[0].x;
    if (f.rows > 1 && f.ref_positions.size() > f.cols) {
      s.dy = f.ref_positions[f.cols].y - f.ref_positions[0].y;
    }
    return s;
  }
};

struct VelocityField {
  std::vector<Vec2> velocities;
  double dt = 0.0;
};

inline constexpr double kTickSeconds = 0.04;

inline void require_positive_dt(double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive, got " + std::to_string(dt));
}

// Per-marker finite-difference velocity between two frames.
inline VelocityField marker_velocities(const MarkerField& prev, const MarkerField& curr, double dt) {
  if (!same_lattice(prev, curr)) throw GeometryError("frames have different marker lattices");
  require_positive_dt(dt);
  VelocityField v;
  v.dt = dt;
  v.velocities.resize(curr.displacements.size());
  for (std::size_t i = 0; i < v.velocities.size(); ++i) {
    v.velocities[i] = {(curr.displacements[i].x - prev.displacements[i].x) / dt,
                       (curr.displacements[i].y - prev.displacements[i].y) / dt};
  }
  return v;
}

struct MeanVelocity {
  double vx = 0.0;
  double vy = 0.0;
  double net = 0.0;
};

inline MeanVelocity mean_net_velocity(const VelocityField& vel) {
  if (vel.velocities.empty()) throw DomainError("mean velocity of an empty field");
  double sx = 0.0;
  double sy = 0.0;
  for (const Vec2& v : vel.velocities) {
    sx += v.x;
    sy += v.y;
  }
  const double n = static_cast<double>(vel.velocities.size());
  MeanVelocity m{sx / n, sy / n, 0.0};
  m.net = std::hypot(m.vx, m.vy);
  return m;
}

struct DivCurl {
  double div = 0.0;
  double curl = 0.0;
};

// Field-summed discrete divergence and curl. Central differences at interior
// nodes, one-sided first differences on the lattice boundary.
inline DivCurl divergence_curl(const MarkerField& f, const GridSpacing& spacing) {
  if (f.rows < 3 || f.cols < 3) throw GeometryError("divergence/curl need at least a 3x3 lattice");
  if (f.displacements.size() != f.rows * f.cols) throw GeometryError("displacement array length");
  if (!(spacing.dx > 0.0) || !(spacing.dy > 0.0)) throw DomainError("grid spacing must be positive");

  // d/dx along a row and d/dy along a column for one component.
  auto ddx = [&](std::size_t r, std::size_t c, double Vec2::*comp) {
    if (c == 0) return (f.at(r, 1).*comp - f.at(r, 0).*comp) / spacing.dx;
    if (c + 1 == f.cols) return (f.at(r, c).*comp - f.at(r, c - 1).*comp) / spacing.dx;
    return (f.at(r, c + 1).*comp - f.at(r, c - 1).*comp) / (2.0 * spacing.dx);
  };
  auto ddy = [&](std::size_t r, std::size_t c, double Vec2::*comp) {
    if (r == 0) return (f.at(1, c).*comp - f.at(0, c).*comp) / spacing.dy;
    if (r + 1 == f.rows) return (f.at(r, c).*comp - f.at(r - 1, c).*comp) / spacing.dy;
    return (f.at(r + 1, c).*comp - f.at(r - 1, c).*comp) / (2.0 * spacing.dy);
  };

  DivCurl out;
  for (std::size_t r = 0; r < f.rows; ++r) {
    for (std::size_t c = 0; c < f.cols; ++c) {
      out.div += ddx(r, c, &Vec2::x) + ddy(r, c, &Vec2::y);
      out.curl += ddx(r, c, &Vec2::y) - ddy(r, c, &Vec2::x);
    }
  }
  return out;
}

inline double temporal_rate(double prev, double curr, double dt) {
  require_positive_dt(dt);
  return (curr - prev) / dt;
}

struct DepthMap {
  static constexpr std::size_t kDefaultWidth = 320;
  static constexpr std::size_t kDefaultHeight = 240;

  std::size_t width = kDefaultWidth;
  std::size_t height = kDefaultHeight;
  std::vector<double> depth;  // row-major, height rows of width pixels

  static DepthMap zeros(std::size_t width = kDefaultWidth, std::size_t height = kDefaultHeight) {
    return DepthMap{width, height, std::vector<double>(width * height, 0.0)};
  }
};

inline constexpr double kDefaultDepthThreshold = 1.0;

// Fraction of pixels strictly deeper than z_t.
inline double normalized_contact_area(const DepthMap& map, double z_t = kDefaultDepthThreshold) {
  const std::size_t n = map.width * map.height;
  if (n == 0 || map.depth.size() != n) throw GeometryError("depth map size does not match its dimensions");
  std::size_t count = 0;
  bool negative = false;
  for (double z : map.depth) {
    count += z > z_t ? 1u : 0u;
    negative |= z < 0.0;
  }
  if (negative) throw DomainError("depth map holds negative values");
  return static_cast<double>(count) / static_cast<double>(n);
}

struct EntropyBins {
  std::size_t bins = 16;
  double lo = 0.0;
  double hi = 10.0;
};

// Shannon entropy (bits) of the histogram of displacement magnitudes. Values
// outside [lo, hi] land in the edge bins.
inline double displacement_entropy(const MarkerField& f, const EntropyBins& cfg = {}) {
  if (cfg.bins < 2) throw DomainError("entropy needs at least two bins");
  if (!(cfg.hi > cfg.lo)) throw DomainError("entropy range must satisfy hi > lo");
  if (f.displacements.empty()) throw DomainError("entropy of an empty field");

  std::vector<std::size_t> hist(cfg.bins, 0);
  const double scale = static_cast<double>(cfg.bins) / (cfg.hi - cfg.lo);
  for (const Vec2& d : f.displacements) {
    const double pos = (std::hypot(d.x, d.y) - cfg.lo) * scale;
    std::size_t b = 0;
    if (pos >= static_cast<double>(cfg.bins)) {
      b = cfg.bins - 1;
    } else if (pos > 0.0) {
      b = static_cast<std::size_t>(pos);
    }
    ++hist[b];
  }
  const double n = static_cast<double>(f.displacements.size());
  double h = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h > 0.0 ? h : 0.0;
}

struct EwmaState {
  double alpha = 0.3;
  double value = 0.0;
  bool initialized = false;

  static EwmaState with_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("EWMA alpha must lie in (0, 1]");
    return EwmaState{alpha, 0.0, false};
  }
};

inline EwmaState ewma_update(EwmaState s, double x) {
  if (!s.initialized) {
    s.value = x;
    s.initialized = true;
  } else {
    s.value = s.alpha * x + (1.0 - s.alpha) * s.value;
  }
  return s;
}

}  // namespace lsds
