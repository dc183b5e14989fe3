#pragma once

// Independent reference implementations used to cross-check the library.
// They are deliberately written differently from the library code: gradient
// arrays instead of per-node stencils, long-double sums, edge searches
// instead of scaled indices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lsds/field.hpp"
#include "lsds/rng.hpp"

namespace oracle {

// Gradient of a 1-D sequence: central differences inside, one-sided at the ends.
inline std::vector<long double> gradient_1d(const std::vector<long double>& v, long double h) {
  const std::size_t n = v.size();
  std::vector<long double> g(n);
  g[0] = (v[1] - v[0]) / h;
  g[n - 1] = (v[n - 1] - v[n - 2]) / h;
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (v[i + 1] - v[i - 1]) / (2 * h);
  return g;
}

struct DivCurl {
  double div;
  double curl;
};

inline DivCurl div_curl(const lsds::MarkerField& f, double dx, double dy) {
  const std::size_t R = f.rows, C = f.cols;
  // Component grids: [r][c]
  std::vector<std::vector<long double>> ux(R, std::vector<long double>(C)), uy = ux;
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      ux[r][c] = f.displacements[r * C + c].x;
      uy[r][c] = f.displacements[r * C + c].y;
    }
  }
  long double div = 0, curl = 0;
  for (std::size_t r = 0; r < R; ++r) {
    const auto dux_dx = gradient_1d(ux[r], dx);
    const auto duy_dx = gradient_1d(uy[r], dx);
    for (std::size_t c = 0; c < C; ++c) {
      div += dux_dx[c];
      curl += duy_dx[c];
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<long double> colx(R), coly(R);
    for (std::size_t r = 0; r < R; ++r) {
      colx[r] = ux[r][c];
      coly[r] = uy[r][c];
    }
    const auto dux_dy = gradient_1d(colx, dy);
    const auto duy_dy = gradient_1d(coly, dy);
    for (std::size_t r = 0; r < R; ++r) {
      div += duy_dy[r];
      curl -= dux_dy[r];
    }
  }
  return {static_cast<double>(div), static_cast<double>(curl)};
}

struct Mean {
  double vx, vy, net;
};

inline Mean mean_velocity(const lsds::MarkerField& prev, const lsds::MarkerField& curr, double dt) {
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < curr.displacements.size(); ++i) {
    sx += (static_cast<long double>(curr.displacements[i].x) - prev.displacements[i].x) / dt;
    sy += (static_cast<long double>(curr.displacements[i].y) - prev.displacements[i].y) / dt;
  }
  const long double n = static_cast<long double>(curr.displacements.size());
  const long double mx = sx / n, my = sy / n;
  return {static_cast<double>(mx), static_cast<double>(my), static_cast<double>(std::sqrt(mx * mx + my * my))};
}

// Bins by searching the edge list; values beyond either end go to the edge bins.
inline double entropy(const lsds::MarkerField& f, std::size_t bins, double lo, double hi) {
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  std::vector<long double> counts(bins, 0);
  for (const auto& d : f.displacements) {
    const double m = std::sqrt(d.x * d.x + d.y * d.y);
    auto it = std::upper_bound(edges.begin(), edges.end(), m);
    long idx = static_cast<long>(it - edges.begin()) - 1;
    idx = std::clamp<long>(idx, 0, static_cast<long>(bins) - 1);
    counts[static_cast<std::size_t>(idx)] += 1;
  }
  long double h = 0;
  const long double n = static_cast<long double>(f.displacements.size());
  for (long double c : counts) {
    if (c > 0) h -= (c / n) * std::log2(c / n);
  }
  return static_cast<double>(h);
}

inline double contact_area(const lsds::DepthMap& m, double zt) {
  const auto over = std::count_if(m.depth.begin(), m.depth.end(), [&](double z) { return z > zt; });
  return static_cast<double>(over) / static_cast<double>(m.depth.size());
}

// Weighted-sum form of the EWMA: x1 carries weight (1-a)^(k-1), x_j weight a(1-a)^(k-j).
inline double ewma(const std::vector<double>& xs, double a) {
  const std::size_t k = xs.size();
  long double v = std::pow(1.0L - a, static_cast<long double>(k - 1)) * xs[0];
  for (std::size_t j = 1; j < k; ++j) v += a * std::pow(1.0L - a, static_cast<long double>(k - 1 - j)) * xs[j];
  return static_cast<double>(v);
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b)});
  if (scale == 0.0) return 0.0;
  // absolute error near zero; relative elsewhere
  return std::abs(a - b) / std::max(scale, 1.0);
}

inline lsds::MarkerField random_field(lsds::Rng& rng, std::size_t rows = 7, std::size_t cols = 9, double scale = 3.0) {
  lsds::MarkerField f = lsds::MarkerField::lattice(rows, cols, lsds::uniform(rng, 10.0, 40.0), lsds::uniform(rng, 10.0, 40.0));
  for (auto& d : f.displacements) d = {scale * lsds::normal(rng), scale * lsds::normal(rng)};
  return f;
}

}  // namespace oracle
