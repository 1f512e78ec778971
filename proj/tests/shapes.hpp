#pragma once

// Geometry helpers shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <random>

#include "vxai/phantom.hpp"
#include "vxai/volume.hpp"

namespace fixtures {

/// Thin 26-connected digital segment: one voxel per step along the
/// dominant axis.
inline void draw_line(vxai::Volume3D& m, vxai::Index3 a, vxai::Index3 b) {
  const int n = std::max({std::abs(b.x - a.x), std::abs(b.y - a.y), std::abs(b.z - a.z)});
  for (int i = 0; i <= n; ++i) {
    const double t = n == 0 ? 0.0 : double(i) / n;
    const vxai::Index3 p{int(std::lround(a.x + t * (b.x - a.x))), int(std::lround(a.y + t * (b.y - a.y))),
                         int(std::lround(a.z + t * (b.z - a.z)))};
    m.at(p) = 1.0f;
  }
}

/// Three thin arms of `arm` steps meeting at `c` in the z = c.z
/// plane: +x, (-x,+y) and (-x,-y).
inline vxai::Volume3D voxel_y(vxai::Dims d, vxai::Index3 c, int arm) {
  auto m = vxai::make_mask(d);
  draw_line(m, c, c + vxai::Index3{arm, 0, 0});
  draw_line(m, c, c + vxai::Index3{-arm, arm, 0});
  draw_line(m, c, c + vxai::Index3{-arm, -arm, 0});
  return m;
}

/// Union of `n` random cylinders (radius 1 to 2.5) inside `d`.
inline vxai::PhantomSpec random_tube_union(vxai::Dims d, int n, std::mt19937_64& rng) {
  vxai::PhantomSpec s{vxai::PhantomKind::composite, d, {}};
  std::uniform_real_distribution<double> rad(1.0, 2.5);
  for (int i = 0; i < n; ++i) {
    const double r = rad(rng);
    const double m = r + 1.0;
    auto coord = [&](int size) { return std::uniform_real_distribution<double>(m, size - 1 - m)(rng); };
    vxai::Point3 a{coord(d.nx), coord(d.ny), coord(d.nz)}, b{coord(d.nx), coord(d.ny), coord(d.nz)};
    if (vxai::distance(a, b) < 3.0) b.x = a.x < d.nx / 2.0 ? a.x + 3.0 : a.x - 3.0;
    s.primitives.emplace_back(vxai::Cylinder{a, b, r});
  }
  return s;
}

}  // namespace fixtures
