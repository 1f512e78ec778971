#include "vxai/vessel_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "vxai/components.hpp"

namespace vxai {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Meijster et al. lower-envelope pass over one line: out[u] = min_i (u-i)^2 + h[i].
void envelope_pass(const std::vector<std::int64_t>& h, std::vector<std::int64_t>& out, std::vector<std::int64_t>& s,
                   std::vector<std::int64_t>& t) {
  const auto m = std::int64_t(h.size());
  auto f = [&](std::int64_t u, std::int64_t i) { return (u - i) * (u - i) + h[std::size_t(i)]; };
  auto sep = [&](std::int64_t i, std::int64_t u) {
    return floor_div(u * u - i * i + h[std::size_t(u)] - h[std::size_t(i)], 2 * (u - i));
  };
  s.assign(std::size_t(m), 0);
  t.assign(std::size_t(m), 0);
  std::int64_t q = 0;
  for (std::int64_t u = 1; u < m; ++u) {
    while (q >= 0 && f(t[std::size_t(q)], s[std::size_t(q)]) > f(t[std::size_t(q)], u)) --q;
    if (q < 0) {
      q = 0;
      s[0] = u;
    } else {
      const auto w = 1 + sep(s[std::size_t(q)], u);
      if (w < m) {
        ++q;
        s[std::size_t(q)] = u;
        t[std::size_t(q)] = w;
      }
    }
  }
  out.resize(std::size_t(m));
  for (std::int64_t u = m - 1; u >= 0; --u) {
    out[std::size_t(u)] = f(u, s[std::size_t(q)]);
    if (u == t[std::size_t(q)]) --q;
  }
}

}  // namespace

Field3<double> edt(const Volume3D& mask) {
  const auto& d = mask.dims();
  // One background voxel of padding on every side.
  const Dims pd{d.nx + 2, d.ny + 2, d.nz + 2};
  const std::int64_t big = std::int64_t(pd.nx) + pd.ny + pd.nz;
  std::vector<std::int64_t> sq(pd.count(), 0);

  // Along x: squared distance to the nearest background voxel in the row.
  for (int z = 0; z < pd.nz; ++z)
    for (int y = 0; y < pd.ny; ++y) {
      auto fg = [&](int x) {
        return x >= 1 && y >= 1 && z >= 1 && x <= d.nx && y <= d.ny && z <= d.nz && mask.at(x - 1, y - 1, z - 1) != 0.0f;
      };
      std::int64_t last = -big;
      std::vector<std::int64_t> g(std::size_t(pd.nx));
      for (int x = 0; x < pd.nx; ++x) {
        if (!fg(x)) last = x;
        g[std::size_t(x)] = x - last;
      }
      last = 2 * big;
      for (int x = pd.nx - 1; x >= 0; --x) {
        if (!fg(x)) last = x;
        g[std::size_t(x)] = std::min(g[std::size_t(x)], last - x);
        sq[pd.linear({x, y, z})] = g[std::size_t(x)] * g[std::size_t(x)];
      }
    }

  std::vector<std::int64_t> h, out, s, t;
  for (int z = 0; z < pd.nz; ++z)
    for (int x = 0; x < pd.nx; ++x) {
      h.resize(std::size_t(pd.ny));
      for (int y = 0; y < pd.ny; ++y) h[std::size_t(y)] = sq[pd.linear({x, y, z})];
      envelope_pass(h, out, s, t);
      for (int y = 0; y < pd.ny; ++y) sq[pd.linear({x, y, z})] = out[std::size_t(y)];
    }
  for (int y = 0; y < pd.ny; ++y)
    for (int x = 0; x < pd.nx; ++x) {
      h.resize(std::size_t(pd.nz));
      for (int z = 0; z < pd.nz; ++z) h[std::size_t(z)] = sq[pd.linear({x, y, z})];
      envelope_pass(h, out, s, t);
      for (int z = 0; z < pd.nz; ++z) sq[pd.linear({x, y, z})] = out[std::size_t(z)];
    }

  Field3<double> dist(d, 0.0);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        dist.at({x, y, z}) = std::sqrt(double(sq[pd.linear({x + 1, y + 1, z + 1})]));
  return dist;
}

double thickness_at(const Field3<double>& distance_field, const Index3& p) {
  if (!distance_field.dims.contains(p)) throw DomainError("thickness requested outside the distance field");
  const double v = distance_field.at(p);
  if (v <= 0.0) throw DomainError("thickness requested at a background voxel");
  return v;
}

ExclusionMask exclusion_mask(const Volume3D& gt_patch, const Index3& poi) {
  const auto& d = gt_patch.dims();
  if (!d.contains(poi)) throw DomainError("POI lies outside the patch");
  if (gt_patch.at(poi) == 0.0f) throw DomainError("POI lies on background");
  int radius = kMaxExclusionRadius;
  for (int r = kMinExclusionRadius; r <= kMaxExclusionRadius; ++r) {
    const int inner2 = r == kMinExclusionRadius ? -1 : (r - 1) * (r - 1);
    const int outer2 = r * r;
    std::size_t nv = 0, nb = 0;
    for (int dz = -r; dz <= r; ++dz)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int d2 = dx * dx + dy * dy + dz * dz;
          if (d2 <= inner2 || d2 > outer2) continue;
          const Index3 q = poi + Index3{dx, dy, dz};
          if (!d.contains(q)) continue;
          (gt_patch.at(q) != 0.0f ? nv : nb) += 1;
        }
    if (nv == 0 || double(nb) > kExclusionBackgroundRatio * double(nv)) {
      radius = r;
      break;
    }
  }
  ExclusionMask m{poi, radius, make_mask(d)};
  const int r2 = radius * radius;
  for (int dz = -radius; dz <= radius; ++dz)
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx) {
        const Index3 q = poi + Index3{dx, dy, dz};
        if (dx * dx + dy * dy + dz * dz <= r2 && d.contains(q)) m.mask.at(q) = 1.0f;
      }
  return m;
}

int relative_connectivity(const Volume3D& skeleton_patch, const ExclusionMask& excl, const Index3& poi) {
  const auto& d = skeleton_patch.dims();
  if (excl.mask.dims() != d) throw DomainError("exclusion mask and skeleton patch differ in size");
  if (!d.contains(poi)) throw DomainError("POI lies outside the patch");

  std::optional<Index3> seed;
  if (skeleton_patch.at(poi) != 0.0f) {
    seed = poi;
  } else {
    int best = 5;
    for (int dz = -2; dz <= 2; ++dz)
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const Index3 q = poi + Index3{dx, dy, dz};
          const int d2 = dx * dx + dy * dy + dz * dz;
          if (d2 < best && d.contains(q) && skeleton_patch.at(q) != 0.0f) {
            best = d2;
            seed = q;
          }
        }
  }
  if (!seed) throw DomainError("no skeleton voxel within 2 voxels of the POI");

  // Skeleton component of the POI, minus the exclusion sphere.
  const auto comps = label_components(skeleton_patch, Connectivity::full);
  const float label = comps.label_field.at(*seed);
  Volume3D remaining = make_mask(d);
  for (std::size_t i = 0; i < remaining.size(); ++i)
    if (comps.label_field[i] == label && excl.mask[i] == 0.0f) remaining[i] = 1.0f;
  return int(label_components(remaining, Connectivity::full).count());
}

PatchVesselSummary patch_vessel_summary(const Volume3D& gt_patch, const Index3& poi) {
  const auto comps = label_components(gt_patch, Connectivity::full);
  PatchVesselSummary s;
  s.component_count = comps.count();
  for (const auto& b : comps.blobs) s.total_volume += b.size;
  if (gt_patch.dims().contains(poi)) {
    const int label = label_at(comps, poi);
    if (label > 0) s.poi_component_volume = comps.blobs[std::size_t(label - 1)].size;
  }
  return s;
}

}  // namespace vxai
