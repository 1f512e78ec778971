#include "vxai/patch_grid.hpp"

#include <algorithm>
#include <cmath>

namespace vxai {

namespace {

std::vector<int> axis_starts(int dim, int patch, int stride) {
  std::vector<int> s;
  for (int start = 0; start + patch < dim; start += stride) s.push_back(start);
  const int last = dim - patch;
  // A regular start whose predecessor already reaches the clamped patch is
  // redundant and would put some voxels in three patches along this axis.
  while (s.size() >= 2 && s[s.size() - 2] + patch >= last) s.pop_back();
  if (s.empty() || s.back() != last) s.push_back(last);
  return s;
}

int axis_dim(const Dims& d, int axis) { return axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz; }

}  // namespace

bool PatchGrid::valid(const PatchIndex& idx) const {
  return idx.ix >= 0 && idx.iy >= 0 && idx.iz >= 0 && std::size_t(idx.ix) < starts[0].size() &&
         std::size_t(idx.iy) < starts[1].size() && std::size_t(idx.iz) < starts[2].size();
}

Index3 PatchGrid::origin(const PatchIndex& idx) const {
  if (!valid(idx)) throw DomainError("patch index out of range");
  return {starts[0][std::size_t(idx.ix)], starts[1][std::size_t(idx.iy)], starts[2][std::size_t(idx.iz)]};
}

bool PatchGrid::contains(const PatchIndex& idx, const Index3& p) const {
  const auto o = origin(idx);
  const auto l = p - o;
  return l.x >= 0 && l.y >= 0 && l.z >= 0 && l.x < patch_size && l.y < patch_size && l.z < patch_size;
}

std::vector<PatchIndex> PatchGrid::all() const {
  std::vector<PatchIndex> out;
  out.reserve(patch_count());
  for (int iz = 0; iz < int(starts[2].size()); ++iz)
    for (int iy = 0; iy < int(starts[1].size()); ++iy)
      for (int ix = 0; ix < int(starts[0].size()); ++ix) out.push_back({ix, iy, iz});
  return out;
}

PatchGrid build_patch_grid(Dims dims, int patch_size, double overlap_fraction) {
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 0.5))
    throw DomainError("overlap fraction must lie in [0, 0.5), got " + std::to_string(overlap_fraction));
  if (patch_size <= 0) throw DomainError("patch size must be positive");
  if (patch_size > dims.nx || patch_size > dims.ny || patch_size > dims.nz)
    throw DomainError("patch size " + std::to_string(patch_size) + " exceeds volume dims " + to_string(dims));
  PatchGrid g;
  g.volume_dims = dims;
  g.patch_size = patch_size;
  g.stride = std::max(1, int(std::lround((1.0 - overlap_fraction) * patch_size)));
  for (int a = 0; a < 3; ++a) g.starts[std::size_t(a)] = axis_starts(axis_dim(dims, a), patch_size, g.stride);
  return g;
}

std::vector<PatchIndex> patches_containing(const PatchGrid& grid, const Index3& p) {
  if (!grid.volume_dims.contains(p)) throw DomainError("voxel coordinate outside the patch grid volume");
  const int coord[3] = {p.x, p.y, p.z};
  std::array<std::vector<int>, 3> hits;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < grid.starts[a].size(); ++i) {
      const int s = grid.starts[a][i];
      if (coord[a] >= s && coord[a] < s + grid.patch_size) hits[a].push_back(int(i));
    }
  std::vector<PatchIndex> out;
  for (int iz : hits[2])
    for (int iy : hits[1])
      for (int ix : hits[0]) out.push_back({ix, iy, iz});
  return out;
}

Volume3D extract_patch(const Volume3D& v, const PatchGrid& grid, const PatchIndex& idx) {
  if (v.dims() != grid.volume_dims) throw DomainError("patch grid was built for different volume dims");
  const auto o = grid.origin(idx);
  const int p = grid.patch_size;
  const Dims pd{p, p, p};
  std::vector<float> data(pd.count());
  const auto src = v.data();
  for (int z = 0; z < p; ++z)
    for (int y = 0; y < p; ++y) {
      const auto s = v.dims().linear({o.x, o.y + y, o.z + z});
      std::copy_n(src.begin() + std::ptrdiff_t(s), p, data.begin() + std::ptrdiff_t(pd.linear({0, y, z})));
    }
  Volume3D out(pd, v.kind(), std::move(data));
  out.set_dtype(v.dtype());
  out.set_spacing(v.spacing());
  return out;
}

int border_distance(const PatchGrid& grid, const Index3& l) {
  const int last = grid.patch_size - 1;
  return std::min({l.x, l.y, l.z, last - l.x, last - l.y, last - l.z});
}

}  // namespace vxai
