#pragma once

#include <array>
#include <vector>

#include "vxai/volume.hpp"

namespace vxai {

/// Per-axis indices into a PatchGrid's start lists.
struct PatchIndex {
  int ix = 0;
  int iy = 0;
  int iz = 0;

  friend bool operator==(const PatchIndex&, const PatchIndex&) = default;
  friend auto operator<=>(const PatchIndex&, const PatchIndex&) = default;
};

/// Overlapping cubic patches tiling a volume.
///
/// Per axis, starts advance by `stride` and the last start is clamped to
/// `dim - patch_size` so every voxel is covered and every patch lies inside
/// the volume.
struct PatchGrid {
  Dims volume_dims{};
  int patch_size = 0;
  int stride = 0;
  std::array<std::vector<int>, 3> starts;

  std::size_t patch_count() const { return starts[0].size() * starts[1].size() * starts[2].size(); }
  bool valid(const PatchIndex& idx) const;
  Index3 origin(const PatchIndex& idx) const;
  bool contains(const PatchIndex& idx, const Index3& p) const;
  /// All patch indices in (iz, iy, ix) lexicographic order with ix fastest.
  std::vector<PatchIndex> all() const;
};

inline constexpr int kDefaultPatchSize = 64;
inline constexpr double kDefaultOverlap = 0.25;

/// stride = round((1 - overlap) * patch_size); throws DomainError when the
/// patch does not fit or overlap is outside [0, 0.5).
PatchGrid build_patch_grid(Dims dims, int patch_size, double overlap_fraction);

/// Patches whose axis ranges contain `p`, ordered like PatchGrid::all().
std::vector<PatchIndex> patches_containing(const PatchGrid& grid, const Index3& p);

/// Copy of the patch_size^3 sub-volume; kind, dtype and spacing preserved.
Volume3D extract_patch(const Volume3D& v, const PatchGrid& grid, const PatchIndex& idx);

/// Smallest distance from `p` (patch-local) to any patch face, in voxels.
int border_distance(const PatchGrid& grid, const Index3& local);

}  // namespace vxai
