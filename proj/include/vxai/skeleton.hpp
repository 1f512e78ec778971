#pragma once

#include <array>
#include <cstdint>

#include "vxai/volume.hpp"

namespace vxai {

/// 3x3x3 neighbourhood, index (dx+1) + 3(dy+1) + 9(dz+1); centre is 13.
using Neighborhood27 = std::array<std::uint8_t, 27>;

/// True when removing the centre voxel preserves topology under
/// (26, 6) connectivity: exactly one 26-component of foreground in the
/// 26-neighbourhood and exactly one 6-component of background in the
/// 18-neighbourhood that is 6-adjacent to the centre.
bool is_simple_point(const Neighborhood27& n);

/// Topology-preserving directional thinning of a binary mask to a
/// one-voxel-wide curve skeleton.
///
/// Six directional sub-iterations delete simple border voxels that are not
/// curve ends (exactly one 26-neighbour), re-checking each candidate
/// sequentially, until no voxel changes. Voxels outside the volume are
/// background. The number of 26-connected components never changes.
Volume3D skeletonize(const Volume3D& mask);

}  // namespace vxai
