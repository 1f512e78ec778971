#pragma once

#include <cstddef>

#include "vxai/volume.hpp"

namespace vxai {

/// Exact Euclidean distance (voxel units) from each foreground voxel to the
/// nearest background voxel; 0 on background. Everything outside the
/// volume counts as background.
Field3<double> edt(const Volume3D& mask);

/// Radius estimate at a foreground voxel. Throws DomainError on background.
double thickness_at(const Field3<double>& distance_field, const Index3& p);

inline constexpr int kMinExclusionRadius = 2;
inline constexpr int kMaxExclusionRadius = 10;
inline constexpr double kExclusionBackgroundRatio = 0.75;

/// Sphere around a POI, clipped to the patch.
struct ExclusionMask {
  Index3 center;
  int radius = kMinExclusionRadius;
  Volume3D mask;
};

/// Grows a sphere from radius 2 to 10 around the POI. At each radius the
/// newly covered shell (r-1 < |q - poi| <= r, or the full ball at r = 2)
/// is split into vessel voxels NV and background voxels NB; growth stops
/// at the first radius with |NB| > 0.75 |NV| (an empty NV also stops).
/// Throws DomainError when the POI is background or outside the patch.
ExclusionMask exclusion_mask(const Volume3D& gt_patch, const Index3& poi);

/// Number of 26-connected skeleton pieces that leave the exclusion sphere.
///
/// The skeleton is first restricted to the component containing the POI,
/// or the nearest skeleton voxel within 2 voxels of it. Throws DomainError
/// when no skeleton voxel is that close.
int relative_connectivity(const Volume3D& skeleton_patch, const ExclusionMask& excl, const Index3& poi);

struct PatchVesselSummary {
  std::size_t component_count = 0;
  std::size_t total_volume = 0;
  std::size_t poi_component_volume = 0;  ///< 0 when the POI is background

  friend bool operator==(const PatchVesselSummary&, const PatchVesselSummary&) = default;
};

/// 26-connected component statistics of the patch foreground.
PatchVesselSummary patch_vessel_summary(const Volume3D& gt_patch, const Index3& poi);

}  // namespace vxai
