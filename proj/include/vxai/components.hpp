#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "vxai/volume.hpp"

namespace vxai {

enum class Connectivity { face = 6, full = 26 };

/// Neighbour offsets for the given adjacency, excluding the origin.
const std::vector<Index3>& neighbor_offsets(Connectivity c);

struct Blob {
  int label = 0;
  std::size_t size = 0;
  Point3 centroid;  ///< unweighted mean of voxel coordinates
};

/// Labeled connected regions. label_field holds 0 for background and
/// consecutive labels 1..K otherwise.
struct BlobSet {
  Volume3D label_field;
  std::vector<Blob> blobs;

  std::size_t count() const { return blobs.size(); }
};

/// Connected-component labeling of the non-zero voxels of `mask`.
/// Labels are assigned in order of each component's first voxel in linear
/// (x-fastest) order.
BlobSet label_components(const Volume3D& mask, Connectivity connectivity);

/// Drops components smaller than `min_size` and relabels the rest
/// consecutively, keeping their relative order.
BlobSet remove_small_components(const BlobSet& set, std::size_t min_size);

/// Label of the component containing `p` (0 for background).
int label_at(const BlobSet& set, const Index3& p);

}  // namespace vxai
