#pragma once

#include <cstddef>
#include <optional>

#include "vxai/components.hpp"
#include "vxai/scalespace.hpp"
#include "vxai/volume.hpp"

namespace vxai {

enum class AttributionSign { positive, negative };

struct BlobDetectorParams {
  FrangiParams frangi;
  int otsu_bins = 256;
  std::size_t min_component_size = 5;
  Connectivity connectivity = Connectivity::full;
  AttributionSign sign = AttributionSign::positive;

  void validate() const;
};

/// Otsu threshold over a `bins`-bin histogram spanning [min, max].
///
/// Candidate thresholds are the interior bin edges; the one maximising the
/// between-class variance wins, ties resolved toward the lowest edge.
/// Throws DegenerateInput for constant input.
double otsu_threshold(std::span<const float> values, int bins);
inline double otsu_threshold(const Volume3D& v, int bins) { return otsu_threshold(v.data(), bins); }

/// Intermediate products of one detection run.
struct BlobDetection {
  Volume3D response;                ///< multiscale Frangi of the selected sign
  std::optional<double> threshold;  ///< absent when the response is constant
  BlobSet blobs;
};

/// sign select -> multiscale Frangi -> Otsu -> binarise (> t) -> label ->
/// drop components smaller than min_component_size -> relabel.
/// A constant response yields an empty blob set.
BlobDetection detect_blobs_detailed(const Volume3D& attribution, const BlobDetectorParams& p);
BlobSet detect_blobs(const Volume3D& attribution, const BlobDetectorParams& p);

}  // namespace vxai
