#include "vxai/blob_detector.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vxai {

void BlobDetectorParams::validate() const {
  frangi.validate();
  if (otsu_bins < 2) throw ConfigError("detector.otsu_bins must be >= 2");
  if (min_component_size < 1) throw ConfigError("detector.min_component_size must be >= 1");
}

double otsu_threshold(std::span<const float> values, int bins) {
  if (bins < 2) throw DomainError("Otsu needs at least 2 bins");
  if (values.empty()) throw DegenerateInput("Otsu threshold of an empty volume");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw DegenerateInput("Otsu threshold of a constant volume");
  const double width = (hi - lo) / bins;

  std::vector<double> hist(std::size_t(bins), 0.0);
  for (float v : values) {
    const auto b = std::min<long>(bins - 1, long((double(v) - lo) / width));
    hist[std::size_t(b)] += 1.0;
  }

  // Bin indices stand in for bin centres; the between-class variance is
  // affine-equivalent, so the argmax is unchanged and every partial sum is
  // an exactly representable integer.
  double total_n = 0, total_s = 0;
  for (int i = 0; i < bins; ++i) {
    total_n += hist[std::size_t(i)];
    total_s += double(i) * hist[std::size_t(i)];
  }
  double n0 = 0, s0 = 0, best = -1;
  int best_k = 1;
  for (int k = 1; k < bins; ++k) {
    n0 += hist[std::size_t(k - 1)];
    s0 += double(k - 1) * hist[std::size_t(k - 1)];
    const double n1 = total_n - n0, s1 = total_s - s0;
    if (n0 == 0 || n1 == 0) continue;
    const double diff = s0 / n0 - s1 / n1;
    const double between = (n0 / total_n) * (n1 / total_n) * diff * diff;
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  return lo + best_k * width;
}

BlobDetection detect_blobs_detailed(const Volume3D& attribution, const BlobDetectorParams& p) {
  p.validate();
  BlobDetection out;
  out.response = p.sign == AttributionSign::positive ? multiscale_frangi(attribution, p.frangi)
                                                     : multiscale_frangi(negated(attribution), p.frangi);
  try {
    out.threshold = otsu_threshold(out.response, p.otsu_bins);
  } catch (const DegenerateInput&) {
    out.blobs = label_components(make_mask(attribution.dims()), p.connectivity);
    return out;
  }
  Volume3D mask = make_mask(attribution.dims());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = double(out.response[i]) > *out.threshold ? 1.0f : 0.0f;
  out.blobs = remove_small_components(label_components(mask, p.connectivity), p.min_component_size);
  return out;
}

BlobSet detect_blobs(const Volume3D& attribution, const BlobDetectorParams& p) {
  return detect_blobs_detailed(attribution, p).blobs;
}

}  // namespace vxai
