#include "vxai/components.hpp"

#include <cmath>

namespace vxai {

namespace {

std::vector<Index3> make_offsets(bool full) {
  std::vector<Index3> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (!full && manhattan != 1) continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

Volume3D make_label_field(Dims dims) {
  Volume3D labels(dims, VolumeKind::intensity, 0.0f);
  return labels;
}

void finalize_dtype(BlobSet& set) {
  if (set.blobs.size() <= 32767) set.label_field.set_dtype(DataType::int16);
}

}  // namespace

const std::vector<Index3>& neighbor_offsets(Connectivity c) {
  static const std::vector<Index3> six = make_offsets(false);
  static const std::vector<Index3> twenty_six = make_offsets(true);
  return c == Connectivity::face ? six : twenty_six;
}

BlobSet label_components(const Volume3D& mask, Connectivity connectivity) {
  const auto dims = mask.dims();
  BlobSet out{make_label_field(dims), {}};
  const auto& offsets = neighbor_offsets(connectivity);
  const auto src = mask.data();
  auto labels = out.label_field.data();
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == 0.0f || labels[i] != 0.0f) continue;
    const int label = int(out.blobs.size()) + 1;
    Blob blob{label, 0, {}};
    double sx = 0, sy = 0, sz = 0;
    labels[i] = float(label);
    stack.assign(1, i);
    while (!stack.empty()) {
      const auto cur = stack.back();
      stack.pop_back();
      const auto p = dims.coord(cur);
      ++blob.size;
      sx += p.x;
      sy += p.y;
      sz += p.z;
      for (const auto& o : offsets) {
        const auto q = p + o;
        if (!dims.contains(q)) continue;
        const auto qi = dims.linear(q);
        if (src[qi] != 0.0f && labels[qi] == 0.0f) {
          labels[qi] = float(label);
          stack.push_back(qi);
        }
      }
    }
    const double n = double(blob.size);
    blob.centroid = {sx / n, sy / n, sz / n};
    out.blobs.push_back(blob);
  }
  finalize_dtype(out);
  return out;
}

BlobSet remove_small_components(const BlobSet& set, std::size_t min_size) {
  std::vector<int> remap(set.blobs.size() + 1, 0);
  BlobSet out{make_label_field(set.label_field.dims()), {}};
  for (const auto& b : set.blobs) {
    if (b.size < min_size) continue;
    Blob nb = b;
    nb.label = int(out.blobs.size()) + 1;
    remap[std::size_t(b.label)] = nb.label;
    out.blobs.push_back(nb);
  }
  const auto src = set.label_field.data();
  auto dst = out.label_field.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = float(remap[std::size_t(src[i])]);
  finalize_dtype(out);
  return out;
}

int label_at(const BlobSet& set, const Index3& p) { return int(set.label_field.value(p)); }

}  // namespace vxai
