#include "vxai/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vxai {

double distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::string to_string(const Dims& d) {
  std::ostringstream os;
  os << d.nx << "x" << d.ny << "x" << d.nz;
  return os.str();
}

const char* to_string(VolumeKind k) {
  switch (k) {
    case VolumeKind::intensity: return "intensity";
    case VolumeKind::binary_mask: return "binary-mask";
    case VolumeKind::attribution: return "attribution";
    case VolumeKind::response: return "response";
  }
  return "intensity";
}

const char* to_string(DataType t) {
  switch (t) {
    case DataType::uint8: return "uint8";
    case DataType::int16: return "int16";
    case DataType::float32: return "float32";
  }
  return "float32";
}

VolumeKind parse_volume_kind(const std::string& s) {
  if (s == "intensity") return VolumeKind::intensity;
  if (s == "binary-mask") return VolumeKind::binary_mask;
  if (s == "attribution") return VolumeKind::attribution;
  if (s == "response") return VolumeKind::response;
  throw InputError("unknown volume kind '" + s + "'");
}

DataType parse_data_type(const std::string& s) {
  if (s == "uint8") return DataType::uint8;
  if (s == "int16") return DataType::int16;
  if (s == "float32") return DataType::float32;
  throw InputError("unsupported data type '" + s + "'");
}

Volume3D::Volume3D(Dims dims, VolumeKind kind, float fill)
    : dims_(dims), kind_(kind), data_(dims.count(), fill) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
    throw DomainError("volume dimensions must be positive, got " + to_string(dims));
  if (kind == VolumeKind::binary_mask && fill != 0.0f && fill != 1.0f)
    throw DomainError("binary mask fill must be 0 or 1");
  if (kind == VolumeKind::binary_mask) dtype_ = DataType::uint8;
}

Volume3D::Volume3D(Dims dims, VolumeKind kind, std::vector<float> data)
    : dims_(dims), kind_(kind), data_(std::move(data)) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
    throw DomainError("volume dimensions must be positive, got " + to_string(dims));
  if (data_.size() != dims.count())
    throw DomainError("volume data length " + std::to_string(data_.size()) + " does not match dims " +
                      to_string(dims));
  if (kind == VolumeKind::binary_mask) {
    if (!is_binary()) throw DomainError("binary mask values must be 0 or 1");
    dtype_ = DataType::uint8;
  }
}

void Volume3D::set_dtype(DataType t) {
  if (t == DataType::uint8 || t == DataType::int16) {
    const float lo = t == DataType::uint8 ? 0.0f : -32768.0f;
    const float hi = t == DataType::uint8 ? 255.0f : 32767.0f;
    for (float v : data_)
      if (v != std::nearbyint(v) || v < lo || v > hi)
        throw DomainError(std::string("value not representable as ") + vxai::to_string(t));
  }
  dtype_ = t;
}

float Volume3D::value(const Index3& p) const {
  if (!dims_.contains(p)) throw DomainError("voxel coordinate outside volume");
  return at(p);
}

bool Volume3D::is_binary() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v == 0.0f || v == 1.0f; });
}

std::size_t Volume3D::count_nonzero() const {
  return std::size_t(std::count_if(data_.begin(), data_.end(), [](float v) { return v != 0.0f; }));
}

Volume3D make_mask(Dims dims) { return Volume3D(dims, VolumeKind::binary_mask, 0.0f); }

Volume3D negated(const Volume3D& v) {
  std::vector<float> d(v.data().begin(), v.data().end());
  for (auto& x : d) x = -x;
  Volume3D out(v.dims(), v.kind() == VolumeKind::binary_mask ? VolumeKind::intensity : v.kind(), std::move(d));
  out.set_spacing(v.spacing());
  return out;
}

}  // namespace vxai
