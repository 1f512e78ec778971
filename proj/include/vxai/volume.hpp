#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vxai/error.hpp"

namespace vxai {

/// Integer voxel coordinate. Voxel units throughout.
struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const Index3&, const Index3&) = default;
  friend auto operator<=>(const Index3&, const Index3&) = default;
  Index3 operator+(const Index3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Index3 operator-(const Index3& o) const { return {x - o.x, y - o.y, z - o.z}; }
};

/// Real-valued position (centroids).
struct Point3 {
  double x = 0;
  double y = 0;
  double z = 0;
};

double distance(const Point3& a, const Point3& b);
inline Point3 to_point(const Index3& i) { return {double(i.x), double(i.y), double(i.z)}; }

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
  std::size_t count() const { return std::size_t(nx) * std::size_t(ny) * std::size_t(nz); }
  bool contains(const Index3& p) const {
    return p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x < nx && p.y < ny && p.z < nz;
  }
  // x fastest
  std::size_t linear(const Index3& p) const {
    return std::size_t(p.x) + std::size_t(nx) * (std::size_t(p.y) + std::size_t(ny) * std::size_t(p.z));
  }
  Index3 coord(std::size_t i) const {
    const auto plane = std::size_t(nx) * std::size_t(ny);
    const int z = int(i / plane);
    const auto r = i - std::size_t(z) * plane;
    return {int(r % std::size_t(nx)), int(r / std::size_t(nx)), z};
  }
};

std::string to_string(const Dims& d);

enum class VolumeKind { intensity, binary_mask, attribution, response };
enum class DataType { uint8, int16, float32 };

const char* to_string(VolumeKind k);
const char* to_string(DataType t);
VolumeKind parse_volume_kind(const std::string& s);
DataType parse_data_type(const std::string& s);

/// Dense scalar grid with geometry metadata.
///
/// Values are held as float32; uint8 and int16 payloads are represented
/// exactly, and `dtype()` remembers the on-disk element type so a
/// write/read cycle reproduces the original file content.
class Volume3D {
 public:
  Volume3D() = default;
  Volume3D(Dims dims, VolumeKind kind, float fill = 0.0f);
  Volume3D(Dims dims, VolumeKind kind, std::vector<float> data);

  const Dims& dims() const { return dims_; }
  const std::array<double, 3>& spacing() const { return spacing_; }
  VolumeKind kind() const { return kind_; }
  DataType dtype() const { return dtype_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  void set_spacing(const std::array<double, 3>& s) { spacing_ = s; }
  void set_kind(VolumeKind k) { kind_ = k; }
  /// Integer types require every value to be representable.
  void set_dtype(DataType t);

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }
  float at(const Index3& p) const { return data_[dims_.linear(p)]; }
  float& at(const Index3& p) { return data_[dims_.linear(p)]; }
  float at(int x, int y, int z) const { return at(Index3{x, y, z}); }
  float& at(int x, int y, int z) { return at(Index3{x, y, z}); }
  /// Bounds-checked read.
  float value(const Index3& p) const;

  bool is_binary() const;
  std::size_t count_nonzero() const;

  friend bool operator==(const Volume3D&, const Volume3D&) = default;

 private:
  Dims dims_{};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  VolumeKind kind_ = VolumeKind::intensity;
  DataType dtype_ = DataType::float32;
  std::vector<float> data_;
};

/// Binary mask with uint8 storage type.
Volume3D make_mask(Dims dims);
/// Negated copy (used for black-ridge filtering and negative-sign detection).
Volume3D negated(const Volume3D& v);

/// Plain grid of T used for internal per-voxel fields.
template <class T>
struct Field3 {
  Dims dims{};
  std::vector<T> values;

  Field3() = default;
  explicit Field3(Dims d, T fill = T{}) : dims(d), values(d.count(), fill) {}
  T& at(const Index3& p) { return values[dims.linear(p)]; }
  const T& at(const Index3& p) const { return values[dims.linear(p)]; }
};

}  // namespace vxai
