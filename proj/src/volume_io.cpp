#include "vxai/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "json.hpp"

namespace vxai {
namespace fs = std::filesystem;

namespace {

constexpr std::int32_t kHeaderSize = 348;
constexpr std::int32_t kVoxOffset = 352;
constexpr std::int16_t kNiftiUint8 = 2;
constexpr std::int16_t kNiftiInt16 = 4;
constexpr std::int16_t kNiftiFloat32 = 16;
constexpr const char* kIntentPrefix = "vxai:";

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

std::size_t element_size(DataType t) {
  switch (t) {
    case DataType::uint8: return 1;
    case DataType::int16: return 2;
    case DataType::float32: return 4;
  }
  return 4;
}

template <class T>
T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  std::reverse(b, b + sizeof(T));
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <class T>
T load(const std::vector<char>& buf, std::size_t off, bool swap) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return swap ? byteswap_value(v) : v;
}

template <class T>
void store(std::vector<char>& buf, std::size_t off, T v) {
  std::memcpy(buf.data() + off, &v, sizeof(T));
}

std::vector<char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

// Decodes `count` elements of `type` starting at `off`; values are widened to float.
std::vector<float> decode_payload(const std::vector<char>& buf, std::size_t off, std::size_t count,
                                  DataType type, bool swap, const fs::path& path) {
  std::vector<float> out(count);
  const auto es = element_size(type);
  for (std::size_t i = 0; i < count; ++i) {
    const auto o = off + i * es;
    float v = 0;
    switch (type) {
      case DataType::uint8: v = float(static_cast<unsigned char>(buf[o])); break;
      case DataType::int16: v = float(load<std::int16_t>(buf, o, swap)); break;
      case DataType::float32: v = load<float>(buf, o, swap); break;
    }
    if (!std::isfinite(v))
      throw InputError("non-finite value at voxel " + std::to_string(i) + " in '" + path.string() + "'");
    out[i] = v;
  }
  return out;
}

void encode_payload(const Volume3D& v, std::vector<char>& buf, std::size_t off) {
  const auto es = element_size(v.dtype());
  const auto data = v.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto o = off + i * es;
    switch (v.dtype()) {
      case DataType::uint8: buf[o] = static_cast<char>(static_cast<unsigned char>(data[i])); break;
      case DataType::int16: store<std::int16_t>(buf, o, static_cast<std::int16_t>(data[i])); break;
      case DataType::float32: store<float>(buf, o, data[i]); break;
    }
  }
}

Volume3D finish(Dims dims, std::vector<float> data, DataType type, std::array<double, 3> spacing,
                std::optional<VolumeKind> kind) {
  VolumeKind k = VolumeKind::intensity;
  if (kind) {
    k = *kind;
  } else if (type != DataType::float32 &&
             std::all_of(data.begin(), data.end(), [](float x) { return x == 0.0f || x == 1.0f; })) {
    k = VolumeKind::binary_mask;
  }
  if (k == VolumeKind::binary_mask &&
      !std::all_of(data.begin(), data.end(), [](float x) { return x == 0.0f || x == 1.0f; }))
    throw InputError("volume tagged as binary mask holds values outside {0, 1}");
  Volume3D v(dims, k, std::move(data));
  v.set_dtype(type);
  v.set_spacing(spacing);
  return v;
}

Volume3D read_nifti(const fs::path& path) {
  const auto buf = read_all(path);
  if (buf.size() < std::size_t(kHeaderSize)) throw InputError("'" + path.string() + "' is too short for a NIfTI-1 header");
  bool swap = false;
  const auto hdr = load<std::int32_t>(buf, 0, false);
  if (hdr != kHeaderSize) {
    if (byteswap_value(hdr) != kHeaderSize) throw InputError("'" + path.string() + "' has a malformed NIfTI-1 header (sizeof_hdr)");
    swap = true;
  }
  if (std::memcmp(buf.data() + 344, "n+1\0", 4) != 0)
    throw InputError("'" + path.string() + "' is not a single-file NIfTI-1 image (magic)");

  std::int16_t dim[8];
  for (int i = 0; i < 8; ++i) dim[i] = load<std::int16_t>(buf, 40 + 2 * i, swap);
  if (dim[0] < 3 || dim[0] > 7) throw InputError("'" + path.string() + "' has unsupported dimensionality " + std::to_string(dim[0]));
  for (int i = 4; i <= dim[0]; ++i)
    if (dim[i] != 1) throw InputError("'" + path.string() + "' is not a 3D volume");
  const Dims dims{dim[1], dim[2], dim[3]};
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) throw InputError("'" + path.string() + "' has non-positive dimensions");

  DataType type;
  switch (load<std::int16_t>(buf, 70, swap)) {
    case kNiftiUint8: type = DataType::uint8; break;
    case kNiftiInt16: type = DataType::int16; break;
    case kNiftiFloat32: type = DataType::float32; break;
    default:
      throw InputError("'" + path.string() + "' has unsupported NIfTI datatype " +
                       std::to_string(load<std::int16_t>(buf, 70, swap)));
  }
  const auto bitpix = load<std::int16_t>(buf, 72, swap);
  if (std::size_t(bitpix) != 8 * element_size(type)) throw InputError("'" + path.string() + "' has inconsistent bitpix");

  std::array<double, 3> spacing{};
  for (int i = 0; i < 3; ++i) {
    const double p = std::fabs(load<float>(buf, 80 + 4 * i, swap));
    spacing[std::size_t(i)] = (p > 0 && std::isfinite(p)) ? p : 1.0;
  }
  const float vox_offset = load<float>(buf, 108, swap);
  if (!(vox_offset >= float(kHeaderSize)) || vox_offset != std::floor(vox_offset))
    throw InputError("'" + path.string() + "' has invalid vox_offset");
  const auto offset = std::size_t(vox_offset);
  const auto expected = dims.count() * element_size(type);
  if (buf.size() < offset || buf.size() - offset != expected)
    throw InputError("'" + path.string() + "' payload size " + std::to_string(buf.size() < offset ? 0 : buf.size() - offset) +
                     " does not match header dims " + to_string(dims) + " (" + std::to_string(expected) + " bytes)");

  auto data = decode_payload(buf, offset, dims.count(), type, swap, path);

  const float slope = load<float>(buf, 112, swap);
  const float inter = load<float>(buf, 116, swap);
  if (std::isfinite(slope) && slope != 0.0f && (slope != 1.0f || inter != 0.0f)) {
    for (auto& v : data) v = v * slope + inter;
    type = DataType::float32;
  }

  std::optional<VolumeKind> kind;
  char intent[17] = {};
  std::memcpy(intent, buf.data() + 328, 16);
  const std::string intent_name(intent);
  if (intent_name.rfind(kIntentPrefix, 0) == 0) {
    try {
      kind = parse_volume_kind(intent_name.substr(std::strlen(kIntentPrefix)));
    } catch (const InputError&) {
    }
  }
  return finish(dims, std::move(data), type, spacing, kind);
}

void write_nifti(const Volume3D& v, const fs::path& path) {
  std::vector<char> buf(std::size_t(kVoxOffset) + v.size() * element_size(v.dtype()), 0);
  store<std::int32_t>(buf, 0, kHeaderSize);
  store<char>(buf, 38, 'r');
  const std::int16_t dim[8] = {3, std::int16_t(v.dims().nx), std::int16_t(v.dims().ny), std::int16_t(v.dims().nz), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) store<std::int16_t>(buf, 40 + 2 * std::size_t(i), dim[i]);
  const std::int16_t code = v.dtype() == DataType::uint8 ? kNiftiUint8 : v.dtype() == DataType::int16 ? kNiftiInt16 : kNiftiFloat32;
  store<std::int16_t>(buf, 70, code);
  store<std::int16_t>(buf, 72, std::int16_t(8 * element_size(v.dtype())));
  const float pixdim[8] = {1.0f, float(v.spacing()[0]), float(v.spacing()[1]), float(v.spacing()[2]), 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) store<float>(buf, 76 + 4 * std::size_t(i), pixdim[i]);
  store<float>(buf, 108, float(kVoxOffset));
  store<float>(buf, 112, 0.0f);
  store<char>(buf, 123, 2);  // NIFTI_UNITS_MM
  const std::string intent = std::string(kIntentPrefix) + to_string(v.kind());
  std::memcpy(buf.data() + 328, intent.data(), std::min<std::size_t>(intent.size(), 16));
  std::memcpy(buf.data() + 344, "n+1\0", 4);
  encode_payload(v, buf, std::size_t(kVoxOffset));
  write_all(path, buf);
}

std::pair<fs::path, fs::path> raw_pair(const fs::path& path) {
  auto stem = path;
  if (path.extension() == ".json" || path.extension() == ".raw") stem.replace_extension();
  auto json = stem, raw = stem;
  json += ".json";
  raw += ".raw";
  return {json, raw};
}

Volume3D read_raw(const fs::path& path) {
  const auto [json_path, raw_path] = raw_pair(path);
  nlohmann::json header;
  {
    std::ifstream in(json_path);
    if (!in) throw InputError("cannot open '" + json_path.string() + "'");
    try {
      in >> header;
    } catch (const nlohmann::json::exception& e) {
      throw InputError("malformed RAW header '" + json_path.string() + "': " + e.what());
    }
  }
  Dims dims;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  DataType type;
  std::optional<VolumeKind> kind;
  bool swap = false;
  try {
    const auto d = header.at("dims").get<std::vector<int>>();
    if (d.size() != 3) throw InputError("RAW header dims must have 3 entries");
    dims = {d[0], d[1], d[2]};
    if (header.contains("spacing")) {
      const auto s = header.at("spacing").get<std::vector<double>>();
      if (s.size() != 3) throw InputError("RAW header spacing must have 3 entries");
      spacing = {s[0], s[1], s[2]};
    }
    type = parse_data_type(header.at("dtype").get<std::string>());
    if (header.value("order", std::string("x-fastest")) != "x-fastest")
      throw InputError("RAW header order must be 'x-fastest'");
    const auto endian = header.value("endianness", std::string("little"));
    if (endian == "big") swap = true;
    else if (endian != "little") throw InputError("RAW header endianness must be 'little' or 'big'");
    if (header.contains("kind")) kind = parse_volume_kind(header.at("kind").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed RAW header '" + json_path.string() + "': " + e.what());
  }
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) throw InputError("'" + json_path.string() + "' has non-positive dimensions");
  const auto buf = read_all(raw_path);
  const auto expected = dims.count() * element_size(type);
  if (buf.size() != expected)
    throw InputError("'" + raw_path.string() + "' payload size " + std::to_string(buf.size()) +
                     " does not match header dims " + to_string(dims) + " (" + std::to_string(expected) + " bytes)");
  return finish(dims, decode_payload(buf, 0, dims.count(), type, swap, raw_path), type, spacing, kind);
}

void write_raw(const Volume3D& v, const fs::path& path) {
  const auto [json_path, raw_path] = raw_pair(path);
  nlohmann::ordered_json header;
  header["dims"] = {v.dims().nx, v.dims().ny, v.dims().nz};
  header["spacing"] = {v.spacing()[0], v.spacing()[1], v.spacing()[2]};
  header["dtype"] = to_string(v.dtype());
  header["order"] = "x-fastest";
  header["endianness"] = "little";
  header["kind"] = to_string(v.kind());
  const auto text = header.dump(2) + "\n";
  write_all(json_path, std::vector<char>(text.begin(), text.end()));
  std::vector<char> buf(v.size() * element_size(v.dtype()));
  encode_payload(v, buf, 0);
  write_all(raw_path, buf);
}

}  // namespace

VolumeFormat format_from_path(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".nii") return VolumeFormat::nifti;
  if (ext == ".json" || ext == ".raw") return VolumeFormat::raw;
  throw InputError("cannot infer volume format from '" + path.string() + "' (expected .nii, .json or .raw)");
}

Volume3D read_volume(const fs::path& path) {
  return format_from_path(path) == VolumeFormat::nifti ? read_nifti(path) : read_raw(path);
}

void write_volume(const Volume3D& v, const fs::path& path, VolumeFormat format) {
  if (v.empty()) throw DomainError("cannot write an empty volume");
  if (format == VolumeFormat::nifti) {
    if (v.dims().nx > 32767 || v.dims().ny > 32767 || v.dims().nz > 32767)
      throw DomainError("NIfTI-1 dimensions are limited to 32767");
    write_nifti(v, path);
  } else {
    write_raw(v, path);
  }
}

void write_volume(const Volume3D& v, const fs::path& path) { write_volume(v, path, format_from_path(path)); }

}  // namespace vxai
