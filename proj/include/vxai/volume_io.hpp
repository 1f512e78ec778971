#pragma once

#include <filesystem>

#include "vxai/volume.hpp"

namespace vxai {

enum class VolumeFormat {
  nifti,  ///< single-file NIfTI-1 (.nii)
  raw,    ///< <name>.json header + <name>.raw payload
};

/// Picks the format from the file extension (.nii, .json or .raw).
VolumeFormat format_from_path(const std::filesystem::path& path);

/// Reads a NIfTI-1 single file or a RAW+JSON pair.
///
/// Only dim[1..3], datatype (uint8, int16, float32), pixdim[1..3],
/// vox_offset, scl_slope/scl_inter and the magic are honoured; the
/// qform/sform orientation is ignored. Integer volumes whose values are all
/// in {0, 1} are tagged as binary masks unless the header records a kind.
/// Throws InputError on malformed headers, payload size mismatches and
/// non-finite values.
Volume3D read_volume(const std::filesystem::path& path);

/// Writes `v` with its own element type. The volume kind is recorded in the
/// NIfTI intent_name field (or the JSON header) so it survives a round trip.
void write_volume(const Volume3D& v, const std::filesystem::path& path, VolumeFormat format);
void write_volume(const Volume3D& v, const std::filesystem::path& path);

}  // namespace vxai
