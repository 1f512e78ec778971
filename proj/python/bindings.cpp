#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "vxai/blob_detector.hpp"
#include "vxai/error.hpp"
#include "vxai/patch_grid.hpp"
#include "vxai/phantom.hpp"
#include "vxai/pipeline.hpp"
#include "vxai/scalespace.hpp"
#include "vxai/skeleton.hpp"
#include "vxai/stats.hpp"
#include "vxai/vessel_features.hpp"
#include "vxai/vessel_graph.hpp"
#include "vxai/volume_io.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Arrays are indexed [z, y, x] so their C order matches the x-fastest layout.
vxai::Volume3D to_volume(const FloatArray& a, vxai::VolumeKind kind) {
  if (a.ndim() != 3) throw vxai::InputError("expected a 3D array indexed [z, y, x]");
  const vxai::Dims d{int(a.shape(2)), int(a.shape(1)), int(a.shape(0))};
  return vxai::Volume3D(d, kind, std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const vxai::Volume3D& v) {
  const auto& d = v.dims();
  FloatArray out({d.nz, d.ny, d.nx});
  std::copy(v.data().begin(), v.data().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const DoubleArray& a) { return {a.data(), a.data() + a.size()}; }

py::tuple index(const vxai::Index3& p) { return py::make_tuple(p.x, p.y, p.z); }

py::dict poi_dict(const vxai::Poi& p) {
  py::list patches;
  for (const auto& idx : p.patch_memberships) patches.append(py::make_tuple(idx.ix, idx.iy, idx.iz));
  py::dict d;
  d["id"] = p.id;
  d["kind"] = vxai::to_string(p.kind);
  d["position"] = index(p.position);
  d["source_id"] = p.source_id;
  d["patches"] = patches;
  return d;
}

vxai::BlobDetectorParams detector_params(std::optional<std::vector<double>> sigmas, std::size_t min_size,
                                         const std::string& sign) {
  vxai::BlobDetectorParams p;
  if (sigmas) p.frangi.sigmas = *sigmas;
  p.min_component_size = min_size;
  if (sign == "positive")
    p.sign = vxai::AttributionSign::positive;
  else if (sign == "negative")
    p.sign = vxai::AttributionSign::negative;
  else
    throw vxai::ConfigError("sign must be 'positive' or 'negative'");
  return p;
}

}  // namespace

PYBIND11_MODULE(_vxai, m) {
  m.doc() = "Vessel graph, blob detection and attribution statistics for 3D segmentation explainability.";

  // Translators run newest first, so subclasses are registered after the base.
  const auto error = py::register_exception<vxai::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<vxai::InputError>(m, "InputError", error.ptr());
  py::register_exception<vxai::ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<vxai::DegenerateInput>(m, "DegenerateInput", error.ptr());
  py::register_exception<vxai::DomainError>(m, "DomainError", error.ptr());

  m.attr("__version__") = vxai::version();

  m.def(
      "read_volume",
      [](const std::filesystem::path& path) {
        const auto v = vxai::read_volume(path);
        const auto& s = v.spacing();
        return py::make_tuple(to_array(v), py::make_tuple(s[0], s[1], s[2]), vxai::to_string(v.kind()));
      },
      py::arg("path"), "Returns (array[z, y, x], spacing (sx, sy, sz), kind).");
  m.def(
      "write_volume",
      [](const std::filesystem::path& path, const FloatArray& a, const std::string& kind,
         std::array<double, 3> spacing) {
        auto v = to_volume(a, vxai::parse_volume_kind(kind));
        v.set_spacing(spacing);
        vxai::write_volume(v, path);
      },
      py::arg("path"), py::arg("array"), py::arg("kind") = "intensity",
      py::arg("spacing") = std::array<double, 3>{1.0, 1.0, 1.0});

  m.def(
      "patch_starts",
      [](std::array<int, 3> dims, int patch_size, double overlap) {
        const auto g = vxai::build_patch_grid({dims[0], dims[1], dims[2]}, patch_size, overlap);
        return py::make_tuple(g.starts[0], g.starts[1], g.starts[2]);
      },
      py::arg("dims"), py::arg("patch_size") = 64, py::arg("overlap") = 0.25, "Per-axis starts for dims (nx, ny, nz).");
  m.def(
      "patches_containing",
      [](std::array<int, 3> dims, int patch_size, double overlap, std::array<int, 3> p) {
        const auto g = vxai::build_patch_grid({dims[0], dims[1], dims[2]}, patch_size, overlap);
        std::vector<std::array<int, 3>> out;
        for (const auto& idx : vxai::patches_containing(g, {p[0], p[1], p[2]})) out.push_back({idx.ix, idx.iy, idx.iz});
        return out;
      },
      py::arg("dims"), py::arg("patch_size"), py::arg("overlap"), py::arg("point"));

  m.def(
      "edt",
      [](const FloatArray& mask) {
        const auto f = vxai::edt(to_volume(mask, vxai::VolumeKind::binary_mask));
        DoubleArray out({f.dims.nz, f.dims.ny, f.dims.nx});
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
      },
      py::arg("mask"), "Exact Euclidean distance to the nearest background voxel, outside counts as background.");
  m.def(
      "skeletonize", [](const FloatArray& mask) { return to_array(vxai::skeletonize(to_volume(mask, vxai::VolumeKind::binary_mask))); },
      py::arg("mask"));
  m.def(
      "graph_json",
      [](const FloatArray& mask) {
        return vxai::graph_to_json(vxai::build_graph(vxai::skeletonize(to_volume(mask, vxai::VolumeKind::binary_mask))));
      },
      py::arg("mask"), "Skeletonizes a mask and returns the vessel graph as JSON text.");
  m.def(
      "select_pois",
      [](const FloatArray& mask, int patch_size, double overlap) {
        const auto v = to_volume(mask, vxai::VolumeKind::binary_mask);
        const auto grid = vxai::build_patch_grid(v.dims(), patch_size, overlap);
        py::list out;
        for (const auto& p : vxai::select_pois(vxai::build_graph(vxai::skeletonize(v)), v, grid)) out.append(poi_dict(p));
        return out;
      },
      py::arg("mask"), py::arg("patch_size") = 64, py::arg("overlap") = 0.25);
  m.def(
      "relative_connectivity",
      [](const FloatArray& gt_patch, std::array<int, 3> poi) {
        const auto gt = to_volume(gt_patch, vxai::VolumeKind::binary_mask);
        const vxai::Index3 p{poi[0], poi[1], poi[2]};
        return vxai::relative_connectivity(vxai::skeletonize(gt), vxai::exclusion_mask(gt, p), p);
      },
      py::arg("gt_patch"), py::arg("poi"));

  m.def(
      "multiscale_frangi",
      [](const FloatArray& v, std::optional<std::vector<double>> sigmas) {
        vxai::FrangiParams p;
        if (sigmas) p.sigmas = *sigmas;
        return to_array(vxai::multiscale_frangi(to_volume(v, vxai::VolumeKind::intensity), p));
      },
      py::arg("volume"), py::arg("sigmas") = py::none());
  m.def(
      "otsu_threshold", [](const FloatArray& v, int bins) { return vxai::otsu_threshold(std::span(v.data(), std::size_t(v.size())), bins); },
      py::arg("values"), py::arg("bins") = 256);
  m.def(
      "detect_blobs",
      [](const FloatArray& attribution, std::optional<std::vector<double>> sigmas, std::size_t min_component_size,
         const std::string& sign) {
        const auto set = vxai::detect_blobs(to_volume(attribution, vxai::VolumeKind::attribution),
                                            detector_params(sigmas, min_component_size, sign));
        py::list out;
        for (const auto& b : set.blobs) {
          py::dict d;
          d["label"] = b.label;
          d["size"] = b.size;
          d["centroid"] = py::make_tuple(b.centroid.x, b.centroid.y, b.centroid.z);
          out.append(d);
        }
        return out;
      },
      py::arg("attribution"), py::arg("sigmas") = py::none(), py::arg("min_component_size") = 5,
      py::arg("sign") = "positive", "Blobs as dicts with label, size and centroid (x, y, z).");

  m.def(
      "fisher_cnr", [](const DoubleArray& b, const DoubleArray& g) { return vxai::fisher_cnr(to_vector(b), to_vector(g)); },
      py::arg("blob_values"), py::arg("background_values"));
  m.def(
      "l1_ratio", [](const DoubleArray& b, const DoubleArray& g) { return vxai::l1_ratio(to_vector(b), to_vector(g)); },
      py::arg("blob_values"), py::arg("background_values"));
  m.def(
      "spearman", [](const DoubleArray& x, const DoubleArray& y) { return vxai::spearman(to_vector(x), to_vector(y)); },
      py::arg("x"), py::arg("y"));

  m.def(
      "generate_phantom",
      [](const std::string& spec_json) {
        const auto ph = vxai::generate_phantom(vxai::phantom_spec_from_json(spec_json));
        return py::make_tuple(to_array(ph.image), to_array(ph.gt));
      },
      py::arg("spec_json"), "Returns (image, gt) arrays indexed [z, y, x].");

  m.def(
      "attribution_file_name",
      [](int poi_id, std::array<int, 3> patch) {
        return vxai::attribution_file_name(poi_id, {patch[0], patch[1], patch[2]});
      },
      py::arg("poi_id"), py::arg("patch"));
  m.def(
      "prediction_file_name",
      [](std::array<int, 3> patch) { return vxai::prediction_file_name({patch[0], patch[1], patch[2]}); },
      py::arg("patch"));

  m.def(
      "validate_config",
      [](const std::filesystem::path& path) { return vxai::config_to_json(vxai::validate_config(path)); },
      py::arg("path"), "Validated config with defaults filled in, as JSON text.");
  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> out_dir, int workers) {
        auto cfg = vxai::validate_config(config);
        if (out_dir) cfg.paths.output_dir = *out_dir;
        if (workers > 0) cfg.workers = workers;
        vxai::PipelineResult r;
        {
          py::gil_scoped_release release;
          r = vxai::run_pipeline(cfg);
          vxai::emit_reports(r, cfg.paths.output_dir);
        }
        return r.manifest.to_json(r.tables);
      },
      py::arg("config"), py::arg("out_dir") = py::none(), py::arg("workers") = 0,
      "Runs every stage, writes the reports and returns the manifest as JSON text.");
}
