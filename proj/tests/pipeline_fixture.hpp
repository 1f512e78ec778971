#pragma once

// Y-junction dataset on disk: mask, image, per-volume prediction, one
// attribution map per (POI, patch) pair with a Gaussian bump at the POI,
// and a config file pointing at all of it.

#include <filesystem>
#include <fstream>
#include <string>

#include "vxai/patch_grid.hpp"
#include "vxai/phantom.hpp"
#include "vxai/pipeline.hpp"
#include "vxai/skeleton.hpp"
#include "vxai/vessel_graph.hpp"
#include "vxai/volume_io.hpp"

namespace ydata {

namespace fs = std::filesystem;

struct Options {
  bool all_zero_prediction = false;
  double bump_sigma = 2.5;
  double noise_sigma = 0.005;
  std::string extra_config;  ///< appended inside the top-level JSON object
};

inline constexpr int kPatch = 32;

inline vxai::PhantomSpec y_spec() {
  return vxai::y_junction_phantom({48, 48, 32}, {24, 24, 16}, {{{44, 24, 16}, {10, 38, 16}, {10, 10, 16}}}, 2.5);
}

/// Writes the dataset into `dir` and returns the config path.
inline fs::path write(const fs::path& dir, const Options& opt = {}) {
  fs::create_directories(dir / "attr");
  const auto ph = vxai::generate_phantom(y_spec());
  vxai::write_volume(ph.gt, dir / "gt.nii");
  vxai::write_volume(ph.image, dir / "image.nii");
  auto pred = ph.gt;
  if (opt.all_zero_prediction)
    for (auto& v : pred.data()) v = 0.0f;
  vxai::write_volume(pred, dir / "pred.nii");

  const auto grid = vxai::build_patch_grid(ph.gt.dims(), kPatch, 0.25);
  const auto pois = vxai::select_pois(vxai::build_graph(vxai::skeletonize(ph.gt)), ph.gt, grid);
  for (const auto& p : pois)
    for (const auto& idx : p.patch_memberships) {
      const auto o = grid.origin(idx);
      vxai::PhantomSpec s{vxai::PhantomKind::gaussian_bump, {kPatch, kPatch, kPatch}, {}};
      s.foreground_intensity = 0;
      s.noise_sigma = opt.noise_sigma;
      s.seed = std::uint64_t(p.id) * 1000 + std::uint64_t(idx.ix * 100 + idx.iy * 10 + idx.iz);
      const vxai::Index3 l = p.position - o;
      s.primitives.emplace_back(vxai::GaussianBump{{double(l.x), double(l.y), double(l.z)}, opt.bump_sigma, 1.0});
      auto attr = vxai::generate_phantom(s).image;
      attr.set_kind(vxai::VolumeKind::attribution);
      vxai::write_volume(attr, dir / "attr" / vxai::attribution_file_name(p.id, idx));
    }

  const auto cfg = dir / "config.json";
  std::ofstream out(cfg);
  out << "{\n"
      << "  \"paths\": {\"gt_mask\": \"gt.nii\", \"image\": \"image.nii\", \"prediction\": \"pred.nii\",\n"
      << "            \"attribution_dir\": \"attr\", \"output_dir\": \"out\"},\n"
      << "  \"patch\": {\"size\": " << kPatch << ", \"overlap\": 0.25},\n"
      << "  \"detector\": {\"sigmas\": [1, 2, 3, 4]},\n"
      << "  \"sensitivity\": {\"min_component_size\": [2, 5, 10]}" << opt.extra_config << "\n"
      << "}\n";
  return cfg;
}

}  // namespace ydata
