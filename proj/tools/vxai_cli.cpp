// vxai: command-line front end for the vessel attribution toolkit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "vxai/blob_detector.hpp"
#include "vxai/csv.hpp"
#include "vxai/error.hpp"
#include "vxai/phantom.hpp"
#include "vxai/pipeline.hpp"
#include "vxai/skeleton.hpp"
#include "vxai/stats.hpp"
#include "vxai/vessel_graph.hpp"
#include "vxai/volume_io.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kInputError = 3, kInternalError = 4 };

struct GlobalOptions {
  std::string config;
  std::string out;
  int workers = 0;
  std::string log_level = "info";
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw vxai::InputError("cannot write " + p.string());
  out << text;
}

fs::path output_dir(const GlobalOptions& g, const fs::path& fallback = "output") {
  fs::path dir = g.out.empty() ? fallback : fs::path(g.out);
  fs::create_directories(dir);
  return dir;
}

vxai::PipelineConfig load_config(const GlobalOptions& g, bool check_paths) {
  if (g.config.empty()) throw vxai::ConfigError("--config is required for this command");
  auto cfg = vxai::validate_config(g.config, check_paths);
  if (!g.out.empty()) cfg.paths.output_dir = g.out;
  if (g.workers > 0) cfg.workers = g.workers;
  return cfg;
}

// Detector/grid parameters come from --config when given, defaults otherwise.
vxai::PipelineConfig optional_config(const GlobalOptions& g) {
  if (g.config.empty()) return {};
  return load_config(g, false);
}

int run_pipeline_command(const GlobalOptions& g, vxai::PipelineStages stages) {
  const auto cfg = load_config(g, true);
  const auto result = vxai::run_pipeline(cfg, stages);
  vxai::emit_reports(result, cfg.paths.output_dir);
  spdlog::info("reports written to {}", cfg.paths.output_dir.string());
  return kOk;
}

int extract_graph(const GlobalOptions& g, const std::string& mask_path, bool write_skeleton) {
  fs::path mask_file = mask_path;
  if (mask_file.empty()) mask_file = load_config(g, false).paths.gt_mask;
  if (mask_file.empty()) throw vxai::ConfigError("--mask or paths.gt_mask is required");
  const auto mask = vxai::read_volume(mask_file);
  if (!mask.is_binary()) throw vxai::InputError(mask_file.string() + " is not a binary mask");
  const auto skeleton = vxai::skeletonize(mask);
  const auto graph = vxai::build_graph(skeleton);
  const auto dir = output_dir(g);
  vxai::write_graph(graph, dir / "graph.json");
  if (write_skeleton) vxai::write_volume(skeleton, dir / "skeleton.nii");
  spdlog::info("{} nodes, {} edges", graph.nodes.size(), graph.edges.size());
  return kOk;
}

int select_pois(const GlobalOptions& g, const std::string& mask_path, const std::string& graph_path) {
  const auto cfg = optional_config(g);
  fs::path mask_file = mask_path.empty() ? cfg.paths.gt_mask : fs::path(mask_path);
  if (mask_file.empty()) throw vxai::ConfigError("--mask or paths.gt_mask is required");
  const auto mask = vxai::read_volume(mask_file);
  if (!mask.is_binary()) throw vxai::InputError(mask_file.string() + " is not a binary mask");
  const auto graph =
      graph_path.empty() ? vxai::build_graph(vxai::skeletonize(mask)) : vxai::read_graph(graph_path);
  const auto grid = vxai::build_patch_grid(mask.dims(), cfg.patch_size, cfg.overlap);
  const auto pois = vxai::select_pois(graph, mask, grid);
  vxai::write_poi_table(pois, output_dir(g) / "pois.csv");
  spdlog::info("{} POIs", pois.size());
  return kOk;
}

int detect_blobs(const GlobalOptions& g, const std::vector<std::string>& files, bool write_response) {
  const auto cfg = optional_config(g);
  const auto dir = output_dir(g);
  vxai::csv::Table t;
  t.header = {"map", "blob_label", "size_voxels", "cx", "cy", "cz", "threshold"};
  for (const auto& f : files) {
    const fs::path path = f;
    const auto attr = vxai::read_volume(path);
    const auto det = vxai::detect_blobs_detailed(attr, cfg.detector);
    const std::string name = path.stem().string();
    for (const auto& b : det.blobs.blobs)
      t.rows.push_back({name, std::to_string(b.label), std::to_string(b.size), vxai::csv::format(b.centroid.x),
                        vxai::csv::format(b.centroid.y), vxai::csv::format(b.centroid.z),
                        vxai::csv::format(det.threshold)});
    if (write_response) vxai::write_volume(det.response, dir / (name + "_response.nii"));
    spdlog::info("{}: {} blobs", name, det.blobs.count());
  }
  vxai::csv::write(t, dir / "blobs.csv");
  return kOk;
}

int stats(const GlobalOptions& g, std::string features_csv, std::string attribution_csv) {
  if (features_csv.empty() || attribution_csv.empty()) {
    const auto cfg = load_config(g, false);
    if (features_csv.empty()) features_csv = (cfg.paths.output_dir / "features.csv").string();
    if (attribution_csv.empty()) attribution_csv = (cfg.paths.output_dir / "attribution.csv").string();
  }
  const auto records = vxai::join_records(vxai::csv::read(features_csv), vxai::csv::read(attribution_csv));
  const auto m = vxai::correlation_matrix(records, vxai::feature_columns(), vxai::metric_columns());
  const auto dir = output_dir(g, fs::path(features_csv).parent_path());
  vxai::csv::write(m.to_csv(), dir / "correlation.csv");
  write_text(dir / "correlation.json", m.to_json());
  spdlog::info("correlation over {} joined rows", records.rows.size());
  return kOk;
}

int gen_phantom(const GlobalOptions& g, const std::string& spec_path) {
  const auto spec = vxai::read_phantom_spec(spec_path);
  const auto ph = vxai::generate_phantom(spec);
  const auto dir = output_dir(g);
  vxai::write_volume(ph.image, dir / "image.nii");
  vxai::write_volume(ph.gt, dir / "gt.nii");
  write_text(dir / "phantom.json", vxai::phantom_spec_to_json(ph.analytic));
  spdlog::info("{} phantom {} written to {}", vxai::to_string(spec.kind), vxai::to_string(spec.dims), dir.string());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vessel segmentation attribution analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vxai::version());

  GlobalOptions g;
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  auto* validate = app.add_subcommand("validate-config", "Check a config and print it with defaults filled in");
  auto* run_all = app.add_subcommand("run-all", "Run the full pipeline and write every report");
  auto* features = app.add_subcommand("features", "Graph, POIs and vessel features only");

  std::string mask, graph;
  bool write_skeleton = false;
  auto* extract = app.add_subcommand("extract-graph", "Skeletonize a mask and write graph.json");
  extract->add_option("--mask", mask, "Binary vessel mask");
  extract->add_flag("--write-skeleton", write_skeleton, "Also write skeleton.nii");

  auto* pois = app.add_subcommand("select-pois", "Select POIs and write pois.csv");
  pois->add_option("--mask", mask, "Binary vessel mask");
  pois->add_option("--graph", graph, "Existing graph.json (computed from the mask otherwise)");

  std::vector<std::string> attr_files;
  bool write_response = false;
  auto* blobs = app.add_subcommand("detect-blobs", "Detect blobs in attribution maps");
  blobs->add_option("maps", attr_files, "Attribution volumes")->required()->check(CLI::ExistingFile);
  blobs->add_flag("--write-response", write_response, "Write the multiscale Frangi response volumes");

  std::string features_csv, attribution_csv;
  auto* stats_cmd = app.add_subcommand("stats", "Correlate feature and attribution tables");
  stats_cmd->add_option("--features", features_csv, "features.csv")->check(CLI::ExistingFile);
  stats_cmd->add_option("--attribution", attribution_csv, "attribution.csv")->check(CLI::ExistingFile);

  std::string spec_path;
  auto* phantom = app.add_subcommand("gen-phantom", "Generate a synthetic phantom");
  phantom->add_option("--spec", spec_path, "Phantom spec (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  spdlog::set_level(spdlog::level::from_str(g.log_level));
  try {
    if (validate->parsed()) {
      std::cout << vxai::config_to_json(load_config(g, true));
      return kOk;
    }
    if (run_all->parsed()) return run_pipeline_command(g, {});
    if (features->parsed()) return run_pipeline_command(g, {true, false});
    if (extract->parsed()) return extract_graph(g, mask, write_skeleton);
    if (pois->parsed()) return select_pois(g, mask, graph);
    if (blobs->parsed()) return detect_blobs(g, attr_files, write_response);
    if (stats_cmd->parsed()) return stats(g, features_csv, attribution_csv);
    if (phantom->parsed()) return gen_phantom(g, spec_path);
  } catch (const vxai::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const vxai::InputError& e) {
    spdlog::error("input error: {}", e.what());
    return kInputError;
  } catch (const vxai::DomainError& e) {
    spdlog::error("input error: {}", e.what());
    return kInputError;
  } catch (const vxai::DegenerateInput& e) {
    spdlog::error("input error: {}", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternalError;
  }
  return kInternalError;
}
