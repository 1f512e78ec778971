#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vxai/blob_detector.hpp"
#include "vxai/csv.hpp"
#include "vxai/patch_grid.hpp"
#include "vxai/stats.hpp"
#include "vxai/vessel_graph.hpp"

namespace vxai {

/// Tool version recorded in manifests.
const char* version();

struct PipelinePaths {
  std::filesystem::path gt_mask;
  std::filesystem::path image;           ///< optional; tubularity falls back to the mask
  std::filesystem::path prediction;      ///< whole volume file or directory of pred_<ix>_<iy>_<iz>.nii
  std::filesystem::path attribution_dir; ///< attr_<poi_id>_<ix>_<iy>_<iz>.nii
  std::filesystem::path output_dir;
};

struct PipelineConfig {
  PipelinePaths paths;
  int patch_size = kDefaultPatchSize;
  double overlap = kDefaultOverlap;
  BlobDetectorParams detector;
  std::vector<std::string> tubularity_filters = {"frangi"};
  std::vector<PredictionStatus> status_filter = {PredictionStatus::TP};
  std::vector<std::size_t> sensitivity_min_component_size;
  int histogram_bins = 20;
  int workers = 1;

  /// Throws ConfigError with the offending field name. Required inputs and
  /// their existence are only checked with `check_paths`.
  void validate(bool check_paths = true) const;
};

/// Parses the JSON config. Unknown keys anywhere are errors; omitted keys
/// take their defaults. Relative paths resolve against `base_dir`.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                            bool check_paths = true);
/// Reads, parses and validates a config file. Without `check_paths` the
/// input paths are neither required nor checked for existence.
PipelineConfig validate_config(const std::filesystem::path& path, bool check_paths = true);
/// Canonical JSON echo of a config with every default filled in.
std::string config_to_json(const PipelineConfig& cfg);

std::string attribution_file_name(int poi_id, const PatchIndex& patch);
std::string prediction_file_name(const PatchIndex& patch);

struct ReportTables {
  csv::Table pairs;
  csv::Table features;
  csv::Table attribution;
  csv::Table blobs;
  csv::Table sensitivity;
  csv::Table skipped;
  CorrelationMatrix correlation;
  csv::Table hist_blob_sizes;
  csv::Table hist_vessel_sizes;
  csv::Table hist_blob_distances;
};

struct RunManifest {
  std::string version;
  std::string config_json;
  std::size_t pois = 0;
  std::size_t pairs = 0;            ///< (POI, patch) memberships
  std::size_t pairs_selected = 0;   ///< passing the status filter
  std::size_t maps_analyzed = 0;    ///< selected pairs with an attribution file
  std::size_t maps_skipped = 0;     ///< selected pairs without one
  std::size_t maps_with_blob = 0;
  std::size_t feature_rows = 0;
  std::size_t blob_rows = 0;
  bool attribution_stage = true;
  std::map<std::string, double> stage_seconds;

  /// attribution rows + skipped rows == selected pairs, and the row counts
  /// agree with the tables.
  bool rows_conserved(const ReportTables& t) const;
  std::string to_json(const ReportTables& t) const;
};

struct PipelineStages {
  bool features = true;
  bool attribution = true;
};

struct PipelineResult {
  VesselGraph graph;
  std::vector<Poi> pois;
  ReportTables tables;
  RunManifest manifest;
};

/// Runs the pipeline in memory. Work is split by patch over `workers`
/// threads; results are merged in (poi_id, patch) order so the tables do
/// not depend on scheduling.
PipelineResult run_pipeline(const PipelineConfig& cfg, PipelineStages stages = {});

/// Writes graph.json, pois.csv, pairs.csv, features.csv, attribution.csv,
/// blobs.csv, sensitivity.csv, skipped.csv, correlation.csv/.json,
/// hist_*.csv and manifest.json into `out_dir`.
void emit_reports(const PipelineResult& result, const std::filesystem::path& out_dir);

/// Feature and metric columns fed to the correlation matrix.
const std::vector<std::string>& feature_columns();
const std::vector<std::string>& metric_columns();

/// Joins feature and attribution tables on (poi_id, ix, iy, iz) into a
/// numeric table holding feature_columns() then metric_columns().
NumericTable join_records(const csv::Table& features, const csv::Table& attribution);

}  // namespace vxai
