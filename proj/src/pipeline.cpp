#include "vxai/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "vxai/error.hpp"
#include "vxai/skeleton.hpp"
#include "vxai/vessel_features.hpp"
#include "vxai/volume_io.hpp"

#ifndef VXAI_VERSION
#define VXAI_VERSION "0.0.0"
#endif

namespace vxai {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* version() { return VXAI_VERSION; }

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw ConfigError("unknown key '" + k + "' in '" + where + "'");
}

template <class T>
T field(const json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("'" + where + "." + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string path_string(const fs::path& p) { return p.string(); }

const char* ridge_name(RidgeMode m) { return m == RidgeMode::white ? "white" : "black"; }
const char* sign_name(AttributionSign s) { return s == AttributionSign::positive ? "positive" : "negative"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw InputError("non-numeric cell '" + s + "'");
  return v;
}

std::vector<std::string> patch_cells(int poi_id, const PatchIndex& p) {
  return {std::to_string(poi_id), std::to_string(p.ix), std::to_string(p.iy), std::to_string(p.iz)};
}

std::vector<std::string> stats_header(const std::string& prefix) {
  std::vector<std::string> h;
  for (const auto& n : stats_field_names()) h.push_back(prefix + n);
  return h;
}

void append_stats(std::vector<std::string>& row, const std::optional<StatsSummary>& s) {
  if (!s) {
    row.insert(row.end(), stats_field_names().size(), "");
    return;
  }
  for (double v : stats_field_values(*s)) row.push_back(csv::format(v));
}

csv::Table histogram_table(const std::vector<double>& values, int bins) {
  if (values.empty()) return {{"bin_left", "bin_right", "count"}, {}};
  return histogram(values, bins).to_csv();
}

struct Pair {
  const Poi* poi = nullptr;
  PatchIndex patch;
  PredictionStatus status = PredictionStatus::TN;
};

struct PairResult {
  std::vector<std::string> feature_row;
  std::optional<std::vector<std::string>> attribution_row;
  std::optional<std::string> skipped_reason;
  std::vector<std::vector<std::string>> blob_rows;
  std::vector<std::vector<std::string>> sensitivity_rows;
  std::vector<double> blob_sizes;
  std::vector<double> blob_distances;
  std::optional<double> vessel_size;
  bool has_blob = false;
};

struct Context {
  const PipelineConfig& cfg;
  PipelineStages stages;
  const PatchGrid& grid;
  const Volume3D& gt;
  const Volume3D& image;
  std::vector<VesselnessFilter> filters;
};

std::vector<std::string> feature_row(const Context& ctx, const Pair& pair, const Volume3D& gt_patch,
                                     const Field3<double>& dist, const Volume3D& skel_patch, const Volume3D& tub,
                                     std::optional<double>& vessel_size) {
  const Index3 local = pair.poi->position - ctx.grid.origin(pair.patch);
  auto row = patch_cells(pair.poi->id, pair.patch);
  row.push_back(to_string(pair.status));

  std::optional<double> thickness;
  if (gt_patch.at(local) != 0.0f) thickness = thickness_at(dist, local);
  row.push_back(csv::format(thickness));
  row.push_back(csv::format(double(tub.at(local))));

  std::optional<double> rc;
  try {
    const auto excl = exclusion_mask(gt_patch, local);
    rc = relative_connectivity(skel_patch, excl, local);
  } catch (const DomainError& e) {
    spdlog::debug("POI {} patch ({},{},{}): no relative connectivity ({})", pair.poi->id, pair.patch.ix,
                  pair.patch.iy, pair.patch.iz, e.what());
  }
  row.push_back(csv::format(rc));

  const auto summary = patch_vessel_summary(gt_patch, local);
  row.push_back(std::to_string(summary.component_count));
  row.push_back(std::to_string(summary.total_volume));
  row.push_back(std::to_string(summary.poi_component_volume));
  row.push_back(std::to_string(border_distance(ctx.grid, local)));
  vessel_size = double(summary.poi_component_volume);
  return row;
}

void attribution_rows(const Context& ctx, const Pair& pair, PairResult& out) {
  const fs::path file = ctx.cfg.paths.attribution_dir / attribution_file_name(pair.poi->id, pair.patch);
  if (!fs::exists(file)) {
    spdlog::warn("skipping POI {} patch ({},{},{}): {} not found", pair.poi->id, pair.patch.ix, pair.patch.iy,
                 pair.patch.iz, path_string(file));
    out.skipped_reason = "missing attribution file";
    return;
  }
  Volume3D attr;
  try {
    attr = read_volume(file);
  } catch (const InputError& e) {
    throw InputError(path_string(file) + ": " + e.what());
  }
  const int ps = ctx.grid.patch_size;
  if (attr.dims() != Dims{ps, ps, ps})
    throw InputError(path_string(file) + ": dims " + to_string(attr.dims()) + " differ from the patch size " +
                     std::to_string(ps));

  const Index3 origin = ctx.grid.origin(pair.patch);
  const Index3 local = pair.poi->position - origin;
  const auto det = detect_blobs_detailed(attr, ctx.cfg.detector);
  const auto& blobs = det.blobs;

  std::vector<double> all, in_blob, outside;
  all.reserve(attr.size());
  std::vector<double> blob_sum(blobs.count(), 0.0);
  for (std::size_t i = 0; i < attr.size(); ++i) {
    const double v = attr[i];
    all.push_back(v);
    const auto label = int(blobs.label_field[i]);
    if (label > 0) {
      in_blob.push_back(v);
      blob_sum[std::size_t(label - 1)] += v;
    } else {
      outside.push_back(v);
    }
  }

  const auto distances = blob_poi_distances(blobs, to_point(local));
  std::optional<double> fisher, l1;
  if (!in_blob.empty() && !outside.empty()) {
    try {
      fisher = fisher_cnr(in_blob, outside);
    } catch (const DegenerateInput&) {
    }
    try {
      l1 = l1_ratio(in_blob, outside);
    } catch (const DegenerateInput&) {
    }
  }

  auto row = patch_cells(pair.poi->id, pair.patch);
  row.push_back(to_string(pair.status));
  row.push_back(std::to_string(blobs.count()));
  row.push_back(csv::format(nearest_distance(distances)));
  row.push_back(csv::format(fisher));
  row.push_back(csv::format(l1));
  append_stats(row, descriptive_stats(all));
  append_stats(row, in_blob.empty() ? std::nullopt : std::optional(descriptive_stats(in_blob)));
  out.attribution_row = std::move(row);
  out.has_blob = blobs.count() > 0;

  for (const auto& b : blobs.blobs) {
    auto r = patch_cells(pair.poi->id, pair.patch);
    r.push_back(std::to_string(b.label));
    r.push_back(std::to_string(b.size));
    r.push_back(csv::format(b.centroid.x + origin.x));
    r.push_back(csv::format(b.centroid.y + origin.y));
    r.push_back(csv::format(b.centroid.z + origin.z));
    const double d = distances[std::size_t(b.label - 1)];
    r.push_back(csv::format(d));
    r.push_back(csv::format(blob_sum[std::size_t(b.label - 1)] / double(b.size)));
    out.blob_rows.push_back(std::move(r));
    out.blob_sizes.push_back(double(b.size));
    out.blob_distances.push_back(d);
  }

  if (!ctx.cfg.sensitivity_min_component_size.empty()) {
    std::optional<BlobSet> unfiltered;
    if (det.threshold) {
      Volume3D mask = make_mask(attr.dims());
      for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = double(det.response[i]) > *det.threshold ? 1.0f : 0.0f;
      unfiltered = label_components(mask, ctx.cfg.detector.connectivity);
    }
    for (std::size_t min_size : ctx.cfg.sensitivity_min_component_size) {
      auto r = patch_cells(pair.poi->id, pair.patch);
      r.push_back(std::to_string(min_size));
      if (unfiltered) {
        const auto kept = remove_small_components(*unfiltered, min_size);
        r.push_back(std::to_string(kept.count()));
        r.push_back(csv::format(nearest_distance(blob_poi_distances(kept, to_point(local)))));
      } else {
        r.push_back("0");
        r.push_back("");
      }
      out.sensitivity_rows.push_back(std::move(r));
    }
  }
}

// All pairs sharing one patch, so the patch-level caches are built once.
void process_patch(const Context& ctx, const std::vector<Pair>& pairs, const std::vector<std::size_t>& members,
                   std::vector<PairResult>& results) {
  const PatchIndex patch = pairs[members.front()].patch;
  Volume3D gt_patch, skel_patch, tub;
  Field3<double> dist;
  if (ctx.stages.features) {
    gt_patch = extract_patch(ctx.gt, ctx.grid, patch);
    dist = edt(gt_patch);
    skel_patch = skeletonize(gt_patch);
    tub = tubularity(extract_patch(ctx.image, ctx.grid, patch), ctx.filters);
  }
  for (std::size_t i : members) {
    auto& r = results[i];
    if (ctx.stages.features)
      r.feature_row = feature_row(ctx, pairs[i], gt_patch, dist, skel_patch, tub, r.vessel_size);
    if (ctx.stages.attribution) attribution_rows(ctx, pairs[i], r);
  }
}

std::vector<PairResult> process_pairs(const Context& ctx, const std::vector<Pair>& pairs) {
  std::map<PatchIndex, std::vector<std::size_t>> by_patch;
  for (std::size_t i = 0; i < pairs.size(); ++i) by_patch[pairs[i].patch].push_back(i);
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [p, members] : by_patch) groups.push_back(&members);

  std::vector<PairResult> results(pairs.size());
  std::vector<std::exception_ptr> errors(groups.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t g = next++; g < groups.size(); g = next++) {
      try {
        process_patch(ctx, pairs, *groups[g], results);
      } catch (...) {
        errors[g] = std::current_exception();
      }
    }
  };
  const auto n = std::min<std::size_t>(std::size_t(ctx.cfg.workers), std::max<std::size_t>(groups.size(), 1));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  }
  // Report the failure of the first patch in order, independent of timing.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

Volume3D load_checked(const fs::path& path) {
  try {
    return read_volume(path);
  } catch (const InputError& e) {
    throw InputError(path_string(path) + ": " + e.what());
  }
}

}  // namespace

void PipelineConfig::validate(bool check_paths) const {
  if (patch_size < 1) throw ConfigError("'patch.size' must be >= 1");
  if (!(overlap >= 0.0 && overlap < 0.5)) throw ConfigError("'patch.overlap' must be in [0, 0.5)");
  try {
    detector.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("'detector': ") + e.what());
  }
  if (tubularity_filters.empty()) throw ConfigError("'features.tubularity_filters' must not be empty");
  for (const auto& f : tubularity_filters) vesselness_filter(f, detector.frangi);
  if (status_filter.empty()) throw ConfigError("'status_filter' must not be empty");
  for (auto s : sensitivity_min_component_size)
    if (s < 1) throw ConfigError("'sensitivity.min_component_size' entries must be >= 1");
  if (histogram_bins < 1) throw ConfigError("'histogram_bins' must be >= 1");
  if (workers < 1) throw ConfigError("'workers' must be >= 1");
  if (!check_paths) return;
  if (paths.gt_mask.empty()) throw ConfigError("'paths.gt_mask' is required");
  if (paths.prediction.empty()) throw ConfigError("'paths.prediction' is required");
  auto must_exist = [](const fs::path& p, const char* key) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError(std::string("'paths.") + key + "' does not exist: " + path_string(p));
  };
  must_exist(paths.gt_mask, "gt_mask");
  must_exist(paths.image, "image");
  must_exist(paths.prediction, "prediction");
  must_exist(paths.attribution_dir, "attribution_dir");
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir, bool check_paths) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"paths", "patch", "detector", "features", "status_filter", "sensitivity", "histogram_bins", "workers"},
             "config");
  PipelineConfig cfg;

  const json paths = j.value("paths", json::object());
  check_keys(paths, {"gt_mask", "image", "prediction", "attribution_dir", "output_dir"}, "paths");
  cfg.paths.gt_mask = resolve(base_dir, field<std::string>(paths, "gt_mask", "paths", ""));
  cfg.paths.image = resolve(base_dir, field<std::string>(paths, "image", "paths", ""));
  cfg.paths.prediction = resolve(base_dir, field<std::string>(paths, "prediction", "paths", ""));
  cfg.paths.attribution_dir = resolve(base_dir, field<std::string>(paths, "attribution_dir", "paths", ""));
  cfg.paths.output_dir = resolve(base_dir, field<std::string>(paths, "output_dir", "paths", "output"));

  const json patch = j.value("patch", json::object());
  check_keys(patch, {"size", "overlap"}, "patch");
  cfg.patch_size = field(patch, "size", "patch", cfg.patch_size);
  cfg.overlap = field(patch, "overlap", "patch", cfg.overlap);

  const json det = j.value("detector", json::object());
  check_keys(det,
             {"alpha", "beta", "c", "sigmas", "ridge_mode", "blobness", "otsu_bins", "min_component_size",
              "connectivity", "sign"},
             "detector");
  auto& fr = cfg.detector.frangi;
  fr.alpha = field(det, "alpha", "detector", fr.alpha);
  fr.beta = field(det, "beta", "detector", fr.beta);
  fr.c = field(det, "c", "detector", fr.c);
  fr.sigmas = field(det, "sigmas", "detector", fr.sigmas);
  fr.blobness = field(det, "blobness", "detector", fr.blobness);
  const auto ridge = field<std::string>(det, "ridge_mode", "detector", "white");
  if (ridge != "white" && ridge != "black") throw ConfigError("'detector.ridge_mode' must be \"white\" or \"black\"");
  fr.ridge_mode = ridge == "white" ? RidgeMode::white : RidgeMode::black;
  cfg.detector.otsu_bins = field(det, "otsu_bins", "detector", cfg.detector.otsu_bins);
  const auto min_size = field<long long>(det, "min_component_size", "detector", 5);
  if (min_size < 1) throw ConfigError("'detector.min_component_size' must be >= 1");
  cfg.detector.min_component_size = std::size_t(min_size);
  const int conn = field(det, "connectivity", "detector", 26);
  if (conn != 6 && conn != 26) throw ConfigError("'detector.connectivity' must be 6 or 26");
  cfg.detector.connectivity = conn == 6 ? Connectivity::face : Connectivity::full;
  const auto sign = field<std::string>(det, "sign", "detector", "positive");
  if (sign != "positive" && sign != "negative")
    throw ConfigError("'detector.sign' must be \"positive\" or \"negative\"");
  cfg.detector.sign = sign == "positive" ? AttributionSign::positive : AttributionSign::negative;

  const json feats = j.value("features", json::object());
  check_keys(feats, {"tubularity_filters"}, "features");
  cfg.tubularity_filters = field(feats, "tubularity_filters", "features", cfg.tubularity_filters);

  if (j.contains("status_filter")) {
    const auto names = field<std::vector<std::string>>(j, "status_filter", "config", {});
    cfg.status_filter.clear();
    try {
      for (const auto& n : names) cfg.status_filter.push_back(parse_status(n));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("'status_filter': ") + e.what());
    }
  }

  const json sens = j.value("sensitivity", json::object());
  check_keys(sens, {"min_component_size"}, "sensitivity");
  for (long long s : field<std::vector<long long>>(sens, "min_component_size", "sensitivity", {})) {
    if (s < 1) throw ConfigError("'sensitivity.min_component_size' entries must be >= 1");
    cfg.sensitivity_min_component_size.push_back(std::size_t(s));
  }

  cfg.histogram_bins = field(j, "histogram_bins", "config", cfg.histogram_bins);
  cfg.workers = field(j, "workers", "config", cfg.workers);
  cfg.validate(check_paths);
  return cfg;
}

PipelineConfig validate_config(const fs::path& path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path_string(path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path(), check_paths);
}

std::string config_to_json(const PipelineConfig& cfg) {
  ojson j;
  j["paths"] = {{"gt_mask", path_string(cfg.paths.gt_mask)},
                {"image", path_string(cfg.paths.image)},
                {"prediction", path_string(cfg.paths.prediction)},
                {"attribution_dir", path_string(cfg.paths.attribution_dir)},
                {"output_dir", path_string(cfg.paths.output_dir)}};
  j["patch"] = {{"size", cfg.patch_size}, {"overlap", cfg.overlap}};
  const auto& fr = cfg.detector.frangi;
  j["detector"] = {{"alpha", fr.alpha},
                   {"beta", fr.beta},
                   {"c", fr.c},
                   {"sigmas", fr.sigmas},
                   {"ridge_mode", ridge_name(fr.ridge_mode)},
                   {"blobness", fr.blobness},
                   {"otsu_bins", cfg.detector.otsu_bins},
                   {"min_component_size", cfg.detector.min_component_size},
                   {"connectivity", int(cfg.detector.connectivity)},
                   {"sign", sign_name(cfg.detector.sign)}};
  j["features"] = {{"tubularity_filters", cfg.tubularity_filters}};
  auto statuses = ojson::array();
  for (auto s : cfg.status_filter) statuses.push_back(to_string(s));
  j["status_filter"] = statuses;
  j["sensitivity"] = {{"min_component_size", cfg.sensitivity_min_component_size}};
  j["histogram_bins"] = cfg.histogram_bins;
  j["workers"] = cfg.workers;
  return j.dump(2) + "\n";
}

std::string attribution_file_name(int poi_id, const PatchIndex& p) {
  return "attr_" + std::to_string(poi_id) + "_" + std::to_string(p.ix) + "_" + std::to_string(p.iy) + "_" +
         std::to_string(p.iz) + ".nii";
}

std::string prediction_file_name(const PatchIndex& p) {
  return "pred_" + std::to_string(p.ix) + "_" + std::to_string(p.iy) + "_" + std::to_string(p.iz) + ".nii";
}

const std::vector<std::string>& feature_columns() {
  static const std::vector<std::string> cols = {"thickness",          "tubularity",          "relative_connectivity",
                                                "patch_component_count", "patch_vessel_volume", "poi_component_volume",
                                                "border_distance"};
  return cols;
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {
      "blob_count",  "nearest_blob_distance", "fisher_cnr", "l1_ratio",  "global_mean", "global_std",
      "global_l1_mean", "global_p50",         "global_p99", "local_mean", "local_std",  "local_l1_mean", "local_max"};
  return cols;
}

NumericTable join_records(const csv::Table& features, const csv::Table& attribution) {
  const std::vector<std::string> key = {"poi_id", "ix", "iy", "iz"};
  auto key_of = [&](const csv::Table& t, const std::vector<std::string>& row) {
    std::vector<std::string> k;
    for (const auto& c : key) k.push_back(row[t.column(c)]);
    return k;
  };
  std::map<std::vector<std::string>, const std::vector<std::string>*> attr_rows;
  for (const auto& r : attribution.rows) attr_rows[key_of(attribution, r)] = &r;

  NumericTable t;
  t.columns = feature_columns();
  t.columns.insert(t.columns.end(), metric_columns().begin(), metric_columns().end());
  std::vector<std::size_t> fcols, mcols;
  for (const auto& c : feature_columns()) fcols.push_back(features.column(c));
  for (const auto& c : metric_columns()) mcols.push_back(attribution.column(c));
  for (const auto& r : features.rows) {
    const auto it = attr_rows.find(key_of(features, r));
    if (it == attr_rows.end()) continue;
    std::vector<std::optional<double>> row;
    for (auto c : fcols) row.push_back(parse_cell(r[c]));
    for (auto c : mcols) row.push_back(parse_cell((*it->second)[c]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

bool RunManifest::rows_conserved(const ReportTables& t) const {
  bool ok = t.features.rows.size() == feature_rows && t.blobs.rows.size() == blob_rows &&
            t.attribution.rows.size() == maps_analyzed && t.skipped.rows.size() == maps_skipped &&
            pairs_selected <= pairs;
  if (attribution_stage) ok = ok && maps_analyzed + maps_skipped == pairs_selected;
  return ok;
}

std::string RunManifest::to_json(const ReportTables& t) const {
  ojson j;
  j["version"] = version;
  j["config"] = ojson::parse(config_json);
  j["counts"] = {{"pois", pois},
                 {"pairs", pairs},
                 {"pairs_selected", pairs_selected},
                 {"maps_analyzed", maps_analyzed},
                 {"maps_skipped", maps_skipped},
                 {"maps_with_blob", maps_with_blob},
                 {"feature_rows", feature_rows},
                 {"attribution_rows", t.attribution.rows.size()},
                 {"blob_rows", blob_rows}};
  j["attribution_stage"] = attribution_stage;
  j["rows_conserved"] = rows_conserved(t);
  j["stage_seconds"] = stage_seconds;
  return j.dump(2) + "\n";
}

PipelineResult run_pipeline(const PipelineConfig& cfg, PipelineStages stages) {
  cfg.validate();
  if (stages.attribution && cfg.paths.attribution_dir.empty())
    throw ConfigError("'paths.attribution_dir' is required for attribution analysis");
  PipelineResult res;
  auto& m = res.manifest;
  m.version = version();
  m.config_json = config_to_json(cfg);
  m.attribution_stage = stages.attribution;

  auto t0 = std::chrono::steady_clock::now();
  const Volume3D gt = load_checked(cfg.paths.gt_mask);
  if (!gt.is_binary()) throw InputError(path_string(cfg.paths.gt_mask) + ": ground truth is not a binary mask");
  Volume3D image;
  if (cfg.paths.image.empty()) {
    image = gt;
    image.set_kind(VolumeKind::intensity);
  } else {
    image = load_checked(cfg.paths.image);
    if (image.dims() != gt.dims()) throw InputError(path_string(cfg.paths.image) + ": dims differ from the mask");
  }
  PatchGrid grid;
  try {
    grid = build_patch_grid(gt.dims(), cfg.patch_size, cfg.overlap);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("'patch': ") + e.what());
  }
  m.stage_seconds["load"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  res.graph = build_graph(skeletonize(gt));
  res.pois = select_pois(res.graph, gt, grid);
  m.pois = res.pois.size();
  m.stage_seconds["graph"] = seconds_since(t0);
  spdlog::info("graph: {} nodes, {} edges, {} POIs", res.graph.nodes.size(), res.graph.edges.size(), m.pois);

  t0 = std::chrono::steady_clock::now();
  std::optional<Volume3D> whole_prediction;
  std::map<PatchIndex, Volume3D> patch_predictions;
  const bool per_patch = fs::is_directory(cfg.paths.prediction);
  if (!per_patch) {
    whole_prediction = load_checked(cfg.paths.prediction);
    if (whole_prediction->dims() != gt.dims())
      throw InputError(path_string(cfg.paths.prediction) + ": dims differ from the mask");
  }
  std::vector<Pair> pairs;
  auto& pairs_table = res.tables.pairs;
  pairs_table.header = {"poi_id", "ix", "iy", "iz", "status", "selected"};
  for (const auto& poi : res.pois) {
    auto patches = poi.patch_memberships;
    std::sort(patches.begin(), patches.end());
    for (const auto& patch : patches) {
      const Volume3D* pred = nullptr;
      if (per_patch) {
        auto it = patch_predictions.find(patch);
        if (it == patch_predictions.end()) {
          const fs::path f = cfg.paths.prediction / prediction_file_name(patch);
          if (!fs::exists(f)) throw InputError("missing patch prediction " + path_string(f));
          Volume3D v = load_checked(f);
          const int ps = grid.patch_size;
          if (v.dims() != Dims{ps, ps, ps}) throw InputError(path_string(f) + ": dims differ from the patch size");
          it = patch_predictions.emplace(patch, std::move(v)).first;
        }
        pred = &it->second;
      } else {
        pred = &*whole_prediction;
      }
      const auto status = classify_poi_status(poi, patch, grid, *pred, gt);
      const bool selected =
          std::find(cfg.status_filter.begin(), cfg.status_filter.end(), status) != cfg.status_filter.end();
      auto row = patch_cells(poi.id, patch);
      row.push_back(to_string(status));
      row.push_back(selected ? "1" : "0");
      pairs_table.rows.push_back(std::move(row));
      if (selected) pairs.push_back({&poi, patch, status});
    }
  }
  m.pairs = pairs_table.rows.size();
  m.pairs_selected = pairs.size();
  m.stage_seconds["status"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  Context ctx{cfg, stages, grid, gt, image, {}};
  for (const auto& f : cfg.tubularity_filters) ctx.filters.push_back(vesselness_filter(f, cfg.detector.frangi));
  auto results = process_pairs(ctx, pairs);
  m.stage_seconds["analysis"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  auto& t = res.tables;
  t.features.header = {"poi_id", "ix", "iy", "iz", "status"};
  t.features.header.insert(t.features.header.end(), feature_columns().begin(), feature_columns().end());
  t.attribution.header = {"poi_id",     "ix",                    "iy",         "iz",
                          "status",     "blob_count",            "nearest_blob_distance", "fisher_cnr",
                          "l1_ratio"};
  for (const auto& h : stats_header("global_")) t.attribution.header.push_back(h);
  for (const auto& h : stats_header("local_")) t.attribution.header.push_back(h);
  t.blobs.header = {"poi_id", "ix", "iy", "iz", "blob_label", "size_voxels", "cx", "cy", "cz", "distance_to_poi",
                    "mean_attr_in_blob"};
  t.sensitivity.header = {"poi_id", "ix", "iy", "iz", "min_component_size", "blob_count", "nearest_blob_distance"};
  t.skipped.header = {"poi_id", "ix", "iy", "iz", "reason"};

  std::vector<double> blob_sizes, vessel_sizes, blob_distances;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    if (stages.features) t.features.rows.push_back(std::move(r.feature_row));
    if (r.vessel_size) vessel_sizes.push_back(*r.vessel_size);
    if (r.attribution_row) t.attribution.rows.push_back(std::move(*r.attribution_row));
    if (r.skipped_reason) {
      auto row = patch_cells(pairs[i].poi->id, pairs[i].patch);
      row.push_back(*r.skipped_reason);
      t.skipped.rows.push_back(std::move(row));
    }
    for (auto& b : r.blob_rows) t.blobs.rows.push_back(std::move(b));
    for (auto& s : r.sensitivity_rows) t.sensitivity.rows.push_back(std::move(s));
    blob_sizes.insert(blob_sizes.end(), r.blob_sizes.begin(), r.blob_sizes.end());
    blob_distances.insert(blob_distances.end(), r.blob_distances.begin(), r.blob_distances.end());
    if (r.has_blob) ++m.maps_with_blob;
  }
  m.maps_analyzed = t.attribution.rows.size();
  m.maps_skipped = t.skipped.rows.size();
  m.feature_rows = t.features.rows.size();
  m.blob_rows = t.blobs.rows.size();

  if (stages.features && stages.attribution) {
    t.correlation = correlation_matrix(join_records(t.features, t.attribution), feature_columns(), metric_columns());
  } else {
    t.correlation = correlation_matrix(NumericTable{}, {}, {});
  }
  t.hist_blob_sizes = histogram_table(blob_sizes, cfg.histogram_bins);
  t.hist_vessel_sizes = histogram_table(vessel_sizes, cfg.histogram_bins);
  t.hist_blob_distances = histogram_table(blob_distances, cfg.histogram_bins);
  m.stage_seconds["statistics"] = seconds_since(t0);

  spdlog::info("{} (POI, patch) pairs, {} selected, {} maps analyzed, {} skipped, {} with blobs", m.pairs,
               m.pairs_selected, m.maps_analyzed, m.maps_skipped, m.maps_with_blob);
  if (!m.rows_conserved(t)) throw Error("internal error: report row counts do not reconcile");
  return res;
}

void emit_reports(const PipelineResult& result, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory " + path_string(out_dir) + ": " + ec.message());
  const auto& t = result.tables;
  write_graph(result.graph, out_dir / "graph.json");
  write_poi_table(result.pois, out_dir / "pois.csv");
  csv::write(t.pairs, out_dir / "pairs.csv");
  csv::write(t.features, out_dir / "features.csv");
  csv::write(t.attribution, out_dir / "attribution.csv");
  csv::write(t.blobs, out_dir / "blobs.csv");
  csv::write(t.sensitivity, out_dir / "sensitivity.csv");
  csv::write(t.skipped, out_dir / "skipped.csv");
  csv::write(t.correlation.to_csv(), out_dir / "correlation.csv");
  csv::write(t.hist_blob_sizes, out_dir / "hist_blob_sizes.csv");
  csv::write(t.hist_vessel_sizes, out_dir / "hist_vessel_sizes.csv");
  csv::write(t.hist_blob_distances, out_dir / "hist_blob_distances.csv");
  auto write_text = [&](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + path_string(p));
    out << text;
  };
  write_text(out_dir / "correlation.json", t.correlation.to_json());
  write_text(out_dir / "manifest.json", result.manifest.to_json(t));
}

}  // namespace vxai
