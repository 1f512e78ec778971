#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "pipeline_fixture.hpp"
#include "vxai/error.hpp"
#include "vxai/phantom.hpp"
#include "vxai/pipeline.hpp"
#include "vxai/volume_io.hpp"

using namespace vxai;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kCsvOutputs = {
    "pois.csv",      "pairs.csv",         "features.csv",          "attribution.csv",        "blobs.csv",
    "sensitivity.csv", "skipped.csv",     "correlation.csv",       "hist_blob_sizes.csv",    "hist_vessel_sizes.csv",
    "hist_blob_distances.csv"};

std::size_t column(const csv::Table& t, const std::string& name) { return t.column(name); }

}  // namespace

TEST(Config, DefaultsFromPathsOnly) {
  const auto cfg = parse_config(R"({"paths": {"gt_mask": "gt.nii"}})", "/data", false);
  EXPECT_EQ(cfg.paths.gt_mask, fs::path("/data/gt.nii"));
  EXPECT_EQ(cfg.paths.output_dir, fs::path("/data/output"));
  EXPECT_EQ(cfg.patch_size, 64);
  EXPECT_EQ(cfg.overlap, 0.25);
  EXPECT_EQ(cfg.detector.frangi.alpha, 0.5);
  EXPECT_EQ(cfg.detector.frangi.beta, 0.5);
  EXPECT_EQ(cfg.detector.frangi.c, 15.0);
  EXPECT_EQ(cfg.detector.frangi.sigmas, FrangiParams::default_sigmas());
  EXPECT_EQ(cfg.detector.otsu_bins, 256);
  EXPECT_EQ(cfg.detector.min_component_size, 5u);
  EXPECT_EQ(cfg.detector.connectivity, Connectivity::full);
  EXPECT_EQ(cfg.detector.sign, AttributionSign::positive);
  EXPECT_FALSE(cfg.detector.frangi.blobness);
  EXPECT_EQ(cfg.status_filter, (std::vector<PredictionStatus>{PredictionStatus::TP}));
  EXPECT_EQ(cfg.tubularity_filters, (std::vector<std::string>{"frangi"}));
  // The canonical echo parses back to itself.
  const auto echo = config_to_json(cfg);
  EXPECT_EQ(config_to_json(parse_config(echo, "/elsewhere", false)), echo);
}

TEST(Config, Violations) {
  auto error_of = [](const std::string& text) {
    try {
      parse_config(text, "/data", false);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(error_of(R"({"patch": {"overlap": 0.6}})").find("overlap"), std::string::npos);
  EXPECT_NE(error_of(R"({"detector": {"sigma_max": 16}})").find("sigma_max"), std::string::npos);
  EXPECT_NE(error_of(R"({"colour": 1})").find("colour"), std::string::npos);
  EXPECT_NE(error_of(R"({"status_filter": []})").find("status_filter"), std::string::npos);
  EXPECT_NE(error_of(R"({"status_filter": ["maybe"]})"), "no error");
  EXPECT_NE(error_of(R"({"detector": {"connectivity": 18}})").find("connectivity"), std::string::npos);
  EXPECT_NE(error_of(R"({"detector": {"otsu_bins": 1}})").find("otsu_bins"), std::string::npos);
  EXPECT_NE(error_of(R"({"patch": {"size": "big"}})").find("patch"), std::string::npos);
  EXPECT_NE(error_of("{oops"), "no error");
  EXPECT_EQ(error_of(R"({"detector": {"sigmas": [2, 4], "blobness": true}})"), "no error");
}

TEST(Config, PathsAreCheckedWhenRequested) {
  const auto dir = fixtures::temp_dir();
  std::ofstream(dir / "c.json") << R"({"paths": {"gt_mask": "missing.nii"}})";
  EXPECT_THROW(validate_config(dir / "c.json"), ConfigError);
  EXPECT_NO_THROW(validate_config(dir / "c.json", false));
  EXPECT_THROW(validate_config(dir / "absent.json"), ConfigError);
}

TEST(Naming, FileNameContract) {
  EXPECT_EQ(attribution_file_name(3, {1, 0, 2}), "attr_3_1_0_2.nii");
  EXPECT_EQ(prediction_file_name({0, 2, 1}), "pred_0_2_1.nii");
}

class YPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "vxai_tests" / "YPipeline";
    fs::remove_all(dir_);
    config_ = ydata::write(dir_);
    result_ = new PipelineResult(run_pipeline(validate_config(config_)));
  }
  static void TearDownTestSuite() {
    delete result_;
    result_ = nullptr;
  }
  static fs::path dir_, config_;
  static PipelineResult* result_;
};
fs::path YPipeline::dir_, YPipeline::config_;
PipelineResult* YPipeline::result_ = nullptr;

TEST_F(YPipeline, SevenPoisAllTruePositive) {
  const auto& r = *result_;
  EXPECT_EQ(r.pois.size(), 7u);
  const auto& pairs = r.tables.pairs;
  EXPECT_EQ(pairs.rows.size(), r.manifest.pairs);
  std::size_t expected_pairs = 0;
  for (const auto& p : r.pois) expected_pairs += p.patch_memberships.size();
  EXPECT_EQ(pairs.rows.size(), expected_pairs);
  for (const auto& row : pairs.rows) EXPECT_EQ(row[column(pairs, "status")], "TP");
  EXPECT_EQ(r.manifest.pairs_selected, expected_pairs);
}

TEST_F(YPipeline, EveryMapHasABlobNearThePoi) {
  const auto& t = result_->tables.attribution;
  ASSERT_EQ(t.rows.size(), result_->manifest.pairs_selected);
  EXPECT_EQ(result_->manifest.maps_analyzed, t.rows.size());
  EXPECT_EQ(result_->manifest.maps_with_blob, t.rows.size());
  for (const auto& row : t.rows) {
    EXPECT_GE(std::stoi(row[column(t, "blob_count")]), 1);
    EXPECT_LE(std::stod(row[column(t, "nearest_blob_distance")]), 1.5);
    EXPECT_GE(std::stod(row[column(t, "l1_ratio")]), 10.0);
  }
  EXPECT_TRUE(result_->manifest.rows_conserved(result_->tables));
  EXPECT_TRUE(result_->tables.skipped.rows.empty());
}

TEST_F(YPipeline, FeatureRowsLookLikeTheGeometry) {
  const auto& t = result_->tables.features;
  ASSERT_EQ(t.rows.size(), result_->manifest.pairs_selected);
  for (const auto& row : t.rows) {
    const double thick = std::stod(row[column(t, "thickness")]);
    EXPECT_GT(thick, 0.0);
    EXPECT_LE(thick, 4.0);
    const double tub = std::stod(row[column(t, "tubularity")]);
    EXPECT_GE(tub, 0.0);
    EXPECT_LE(tub, 1.0);
    EXPECT_GE(std::stoi(row[column(t, "patch_component_count")]), 1);
  }
  // The bifurcation POI sees three branches in every patch that holds the whole junction.
  bool saw_three = false;
  for (const auto& row : t.rows)
    if (row[column(t, "poi_id")] == "0" && row[column(t, "relative_connectivity")] == "3") saw_three = true;
  EXPECT_TRUE(saw_three);
}

TEST_F(YPipeline, SensitivityRowsCoverTheSweep) {
  const auto& s = result_->tables.sensitivity;
  EXPECT_EQ(s.rows.size(), 3 * result_->manifest.maps_analyzed);
}

TEST_F(YPipeline, EmitIsDeterministicAcrossRunsAndWorkers) {
  const auto a = dir_ / "emit_a", b = dir_ / "emit_b";
  emit_reports(*result_, a);
  auto cfg = validate_config(config_);
  cfg.workers = 2;
  emit_reports(run_pipeline(cfg), b);
  for (const auto& name : kCsvOutputs) {
    ASSERT_TRUE(fs::exists(a / name)) << name;
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  EXPECT_EQ(slurp(a / "graph.json"), slurp(b / "graph.json"));
  EXPECT_EQ(slurp(a / "correlation.json"), slurp(b / "correlation.json"));
  EXPECT_NE(slurp(a / "manifest.json").find("\"rows_conserved\": true"), std::string::npos);
}

TEST_F(YPipeline, PerPatchPredictionsMatchTheWholeVolume) {
  auto cfg = validate_config(config_);
  const auto pred = read_volume(cfg.paths.prediction);
  const auto grid = build_patch_grid(pred.dims(), cfg.patch_size, cfg.overlap);
  const auto pdir = dir_ / "pred_patches";
  fs::create_directories(pdir);
  for (const auto& idx : grid.all()) write_volume(extract_patch(pred, grid, idx), pdir / prediction_file_name(idx));
  cfg.paths.prediction = pdir;
  const auto r = run_pipeline(cfg, {true, false});
  EXPECT_EQ(csv::to_string(r.tables.pairs), csv::to_string(result_->tables.pairs));
  EXPECT_EQ(csv::to_string(r.tables.features), csv::to_string(result_->tables.features));
  EXPECT_TRUE(r.tables.attribution.rows.empty());
  EXPECT_FALSE(r.manifest.attribution_stage);

  fs::remove(pdir / prediction_file_name({0, 0, 0}));
  EXPECT_THROW(run_pipeline(cfg, {true, false}), InputError);
}

TEST(Pipeline, AllZeroPredictionGivesEmptyTables) {
  const auto dir = fixtures::temp_dir();
  ydata::Options opt;
  opt.all_zero_prediction = true;
  const auto cfg = validate_config(ydata::write(dir, opt));
  const auto r = run_pipeline(cfg);
  EXPECT_EQ(r.manifest.pairs_selected, 0u);
  EXPECT_EQ(r.manifest.maps_analyzed, 0u);
  EXPECT_EQ(r.manifest.maps_with_blob, 0u);
  EXPECT_TRUE(r.tables.features.rows.empty());
  EXPECT_TRUE(r.tables.attribution.rows.empty());
  EXPECT_TRUE(r.manifest.rows_conserved(r.tables));
  emit_reports(r, cfg.paths.output_dir);
  for (const auto& name : {"features.csv", "attribution.csv", "blobs.csv", "hist_blob_sizes.csv"}) {
    const auto text = slurp(cfg.paths.output_dir / name);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1) << name;
  }
  for (const auto& row : r.tables.pairs.rows) EXPECT_EQ(row[4], "FN");
}

TEST(Pipeline, MissingAttributionIsSkippedAndCounted) {
  const auto dir = fixtures::temp_dir();
  const auto cfg = validate_config(ydata::write(dir));
  std::vector<fs::path> maps;
  for (const auto& e : fs::directory_iterator(cfg.paths.attribution_dir)) maps.push_back(e.path());
  std::sort(maps.begin(), maps.end());
  ASSERT_GE(maps.size(), 2u);
  fs::remove(maps[1]);
  const auto r = run_pipeline(cfg);
  ASSERT_EQ(r.tables.skipped.rows.size(), 1u);
  EXPECT_EQ(r.tables.skipped.rows[0].back(), "missing attribution file");
  EXPECT_EQ(r.manifest.maps_skipped, 1u);
  EXPECT_EQ(r.tables.attribution.rows.size() + 1, r.manifest.pairs_selected);
  EXPECT_TRUE(r.manifest.rows_conserved(r.tables));
}

TEST(Pipeline, MalformedVolumeAborts) {
  const auto dir = fixtures::temp_dir();
  const auto cfg = validate_config(ydata::write(dir));
  std::vector<fs::path> maps;
  for (const auto& e : fs::directory_iterator(cfg.paths.attribution_dir)) maps.push_back(e.path());
  fs::resize_file(maps.front(), 400);
  EXPECT_THROW(run_pipeline(cfg), InputError);
  write_volume(make_mask({8, 8, 8}), maps.front());  // wrong size
  EXPECT_THROW(run_pipeline(cfg), InputError);
}

TEST(Pipeline, NonAsciiOutputPath) {
  const auto dir = fixtures::temp_dir();
  const auto cfg = validate_config(ydata::write(dir, {true}));
  const fs::path out = dir / fs::path(u8"sortie_é_血管");
  emit_reports(run_pipeline(cfg, {true, false}), out);
  EXPECT_TRUE(fs::exists(out / "features.csv"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  bool found = false;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() == fs::path(u8"sortie_é_血管")) found = true;
  EXPECT_TRUE(found);
}

TEST(Pipeline, JoinRecordsKeepsFeatureAndMetricColumns) {
  csv::Table f, a;
  f.header = {"poi_id", "ix", "iy", "iz", "status"};
  for (const auto& c : feature_columns()) f.header.push_back(c);
  a.header = {"poi_id", "ix", "iy", "iz", "status"};
  for (const auto& c : metric_columns()) a.header.push_back(c);
  std::vector<std::string> frow{"0", "0", "0", "0", "TP"}, arow{"0", "0", "0", "0", "TP"};
  for (std::size_t i = 0; i < feature_columns().size(); ++i) frow.push_back(std::to_string(i));
  for (std::size_t i = 0; i < metric_columns().size(); ++i) arow.push_back(i == 0 ? "" : "1.5");
  f.rows = {frow};
  a.rows = {arow};
  auto other = arow;
  other[0] = "9";
  a.rows.push_back(other);  // no feature partner
  const auto t = join_records(f, a);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.columns.size(), feature_columns().size() + metric_columns().size());
  EXPECT_EQ(*t.rows[0][1], 1.0);
  EXPECT_FALSE(t.rows[0][feature_columns().size()].has_value());
}

TEST(Phantom, TubeVoxelCountMatchesAnalyticVolume) {
  // Closed segment: 41 slices of the 29-point lattice disc of radius 3.
  const auto thin = tube_phantom({50, 21, 21}, {5, 10, 10}, {45, 10, 10}, 3);
  EXPECT_NEAR(analytic_volume(std::get<Cylinder>(thin.primitives[0])), M_PI * 9 * 40, 1e-9);
  EXPECT_EQ(generate_phantom(thin).gt.count_nonzero(), 41u * 29u);

  // Discretization error shrinks with size.
  const auto spec = tube_phantom({100, 21, 21}, {10, 10, 10}, {90, 10, 10}, 6);
  const auto ph = generate_phantom(spec);
  const double analytic = analytic_volume(std::get<Cylinder>(spec.primitives[0]));
  EXPECT_NEAR(double(ph.gt.count_nonzero()), analytic, 0.02 * analytic);
  EXPECT_EQ(ph.gt.kind(), VolumeKind::binary_mask);
}

TEST(Phantom, BumpImagePeaksAtItsCentre) {
  const auto ph = generate_phantom(gaussian_bump_phantom({33, 33, 33}, {16, 12, 20}, 4, 1));
  const auto d = ph.image.data();
  const auto it = std::max_element(d.begin(), d.end());
  EXPECT_EQ(ph.image.dims().coord(std::size_t(it - d.begin())), (Index3{16, 12, 20}));
  EXPECT_FLOAT_EQ(*it, 1.0f);
  EXPECT_EQ(ph.gt.count_nonzero(), 0u);
}

TEST(Phantom, MembershipAgreesWithTheAnalyticSolids) {
  std::mt19937_64 rng(8);
  const auto spec = fixtures::random_tube_union({24, 24, 24}, 3, rng);
  const auto ph = generate_phantom(spec);
  for (int z = 0; z < 24; ++z)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        bool in = false;
        for (const auto& p : ph.analytic.primitives)
          if (const auto* c = std::get_if<Cylinder>(&p)) in = in || inside(*c, {double(x), double(y), double(z)});
        ASSERT_EQ(ph.gt.at(x, y, z) != 0.0f, in);
      }
}

TEST(Phantom, DeterministicIncludingNoise) {
  auto spec = sphere_phantom({20, 20, 20}, {10, 10, 10}, 5);
  spec.noise_sigma = 0.1;
  spec.seed = 42;
  const auto a = generate_phantom(spec), b = generate_phantom(spec);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.gt, b.gt);
  spec.seed = 43;
  EXPECT_NE(generate_phantom(spec).image, a.image);
}

TEST(Phantom, GeometryOutsideTheVolumeIsRejected) {
  EXPECT_THROW(generate_phantom(sphere_phantom({10, 10, 10}, {5, 5, 5}, 6)), DomainError);
  EXPECT_THROW(generate_phantom(tube_phantom({10, 10, 10}, {0, 5, 5}, {12, 5, 5}, 2)), DomainError);
  EXPECT_THROW(generate_phantom(gaussian_bump_phantom({10, 10, 10}, {11, 5, 5}, 2, 1)), DomainError);
  EXPECT_THROW(generate_phantom(sphere_phantom({10, 10, 10}, {5, 5, 5}, 0)), ConfigError);
}

TEST(Phantom, JsonRoundTripAndStrictKeys) {
  auto spec = y_junction_phantom({40, 40, 20}, {20, 20, 10}, {{{35, 20, 10}, {8, 32, 10}, {8, 8, 10}}}, 2);
  spec.primitives.emplace_back(GaussianBump{{5, 5, 5}, 2, -0.5});
  spec.noise_sigma = 0.25;
  spec.seed = 9;
  const auto text = phantom_spec_to_json(spec);
  const auto back = phantom_spec_from_json(text);
  EXPECT_EQ(phantom_spec_to_json(back), text);
  EXPECT_EQ(generate_phantom(back).image, generate_phantom(spec).image);
  EXPECT_THROW(phantom_spec_from_json(R"({"dims": [4, 4, 4], "colour": 1})"), ConfigError);
  EXPECT_THROW(phantom_spec_from_json(R"({"dims": [4, 4, 4], "primitives": [{"type": "cone"}]})"), ConfigError);
  EXPECT_THROW(phantom_spec_from_json(R"({"dims": [4, 4]})"), ConfigError);
  EXPECT_THROW(phantom_spec_from_json(
                   R"({"dims": [9, 9, 9], "primitives": [{"type": "ball", "center": [4, 4, 4], "radius": 2, "r": 1}]})"),
               ConfigError);
}
