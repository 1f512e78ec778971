#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vxai/components.hpp"
#include "vxai/csv.hpp"
#include "vxai/volume.hpp"

namespace vxai {

/// Population statistics of a sample. Percentiles interpolate linearly
/// between the closest order statistics.
struct StatsSummary {
  std::size_t count = 0;
  double mean = 0;
  double std = 0;
  double min = 0;
  double max = 0;
  double p1 = 0, p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0, p99 = 0;
  double l1_mean = 0;  ///< mean absolute value
};

/// Column suffixes matching StatsSummary fields, in output order.
const std::vector<std::string>& stats_field_names();
std::vector<double> stats_field_values(const StatsSummary& s);

StatsSummary descriptive_stats(std::span<const double> values);
/// Percentile q in [0, 100] of already sorted values.
double percentile_sorted(std::span<const double> sorted, double q);

/// (mu_blob - mu_bg)^2 / (var_blob + var_bg) with population variances.
/// Zero variances with equal means give 0; with different means the
/// ratio is undefined and DegenerateInput is thrown.
double fisher_cnr(std::span<const double> blob_values, std::span<const double> bg_values);

/// mean(|blob|) / mean(|bg|); DegenerateInput when the background L1 mean is 0.
double l1_ratio(std::span<const double> blob_values, std::span<const double> bg_values);

/// Euclidean distance from each blob centroid to the POI, in blob order.
std::vector<double> blob_poi_distances(const BlobSet& blobs, const Point3& poi);
std::optional<double> nearest_distance(std::span<const double> distances);

/// Ranks starting at 1; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation: Pearson correlation of average ranks.
/// Requires equal lengths >= 3 (DomainError) and non-constant inputs
/// (DegenerateInput).
double spearman(std::span<const double> x, std::span<const double> y);

/// Named numeric columns with optional (missing) cells.
struct NumericTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<std::optional<double>> values(const std::string& name) const;
};

struct CorrelationMatrix {
  std::vector<std::string> row_labels;  ///< vessel features
  std::vector<std::string> col_labels;  ///< attribution metrics
  std::vector<std::vector<std::optional<double>>> values;  ///< nullopt when undefined
  std::vector<std::vector<std::size_t>> counts;            ///< rows where both cells are present

  csv::Table to_csv() const;
  std::string to_json() const;
};

/// Spearman correlation of every (feature, metric) pair over the rows where
/// both are present. Pairs with fewer than 3 rows or a constant column are
/// reported as missing. Unknown columns raise InputError.
CorrelationMatrix correlation_matrix(const NumericTable& records, const std::vector<std::string>& feature_cols,
                                     const std::vector<std::string>& metric_cols);

struct Histogram {
  std::vector<double> edges;  ///< bins + 1 edges
  std::vector<std::size_t> counts;
  std::size_t out_of_range = 0;

  csv::Table to_csv() const;
};

/// Uniform bins over [min, max] of the data or over `range`; the last bin
/// is closed on the right. Values outside the range are counted in
/// out_of_range only.
Histogram histogram(std::span<const double> values, int bins,
                    std::optional<std::pair<double, double>> range = std::nullopt);

}  // namespace vxai
