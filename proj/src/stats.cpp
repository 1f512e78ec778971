#include "vxai/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace vxai {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double population_variance(std::span<const double> v, double mean) {
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / double(v.size());
}

double l1_mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += std::fabs(x);
  return s / double(v.size());
}

}  // namespace

const std::vector<std::string>& stats_field_names() {
  static const std::vector<std::string> names = {"count", "mean", "std", "min", "max", "p1", "p5",
                                                 "p25",   "p50",  "p75", "p95", "p99", "l1_mean"};
  return names;
}

std::vector<double> stats_field_values(const StatsSummary& s) {
  return {double(s.count), s.mean, s.std, s.min, s.max, s.p1, s.p5, s.p25, s.p50, s.p75, s.p95, s.p99, s.l1_mean};
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("percentile of an empty sample");
  const double pos = q / 100.0 * double(sorted.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - double(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

StatsSummary descriptive_stats(std::span<const double> values) {
  if (values.empty()) throw DomainError("descriptive statistics of an empty sample");
  StatsSummary s;
  s.count = values.size();
  s.mean = mean_of(values);
  s.std = std::sqrt(population_variance(values, s.mean));
  s.l1_mean = l1_mean_of(values);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.p1 = percentile_sorted(sorted, 1);
  s.p5 = percentile_sorted(sorted, 5);
  s.p25 = percentile_sorted(sorted, 25);
  s.p50 = percentile_sorted(sorted, 50);
  s.p75 = percentile_sorted(sorted, 75);
  s.p95 = percentile_sorted(sorted, 95);
  s.p99 = percentile_sorted(sorted, 99);
  return s;
}

double fisher_cnr(std::span<const double> blob_values, std::span<const double> bg_values) {
  if (blob_values.empty() || bg_values.empty()) throw DomainError("Fisher CNR needs non-empty blob and background");
  const double mb = mean_of(blob_values), mg = mean_of(bg_values);
  const double num = (mb - mg) * (mb - mg);
  const double den = population_variance(blob_values, mb) + population_variance(bg_values, mg);
  if (den == 0.0) {
    if (num == 0.0) return 0.0;
    throw DegenerateInput("Fisher CNR undefined: both regions have zero variance but different means");
  }
  return num / den;
}

double l1_ratio(std::span<const double> blob_values, std::span<const double> bg_values) {
  if (blob_values.empty() || bg_values.empty()) throw DomainError("L1 ratio needs non-empty blob and background");
  const double bg = l1_mean_of(bg_values);
  if (bg == 0.0) throw DegenerateInput("L1 ratio undefined: background L1 mean is zero");
  return l1_mean_of(blob_values) / bg;
}

std::vector<double> blob_poi_distances(const BlobSet& blobs, const Point3& poi) {
  std::vector<double> out;
  out.reserve(blobs.blobs.size());
  for (const auto& b : blobs.blobs) out.push_back(distance(b.centroid, poi));
  return out;
}

std::optional<double> nearest_distance(std::span<const double> distances) {
  if (distances.empty()) return std::nullopt;
  return *std::min_element(distances.begin(), distances.end());
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("Spearman inputs differ in length");
  if (x.size() < 3) throw DomainError("Spearman needs at least 3 observations");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double mx = mean_of(rx), my = mean_of(ry);
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) throw DegenerateInput("Spearman correlation of a constant input");
  return std::clamp(num / std::sqrt(dx * dy), -1.0, 1.0);
}

std::size_t NumericTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw InputError("unknown column '" + name + "'");
}

std::vector<std::optional<double>> NumericTable::values(const std::string& name) const {
  const auto c = column(name);
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

CorrelationMatrix correlation_matrix(const NumericTable& records, const std::vector<std::string>& feature_cols,
                                     const std::vector<std::string>& metric_cols) {
  CorrelationMatrix m;
  m.row_labels = feature_cols;
  m.col_labels = metric_cols;
  std::vector<std::vector<std::optional<double>>> feats, metrics;
  for (const auto& f : feature_cols) feats.push_back(records.values(f));
  for (const auto& c : metric_cols) metrics.push_back(records.values(c));
  for (const auto& f : feats) {
    std::vector<std::optional<double>> row;
    std::vector<std::size_t> counts;
    for (const auto& c : metrics) {
      std::vector<double> x, y;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] && c[i] && std::isfinite(*f[i]) && std::isfinite(*c[i])) {
          x.push_back(*f[i]);
          y.push_back(*c[i]);
        }
      counts.push_back(x.size());
      std::optional<double> r;
      if (x.size() >= 3) {
        try {
          r = spearman(x, y);
        } catch (const DegenerateInput&) {
        }
      }
      row.push_back(r);
    }
    m.values.push_back(std::move(row));
    m.counts.push_back(std::move(counts));
  }
  return m;
}

csv::Table CorrelationMatrix::to_csv() const {
  csv::Table t;
  t.header = {"feature", "metric", "spearman", "n"};
  for (std::size_t i = 0; i < row_labels.size(); ++i)
    for (std::size_t j = 0; j < col_labels.size(); ++j)
      t.rows.push_back({row_labels[i], col_labels[j], csv::format(values[i][j]), std::to_string(counts[i][j])});
  return t;
}

std::string CorrelationMatrix::to_json() const {
  nlohmann::ordered_json j;
  j["rows"] = row_labels;
  j["cols"] = col_labels;
  j["values"] = nlohmann::ordered_json::array();
  for (const auto& r : values) {
    auto row = nlohmann::ordered_json::array();
    for (const auto& v : r) row.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
    j["values"].push_back(row);
  }
  j["counts"] = counts;
  return j.dump(2) + "\n";
}

Histogram histogram(std::span<const double> values, int bins, std::optional<std::pair<double, double>> range) {
  if (bins < 1) throw DomainError("histogram needs at least one bin");
  if (values.empty()) throw DomainError("histogram of an empty sample");
  double lo, hi;
  if (range) {
    std::tie(lo, hi) = *range;
    if (!(hi >= lo)) throw DomainError("histogram range is inverted");
  } else {
    const auto [a, b] = std::minmax_element(values.begin(), values.end());
    lo = *a;
    hi = *b;
  }
  Histogram h;
  h.counts.assign(std::size_t(bins), 0);
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(i == bins ? hi : lo + i * width);
  for (double v : values) {
    if (!(v >= lo && v <= hi)) {
      ++h.out_of_range;
      continue;
    }
    std::size_t b = 0;
    if (width > 0) b = std::min<std::size_t>(std::size_t(bins - 1), std::size_t((v - lo) / width));
    ++h.counts[b];
  }
  return h;
}

csv::Table Histogram::to_csv() const {
  csv::Table t;
  t.header = {"bin_left", "bin_right", "count"};
  for (std::size_t i = 0; i < counts.size(); ++i)
    t.rows.push_back({csv::format(edges[i]), csv::format(edges[i + 1]), std::to_string(counts[i])});
  return t;
}

}  // namespace vxai
