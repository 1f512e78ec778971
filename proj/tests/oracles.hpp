#pragma once

// Slow, independent reference implementations used by the unit and
// acceptance tests. None of them share code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "vxai/volume.hpp"

namespace oracle {

/// All-pairs Euclidean distance transform. Every voxel outside the volume
/// counts as background.
inline std::vector<double> brute_edt(const vxai::Volume3D& mask) {
  const auto& d = mask.dims();
  std::vector<vxai::Index3> bg;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (mask.at(x, y, z) == 0.0f) bg.push_back({x, y, z});
  std::vector<double> out(d.count(), 0.0);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        if (mask.at(x, y, z) == 0.0f) continue;
        // Nearest outside voxel: straight across the closest face.
        const std::int64_t face = std::min({x + 1, d.nx - x, y + 1, d.ny - y, z + 1, d.nz - z});
        std::int64_t best = face * face;
        for (const auto& b : bg) {
          const std::int64_t dx = x - b.x, dy = y - b.y, dz = z - b.z;
          best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        out[d.linear({x, y, z})] = std::sqrt(double(best));
      }
  return out;
}

/// Otsu by scanning every interior bin edge and recomputing both classes
/// from scratch with bin-centre values.
inline double exhaustive_otsu(std::span<const float> values, int bins) {
  double lo = values[0], hi = values[0];
  for (float v : values) {
    lo = std::min(lo, double(v));
    hi = std::max(hi, double(v));
  }
  const double width = (hi - lo) / bins;
  std::vector<long long> hist(std::size_t(bins), 0);
  for (float v : values) {
    long long b = (long long)((double(v) - lo) / width);
    if (b >= bins) b = bins - 1;
    ++hist[std::size_t(b)];
  }
  const double total = double(values.size());
  double best = -1;
  int best_k = 1;
  for (int k = 1; k < bins; ++k) {
    double n0 = 0, s0 = 0, n1 = 0, s1 = 0;
    for (int i = 0; i < bins; ++i) {
      const double c = lo + (i + 0.5) * width;
      if (i < k) {
        n0 += double(hist[std::size_t(i)]);
        s0 += c * double(hist[std::size_t(i)]);
      } else {
        n1 += double(hist[std::size_t(i)]);
        s1 += c * double(hist[std::size_t(i)]);
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const double between = (n0 / total) * (n1 / total) * std::pow(s0 / n0 - s1 / n1, 2);
    // Centre-based sums round differently from the library's; treat
    // relative differences below 1e-12 as ties (lowest edge wins).
    if (between > best * (1 + 1e-12)) {
      best = between;
      best_k = k;
    }
  }
  return lo + best_k * width;
}

/// Average ranks by counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> count_ranks(std::span<const double> v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return double(sxy / std::sqrt(sxx * syy));
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = count_ranks(x), ry = count_ranks(y);
  return pearson(rx, ry);
}

struct Summary {
  double mean, std, min, max, l1_mean;
  std::array<double, 7> percentiles;  // 1, 5, 25, 50, 75, 95, 99
};

inline Summary summary(std::span<const double> v) {
  const std::size_t n = v.size();
  long double sum = 0, abs_sum = 0;
  for (double x : v) {
    sum += x;
    abs_sum += std::fabs(x);
  }
  const long double mean = sum / n;
  long double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  Summary s{double(mean), double(std::sqrt(ss / n)), *std::min_element(v.begin(), v.end()),
            *std::max_element(v.begin(), v.end()), double(abs_sum / n), {}};
  const double qs[7] = {1, 5, 25, 50, 75, 95, 99};
  for (int i = 0; i < 7; ++i) {
    // k-th order statistic by selection, then linear interpolation.
    const long double h = (n - 1) * (long double)qs[i] / 100.0L;
    const auto k = std::size_t(std::floor(h));
    std::vector<double> tmp(v.begin(), v.end());
    std::nth_element(tmp.begin(), tmp.begin() + long(k), tmp.end());
    const double a = tmp[k];
    double b = a;
    if (k + 1 < n) b = *std::min_element(tmp.begin() + long(k) + 1, tmp.end());
    s.percentiles[std::size_t(i)] = double(a + (h - k) * (b - a));
  }
  return s;
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations,
/// returned sorted by absolute value.
inline std::array<double, 3> jacobi_eigenvalues(double xx, double yy, double zz, double xy, double xz, double yz) {
  double a[3][3] = {{xx, xy, xz}, {xy, yy, yz}, {xz, yz, zz}};
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-300) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::array<double, 3> e = {a[0][0], a[1][1], a[2][2]};
  std::sort(e.begin(), e.end(), [](double u, double v) { return std::fabs(u) < std::fabs(v); });
  return e;
}

/// det(H - l I) for a symmetric matrix.
inline double characteristic(double xx, double yy, double zz, double xy, double xz, double yz, double l) {
  const double a = xx - l, b = yy - l, c = zz - l;
  return a * (b * c - yz * yz) - xy * (xy * c - yz * xz) + xz * (xy * yz - b * xz);
}

/// Random binary mask with roughly `fill` foreground fraction.
inline vxai::Volume3D random_mask(vxai::Dims d, double fill, std::mt19937_64& rng) {
  auto m = vxai::make_mask(d);
  std::bernoulli_distribution on(fill);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = on(rng) ? 1.0f : 0.0f;
  return m;
}

/// Number of 26-connected foreground components by repeated flood fill.
inline int count_components26(const vxai::Volume3D& m) {
  const auto& d = m.dims();
  std::vector<char> seen(d.count(), 0);
  int count = 0;
  std::vector<vxai::Index3> stack;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const auto i = d.linear({x, y, z});
        if (m[i] == 0.0f || seen[i]) continue;
        ++count;
        seen[i] = 1;
        stack.push_back({x, y, z});
        while (!stack.empty()) {
          const auto p = stack.back();
          stack.pop_back();
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const vxai::Index3 q{p.x + dx, p.y + dy, p.z + dz};
                if (!d.contains(q)) continue;
                const auto j = d.linear(q);
                if (m[j] != 0.0f && !seen[j]) {
                  seen[j] = 1;
                  stack.push_back(q);
                }
              }
        }
      }
  return count;
}

}  // namespace oracle
