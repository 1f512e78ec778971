#include "vxai/scalespace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace vxai {

std::vector<double> FrangiParams::default_sigmas() {
  std::vector<double> s;
  for (int i = 2; i <= 16; ++i) s.push_back(double(i));
  return s;
}

void FrangiParams::validate() const {
  if (!(alpha > 0)) throw ConfigError("frangi.alpha must be > 0");
  if (!(beta > 0)) throw ConfigError("frangi.beta must be > 0");
  if (!(c > 0)) throw ConfigError("frangi.c must be > 0");
  if (sigmas.empty()) throw ConfigError("frangi.sigmas must not be empty");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] >= kMinSigma)) throw ConfigError("frangi.sigmas entries must be >= 0.5");
    if (i > 0 && !(sigmas[i] > sigmas[i - 1])) throw ConfigError("frangi.sigmas must be strictly ascending");
  }
}

GaussianKernels gaussian_kernels(double sigma) {
  if (!(sigma >= kMinSigma)) throw DomainError("sigma " + std::to_string(sigma) + " is below the supported minimum 0.5");
  GaussianKernels k;
  k.radius = int(std::ceil(kKernelTruncation * sigma));
  const int n = 2 * k.radius + 1;
  k.g0.resize(std::size_t(n));
  k.g1.resize(std::size_t(n));
  k.g2.resize(std::size_t(n));
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double x = i - k.radius;
    k.g0[std::size_t(i)] = std::exp(-x * x / (2 * sigma * sigma));
    sum += k.g0[std::size_t(i)];
  }
  for (auto& w : k.g0) w /= sum;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = i - k.radius, g = k.g0[std::size_t(i)];
    m1 += x * x * g / (sigma * sigma);
    m2 += x * x * g;
    m4 += x * x * x * x * g;
  }
  // d/dx: weights x g(x) / sigma^2 scaled so that sum x w = 1.
  // d2/dx2: weights c (x^2 - m2) g(x) with sum w = 0 and sum x^2 w = 2.
  const double c2 = 2.0 / (m4 - m2 * m2);
  for (int i = 0; i < n; ++i) {
    const double x = i - k.radius, g = k.g0[std::size_t(i)];
    k.g1[std::size_t(i)] = x * g / (sigma * sigma) / m1;
    k.g2[std::size_t(i)] = c2 * (x * x - m2) * g;
  }
  return k;
}

namespace {

using Buffer = std::vector<double>;

// +1 for an even kernel, -1 for an odd one, 0 otherwise.
int kernel_parity(const std::vector<double>& w) {
  bool even = true, odd = true;
  for (std::size_t k = 0, n = w.size(); k < n; ++k) {
    even = even && w[k] == w[n - 1 - k];
    odd = odd && w[k] == -w[n - 1 - k];
  }
  return even ? 1 : odd ? -1 : 0;
}

// out(p) = sum_k w[k] in(p + (k - r) e_axis), indices clamped to the volume.
// Even and odd kernels are folded so each weight is applied once per pair.
void correlate(const Buffer& in, Buffer& out, const Dims& d, int axis, const std::vector<double>& w) {
  const int r = int(w.size() / 2);
  const int parity = kernel_parity(w);
  const double sgn = parity < 0 ? -1.0 : 1.0;
  out.assign(in.size(), 0.0);
  const auto nx = std::size_t(d.nx), plane = nx * std::size_t(d.ny);
  if (axis == 0) {
    std::vector<double> line(std::size_t(d.nx + 2 * r));
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y) {
        const auto base = std::size_t(y) * nx + std::size_t(z) * plane;
        for (int i = 0; i < d.nx + 2 * r; ++i) line[std::size_t(i)] = in[base + std::size_t(std::clamp(i - r, 0, d.nx - 1))];
        for (int x = 0; x < d.nx; ++x) {
          const double* src = line.data() + x;
          double acc = 0;
          if (parity == 0) {
            for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * src[k];
          } else {
            acc = w[std::size_t(r)] * src[r];
            for (int k = 0; k < r; ++k) acc += w[std::size_t(k)] * (src[k] + sgn * src[2 * r - k]);
          }
          out[base + std::size_t(x)] = acc;
        }
      }
    return;
  }
  const int n = axis == 1 ? d.ny : d.nz;
  const auto stride = axis == 1 ? nx : plane;
  const int outer = axis == 1 ? d.nz : d.ny;
  const auto outer_stride = axis == 1 ? plane : nx;
  auto row = [&](int o, int j) { return in.data() + std::size_t(o) * outer_stride + std::size_t(std::clamp(j, 0, n - 1)) * stride; };
  for (int o = 0; o < outer; ++o)
    for (int i = 0; i < n; ++i) {
      double* dst = out.data() + std::size_t(o) * outer_stride + std::size_t(i) * stride;
      if (parity == 0) {
        for (std::size_t k = 0; k < w.size(); ++k) {
          const double wk = w[k];
          const double* src = row(o, i + int(k) - r);
          for (std::size_t x = 0; x < nx; ++x) dst[x] += wk * src[x];
        }
        continue;
      }
      const double wc = w[std::size_t(r)];
      if (wc != 0.0) {
        const double* src = row(o, i);
        for (std::size_t x = 0; x < nx; ++x) dst[x] += wc * src[x];
      }
      for (int k = 0; k < r; ++k) {
        const double wk = w[std::size_t(k)];
        const double* lo = row(o, i + k - r);
        const double* hi = row(o, i + r - k);
        if (parity > 0)
          for (std::size_t x = 0; x < nx; ++x) dst[x] += wk * (lo[x] + hi[x]);
        else
          for (std::size_t x = 0; x < nx; ++x) dst[x] += wk * (lo[x] - hi[x]);
      }
    }
}

}  // namespace

HessianField gaussian_hessian(const Volume3D& v, double sigma) {
  const auto k = gaussian_kernels(sigma);
  const auto& d = v.dims();
  Buffer src(v.data().begin(), v.data().end());
  Buffer x0, x1, x2;
  correlate(src, x0, d, 0, k.g0);
  correlate(src, x1, d, 0, k.g1);
  correlate(src, x2, d, 0, k.g2);
  Buffer y00, y01, y02, y10, y11, y20;  // (x-order, y-order)
  correlate(x0, y00, d, 1, k.g0);
  correlate(x0, y01, d, 1, k.g1);
  correlate(x0, y02, d, 1, k.g2);
  correlate(x1, y10, d, 1, k.g0);
  correlate(x1, y11, d, 1, k.g1);
  correlate(x2, y20, d, 1, k.g0);
  HessianField h;
  h.dims = d;
  h.sigma = sigma;
  correlate(y20, h.xx, d, 2, k.g0);
  correlate(y02, h.yy, d, 2, k.g0);
  correlate(y00, h.zz, d, 2, k.g2);
  correlate(y11, h.xy, d, 2, k.g0);
  correlate(y10, h.xz, d, 2, k.g1);
  correlate(y01, h.yz, d, 2, k.g1);
  const double s2 = sigma * sigma;
  for (auto* f : {&h.xx, &h.yy, &h.zz, &h.xy, &h.xz, &h.yz})
    for (auto& x : *f) x *= s2;
  return h;
}

Eigenvalues symmetric_eigenvalues(double xx, double yy, double zz, double xy, double xz, double yz) {
  Eigenvalues e;
  const double off = xy * xy + xz * xz + yz * yz;
  if (off == 0.0) {
    e = {xx, yy, zz};
  } else {
    // Trigonometric solution of the characteristic cubic.
    const double q = (xx + yy + zz) / 3.0;
    const double a = xx - q, b = yy - q, c = zz - q;
    const double p = std::sqrt((a * a + b * b + c * c + 2.0 * off) / 6.0);
    const double det = a * (b * c - yz * yz) - xy * (xy * c - yz * xz) + xz * (xy * yz - b * xz);
    const double r = std::clamp(det / (2.0 * p * p * p), -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    e = {e1, 3.0 * q - e1 - e3, e3};
  }
  std::stable_sort(e.begin(), e.end(), [](double u, double v) { return std::fabs(u) < std::fabs(v); });
  return e;
}

EigenField hessian_eigenvalues(const HessianField& h) {
  EigenField e;
  e.dims = h.dims;
  e.values.resize(h.xx.size());
  for (std::size_t i = 0; i < h.xx.size(); ++i)
    e.values[i] = symmetric_eigenvalues(h.xx[i], h.yy[i], h.zz[i], h.xy[i], h.xz[i], h.yz[i]);
  return e;
}

double frangi_value(const Eigenvalues& l, const FrangiParams& p) {
  if (l[1] > 0.0 || l[2] > 0.0) return 0.0;
  const double s2 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
  const double s = std::sqrt(s2);
  if (s < kFrangiEpsilon) return 0.0;
  const double ra = std::fabs(l[1]) / std::fabs(l[2]);
  const double prod = std::fabs(l[1] * l[2]);
  const double rb = prod < kFrangiEpsilon * kFrangiEpsilon ? 0.0 : std::fabs(l[0]) / std::sqrt(prod);
  const double plate = 1.0 - std::exp(-ra * ra / (2.0 * p.alpha * p.alpha));
  double blob = std::exp(-rb * rb / (2.0 * p.beta * p.beta));
  if (p.blobness) blob = 1.0 - blob;
  const double structure = 1.0 - std::exp(-s2 / (2.0 * p.c * p.c));
  return plate * blob * structure;
}

Volume3D frangi_response(const EigenField& e, const FrangiParams& p) {
  Volume3D out(e.dims, VolumeKind::response, 0.0f);
  for (std::size_t i = 0; i < e.values.size(); ++i) out[i] = float(frangi_value(e.values[i], p));
  return out;
}

Volume3D multiscale_frangi(const Volume3D& v, const FrangiParams& p) {
  p.validate();
  Volume3D flipped;
  if (p.ridge_mode == RidgeMode::black) flipped = negated(v);
  const Volume3D& src = p.ridge_mode == RidgeMode::black ? flipped : v;
  Volume3D out(v.dims(), VolumeKind::response, 0.0f);
  out.set_spacing(v.spacing());
  for (double sigma : p.sigmas) {
    const auto h = gaussian_hessian(src, sigma);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto l = symmetric_eigenvalues(h.xx[i], h.yy[i], h.zz[i], h.xy[i], h.xz[i], h.yz[i]);
      out[i] = std::max(out[i], float(frangi_value(l, p)));
    }
  }
  return out;
}

std::vector<VesselnessFilter> default_vesselness_filters() { return {vesselness_filter("frangi")}; }

VesselnessFilter vesselness_filter(const std::string& name, const FrangiParams& base) {
  FrangiParams p = base;
  if (name == "frangi") {
    p.ridge_mode = RidgeMode::white;
  } else if (name == "frangi-black") {
    p.ridge_mode = RidgeMode::black;
  } else if (name == "frangi-blobness") {
    p.blobness = true;
  } else {
    throw ConfigError("unknown vesselness filter '" + name + "'");
  }
  return {name, [p](const Volume3D& v) { return multiscale_frangi(v, p); }};
}

Volume3D tubularity(const Volume3D& v, std::span<const VesselnessFilter> filters) {
  if (filters.empty()) throw ConfigError("tubularity needs at least one vesselness filter");
  std::vector<double> acc(v.size(), 0.0);
  for (const auto& f : filters) {
    const auto r = f.apply(v);
    const auto [lo, hi] = std::minmax_element(r.data().begin(), r.data().end());
    const double min = *lo, range = double(*hi) - double(*lo);
    if (range <= 0.0) continue;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (double(r[i]) - min) / range;
  }
  Volume3D out(v.dims(), VolumeKind::response, 0.0f);
  out.set_spacing(v.spacing());
  const double n = double(filters.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = float(std::clamp(acc[i] / n, 0.0, 1.0));
  return out;
}

}  // namespace vxai
