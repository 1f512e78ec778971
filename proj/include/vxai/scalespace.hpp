#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vxai/volume.hpp"

namespace vxai {

/// Scale-normalised (sigma^2) Gaussian second derivatives of a volume.
struct HessianField {
  Dims dims{};
  double sigma = 0;
  std::vector<double> xx, yy, zz, xy, xz, yz;
};

using Eigenvalues = std::array<double, 3>;

/// Per-voxel eigenvalues sorted by magnitude, |l1| <= |l2| <= |l3|.
struct EigenField {
  Dims dims{};
  std::vector<Eigenvalues> values;
};

enum class RidgeMode { white, black };

struct FrangiParams {
  double alpha = 0.5;
  double beta = 0.5;
  double c = 15.0;
  std::vector<double> sigmas = default_sigmas();
  RidgeMode ridge_mode = RidgeMode::white;
  /// Inverts the R_b factor to 1 - exp(-R_b^2 / 2 beta^2). Off by default.
  bool blobness = false;

  static std::vector<double> default_sigmas();
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Minimum supported scale.
inline constexpr double kMinSigma = 0.5;
/// Kernels are truncated at this many standard deviations.
inline constexpr double kKernelTruncation = 4.0;
/// Structureness below this is treated as a flat region.
inline constexpr double kFrangiEpsilon = 1e-12;

/// Sampled 1D Gaussian kernels (correlation weights, index k + radius).
/// Moments are corrected so that smoothing preserves constants, the first
/// derivative of x is 1 and the second derivative of x^2 is 2 exactly.
struct GaussianKernels {
  int radius = 0;
  std::vector<double> g0, g1, g2;
};
GaussianKernels gaussian_kernels(double sigma);

/// Hessian of the sigma-smoothed volume via separable Gaussian derivative
/// kernels with edge replication, multiplied by sigma^2.
HessianField gaussian_hessian(const Volume3D& v, double sigma);

/// Eigenvalues of a symmetric 3x3 matrix, ordered by absolute value
/// (stable for ties).
Eigenvalues symmetric_eigenvalues(double xx, double yy, double zz, double xy, double xz, double yz);

EigenField hessian_eigenvalues(const HessianField& h);

/// Frangi vesselness of one eigenvalue triple (ordered by magnitude).
/// Zero unless l2 <= 0 and l3 <= 0, and zero for structureness < epsilon.
double frangi_value(const Eigenvalues& l, const FrangiParams& p);

Volume3D frangi_response(const EigenField& e, const FrangiParams& p);

/// Voxelwise maximum of the single-scale response over p.sigmas. Black
/// ridge mode filters the negated volume.
Volume3D multiscale_frangi(const Volume3D& v, const FrangiParams& p);

/// A named vesselness filter producing a non-negative response volume.
struct VesselnessFilter {
  std::string name;
  std::function<Volume3D(const Volume3D&)> apply;
};

/// {multiscale Frangi, white ridges, default parameters}
std::vector<VesselnessFilter> default_vesselness_filters();
/// Looks a filter up by name ("frangi", "frangi-black", "frangi-blobness").
VesselnessFilter vesselness_filter(const std::string& name, const FrangiParams& base = {});

/// Mean of the min-max normalised filter responses, in [0, 1]. A constant
/// response normalises to zero.
Volume3D tubularity(const Volume3D& v, std::span<const VesselnessFilter> filters);

}  // namespace vxai
