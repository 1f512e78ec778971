#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "vxai/volume.hpp"

namespace vxai {

enum class PhantomKind { tube, y_junction, sphere, gaussian_bump, composite };

const char* to_string(PhantomKind k);
PhantomKind parse_phantom_kind(const std::string& s);

/// Flat-capped solid cylinder between two axis points.
struct Cylinder {
  Point3 a;
  Point3 b;
  double radius = 1;
};

struct Ball {
  Point3 center;
  double radius = 1;
};

/// amplitude * exp(-|x - center|^2 / (2 sigma^2)), added to the image only.
struct GaussianBump {
  Point3 center;
  double sigma = 1;
  double amplitude = 1;
};

using Primitive = std::variant<Cylinder, Ball, GaussianBump>;

struct PhantomSpec {
  PhantomKind kind = PhantomKind::composite;
  Dims dims{};
  std::vector<Primitive> primitives;
  double foreground_intensity = 1.0;  ///< image value inside solids
  double noise_sigma = 0.0;           ///< additive Gaussian noise on the image
  std::uint64_t seed = 0;
};

/// Generated volumes plus the geometry they were drawn from. The image
/// holds solids at foreground_intensity, the bumps and the noise; gt holds
/// the digitised solids. A voxel is foreground iff its centre lies inside
/// a cylinder or ball.
struct Phantom {
  Volume3D image;
  Volume3D gt;
  PhantomSpec analytic;
};

/// Throws DomainError when a solid's bounding box leaves the volume or a
/// bump centre lies outside it, and ConfigError for non-positive sizes.
Phantom generate_phantom(const PhantomSpec& spec);

bool inside(const Cylinder& c, const Point3& p);
bool inside(const Ball& b, const Point3& p);
double analytic_volume(const Cylinder& c);
double analytic_volume(const Ball& b);

PhantomSpec tube_phantom(Dims dims, Point3 a, Point3 b, double radius);
/// Three cylinders from `center` to each end, joined by a ball of the same
/// radius at the centre.
PhantomSpec y_junction_phantom(Dims dims, Point3 center, const std::array<Point3, 3>& ends, double radius);
PhantomSpec sphere_phantom(Dims dims, Point3 center, double radius);
PhantomSpec gaussian_bump_phantom(Dims dims, Point3 center, double sigma, double amplitude);

/// {"kind", "dims":[nx,ny,nz], "primitives":[{"type":"cylinder"|"ball"|"bump", ...}],
///  "foreground_intensity", "noise_sigma", "seed"}; unknown keys are rejected.
PhantomSpec phantom_spec_from_json(const std::string& text);
std::string phantom_spec_to_json(const PhantomSpec& spec);
PhantomSpec read_phantom_spec(const std::filesystem::path& path);

}  // namespace vxai
