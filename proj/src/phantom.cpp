#include "vxai/phantom.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vxai/error.hpp"

namespace vxai {

using nlohmann::json;

const char* to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::tube: return "tube";
    case PhantomKind::y_junction: return "y_junction";
    case PhantomKind::sphere: return "sphere";
    case PhantomKind::gaussian_bump: return "gaussian_bump";
    case PhantomKind::composite: return "composite";
  }
  return "?";
}

PhantomKind parse_phantom_kind(const std::string& s) {
  for (auto k : {PhantomKind::tube, PhantomKind::y_junction, PhantomKind::sphere, PhantomKind::gaussian_bump,
                 PhantomKind::composite})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown phantom kind '" + s + "'");
}

namespace {

Point3 sub(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

struct Box {
  Point3 lo, hi;
};

Box bounds(const Cylinder& c) {
  const Point3 d = sub(c.b, c.a);
  const double len = std::sqrt(dot(d, d));
  auto half = [&](double di) { return c.radius * std::sqrt(std::max(0.0, 1.0 - (di / len) * (di / len))); };
  const double hx = half(d.x), hy = half(d.y), hz = half(d.z);
  return {{std::min(c.a.x, c.b.x) - hx, std::min(c.a.y, c.b.y) - hy, std::min(c.a.z, c.b.z) - hz},
          {std::max(c.a.x, c.b.x) + hx, std::max(c.a.y, c.b.y) + hy, std::max(c.a.z, c.b.z) + hz}};
}

Box bounds(const Ball& b) {
  const double r = b.radius;
  return {{b.center.x - r, b.center.y - r, b.center.z - r}, {b.center.x + r, b.center.y + r, b.center.z + r}};
}

// Solids may reach the outer faces of the boundary voxels but not beyond.
void check_inside(const Box& box, const Dims& d, const std::string& what) {
  const double tol = 1e-9;
  if (box.lo.x < -0.5 - tol || box.lo.y < -0.5 - tol || box.lo.z < -0.5 - tol || box.hi.x > d.nx - 0.5 + tol ||
      box.hi.y > d.ny - 0.5 + tol || box.hi.z > d.nz - 0.5 + tol)
    throw DomainError(what + " extends outside the " + to_string(d) + " volume");
}

void validate(const Primitive& prim, const Dims& d) {
  if (const auto* c = std::get_if<Cylinder>(&prim)) {
    if (!(c->radius > 0)) throw ConfigError("cylinder radius must be positive");
    const Point3 axis = sub(c->b, c->a);
    if (dot(axis, axis) == 0.0) throw ConfigError("cylinder end points coincide");
    check_inside(bounds(*c), d, "cylinder");
  } else if (const auto* b = std::get_if<Ball>(&prim)) {
    if (!(b->radius > 0)) throw ConfigError("ball radius must be positive");
    check_inside(bounds(*b), d, "ball");
  } else {
    const auto& g = std::get<GaussianBump>(prim);
    if (!(g.sigma > 0)) throw ConfigError("bump sigma must be positive");
    if (!std::isfinite(g.amplitude)) throw ConfigError("bump amplitude must be finite");
    check_inside({g.center, g.center}, d, "bump centre");
  }
}

Point3 point_from(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw ConfigError(std::string("'") + key + "' must be [x, y, z]");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

json point_to(const Point3& p) { return json::array({p.x, p.y, p.z}); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

}  // namespace

bool inside(const Cylinder& c, const Point3& p) {
  const Point3 d = sub(c.b, c.a), ap = sub(p, c.a);
  const double len2 = dot(d, d);
  const double t = dot(ap, d) / len2;
  if (t < 0.0 || t > 1.0) return false;
  const Point3 foot{c.a.x + t * d.x, c.a.y + t * d.y, c.a.z + t * d.z};
  const Point3 off = sub(p, foot);
  return dot(off, off) <= c.radius * c.radius;
}

bool inside(const Ball& b, const Point3& p) {
  const Point3 off = sub(p, b.center);
  return dot(off, off) <= b.radius * b.radius;
}

double analytic_volume(const Cylinder& c) {
  const Point3 d = sub(c.b, c.a);
  return std::numbers::pi * c.radius * c.radius * std::sqrt(dot(d, d));
}

double analytic_volume(const Ball& b) { return 4.0 / 3.0 * std::numbers::pi * b.radius * b.radius * b.radius; }

Phantom generate_phantom(const PhantomSpec& spec) {
  const Dims& d = spec.dims;
  if (d.nx < 1 || d.ny < 1 || d.nz < 1) throw ConfigError("phantom dims must be positive");
  if (!(spec.noise_sigma >= 0)) throw ConfigError("noise_sigma must be >= 0");
  for (const auto& p : spec.primitives) validate(p, d);

  Phantom out{Volume3D(d, VolumeKind::intensity, 0.0f), make_mask(d), spec};
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const Point3 p{double(x), double(y), double(z)};
        bool fg = false;
        double value = 0;
        for (const auto& prim : spec.primitives) {
          if (const auto* c = std::get_if<Cylinder>(&prim)) {
            fg = fg || inside(*c, p);
          } else if (const auto* b = std::get_if<Ball>(&prim)) {
            fg = fg || inside(*b, p);
          } else {
            const auto& g = std::get<GaussianBump>(prim);
            const Point3 off = sub(p, g.center);
            value += g.amplitude * std::exp(-dot(off, off) / (2 * g.sigma * g.sigma));
          }
        }
        if (fg) {
          out.gt.at(x, y, z) = 1.0f;
          value += spec.foreground_intensity;
        }
        out.image.at(x, y, z) = float(value);
      }

  if (spec.noise_sigma > 0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (auto& v : out.image.data()) v = float(double(v) + noise(rng));
  }
  return out;
}

PhantomSpec tube_phantom(Dims dims, Point3 a, Point3 b, double radius) {
  return {PhantomKind::tube, dims, {Cylinder{a, b, radius}}};
}

PhantomSpec y_junction_phantom(Dims dims, Point3 center, const std::array<Point3, 3>& ends, double radius) {
  PhantomSpec s{PhantomKind::y_junction, dims, {}};
  for (const auto& e : ends) s.primitives.emplace_back(Cylinder{center, e, radius});
  s.primitives.emplace_back(Ball{center, radius});
  return s;
}

PhantomSpec sphere_phantom(Dims dims, Point3 center, double radius) {
  return {PhantomKind::sphere, dims, {Ball{center, radius}}};
}

PhantomSpec gaussian_bump_phantom(Dims dims, Point3 center, double sigma, double amplitude) {
  PhantomSpec s{PhantomKind::gaussian_bump, dims, {GaussianBump{center, sigma, amplitude}}};
  s.foreground_intensity = 0;
  return s;
}

PhantomSpec phantom_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("phantom spec is not valid JSON: ") + e.what());
  }
  try {
    check_keys(j, {"kind", "dims", "primitives", "foreground_intensity", "noise_sigma", "seed"}, "phantom spec");
    PhantomSpec s;
    s.kind = parse_phantom_kind(j.value("kind", std::string("composite")));
    const auto& dims = j.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw ConfigError("'dims' must be [nx, ny, nz]");
    s.dims = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
    s.foreground_intensity = j.value("foreground_intensity", 1.0);
    s.noise_sigma = j.value("noise_sigma", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.value("primitives", json::array())) {
      const auto type = p.at("type").get<std::string>();
      if (type == "cylinder") {
        check_keys(p, {"type", "a", "b", "radius"}, "cylinder");
        s.primitives.emplace_back(Cylinder{point_from(p, "a"), point_from(p, "b"), p.at("radius").get<double>()});
      } else if (type == "ball") {
        check_keys(p, {"type", "center", "radius"}, "ball");
        s.primitives.emplace_back(Ball{point_from(p, "center"), p.at("radius").get<double>()});
      } else if (type == "bump") {
        check_keys(p, {"type", "center", "sigma", "amplitude"}, "bump");
        s.primitives.emplace_back(
            GaussianBump{point_from(p, "center"), p.at("sigma").get<double>(), p.value("amplitude", 1.0)});
      } else {
        throw ConfigError("unknown primitive type '" + type + "'");
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid phantom spec: ") + e.what());
  }
}

std::string phantom_spec_to_json(const PhantomSpec& spec) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(spec.kind);
  j["dims"] = {spec.dims.nx, spec.dims.ny, spec.dims.nz};
  j["primitives"] = nlohmann::ordered_json::array();
  for (const auto& prim : spec.primitives) {
    nlohmann::ordered_json p;
    if (const auto* c = std::get_if<Cylinder>(&prim)) {
      p["type"] = "cylinder";
      p["a"] = point_to(c->a);
      p["b"] = point_to(c->b);
      p["radius"] = c->radius;
    } else if (const auto* b = std::get_if<Ball>(&prim)) {
      p["type"] = "ball";
      p["center"] = point_to(b->center);
      p["radius"] = b->radius;
    } else {
      const auto& g = std::get<GaussianBump>(prim);
      p["type"] = "bump";
      p["center"] = point_to(g.center);
      p["sigma"] = g.sigma;
      p["amplitude"] = g.amplitude;
    }
    j["primitives"].push_back(p);
  }
  j["foreground_intensity"] = spec.foreground_intensity;
  j["noise_sigma"] = spec.noise_sigma;
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

PhantomSpec read_phantom_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open phantom spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return phantom_spec_from_json(ss.str());
}

}  // namespace vxai
