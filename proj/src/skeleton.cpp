#include "vxai/skeleton.hpp"

#include <algorithm>
#include <cstdlib>
#include <vector>

namespace vxai {

namespace {

struct CubeTables {
  // Adjacency inside the 3x3x3 cube, centre excluded.
  std::array<std::vector<int>, 27> adj26;
  std::array<std::vector<int>, 27> adj6;
  std::array<bool, 27> in_n18{};
  std::array<bool, 27> in_n6{};

  CubeTables() {
    auto coord = [](int i) { return Index3{i % 3 - 1, (i / 3) % 3 - 1, i / 9 - 1}; };
    for (int i = 0; i < 27; ++i) {
      const auto a = coord(i);
      const int m = std::abs(a.x) + std::abs(a.y) + std::abs(a.z);
      in_n18[std::size_t(i)] = m >= 1 && m <= 2;
      in_n6[std::size_t(i)] = m == 1;
      if (i == 13) continue;
      for (int j = 0; j < 27; ++j) {
        if (j == i || j == 13) continue;
        const auto d = coord(j) - a;
        const int cheb = std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)});
        const int man = std::abs(d.x) + std::abs(d.y) + std::abs(d.z);
        if (cheb == 1) adj26[std::size_t(i)].push_back(j);
        if (man == 1) adj6[std::size_t(i)].push_back(j);
      }
    }
  }
};

const CubeTables& tables() {
  static const CubeTables t;
  return t;
}

// Flood-fills the cube cells selected by `member`; returns component count,
// optionally counting only components that touch a cell flagged in `anchor`.
template <class Member, class Anchor>
int count_components(const std::array<std::vector<int>, 27>& adj, Member member, Anchor anchor) {
  std::array<bool, 27> seen{};
  int stack[27];
  int count = 0;
  for (int s = 0; s < 27; ++s) {
    if (s == 13 || seen[std::size_t(s)] || !member(s)) continue;
    bool anchored = false;
    int top = 0;
    stack[top++] = s;
    seen[std::size_t(s)] = true;
    while (top > 0) {
      const int c = stack[--top];
      anchored = anchored || anchor(c);
      for (int j : adj[std::size_t(c)])
        if (!seen[std::size_t(j)] && member(j)) {
          seen[std::size_t(j)] = true;
          stack[top++] = j;
        }
    }
    if (anchored) ++count;
  }
  return count;
}

struct Padded {
  Dims dims;
  std::vector<std::uint8_t> v;
  std::array<std::ptrdiff_t, 27> offs{};

  explicit Padded(const Volume3D& mask) : dims{mask.dims().nx + 2, mask.dims().ny + 2, mask.dims().nz + 2} {
    v.assign(dims.count(), 0);
    const auto& d = mask.dims();
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x)
          if (mask.at(x, y, z) != 0.0f) v[dims.linear({x + 1, y + 1, z + 1})] = 1;
    for (int i = 0; i < 27; ++i) {
      const Index3 o{i % 3 - 1, (i / 3) % 3 - 1, i / 9 - 1};
      offs[std::size_t(i)] = std::ptrdiff_t(o.x) + std::ptrdiff_t(dims.nx) * (o.y + std::ptrdiff_t(dims.ny) * o.z);
    }
  }

  Neighborhood27 neighborhood(std::size_t i) const {
    Neighborhood27 n;
    for (std::size_t k = 0; k < 27; ++k) n[k] = v[std::size_t(std::ptrdiff_t(i) + offs[k])];
    return n;
  }

  int count26(std::size_t i) const {
    int c = 0;
    for (std::size_t k = 0; k < 27; ++k)
      if (k != 13) c += v[std::size_t(std::ptrdiff_t(i) + offs[k])];
    return c;
  }
};

}  // namespace

bool is_simple_point(const Neighborhood27& n) {
  const auto& t = tables();
  const int fg = count_components(
      t.adj26, [&](int i) { return n[std::size_t(i)] != 0; }, [](int) { return true; });
  if (fg != 1) return false;
  const int bg = count_components(
      t.adj6, [&](int i) { return n[std::size_t(i)] == 0 && t.in_n18[std::size_t(i)]; },
      [&](int i) { return t.in_n6[std::size_t(i)]; });
  return bg == 1;
}

Volume3D skeletonize(const Volume3D& mask) {
  Padded pad(mask);
  std::vector<std::size_t> fg;
  for (std::size_t i = 0; i < pad.v.size(); ++i)
    if (pad.v[i]) fg.push_back(i);

  // Face neighbours in cube-index form: -y, +y, +x, -x, +z, -z.
  constexpr int kDirections[6] = {10, 16, 14, 12, 22, 4};
  std::vector<std::size_t> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int dir : kDirections) {
      candidates.clear();
      for (auto i : fg) {
        if (!pad.v[i]) continue;
        if (pad.v[std::size_t(std::ptrdiff_t(i) + pad.offs[std::size_t(dir)])]) continue;
        if (pad.count26(i) == 1) continue;
        if (is_simple_point(pad.neighborhood(i))) candidates.push_back(i);
      }
      for (auto i : candidates) {
        if (pad.count26(i) == 1 || !is_simple_point(pad.neighborhood(i))) continue;
        pad.v[i] = 0;
        changed = true;
      }
    }
    std::erase_if(fg, [&](std::size_t i) { return pad.v[i] == 0; });
  }

  Volume3D out = make_mask(mask.dims());
  out.set_spacing(mask.spacing());
  for (auto i : fg) {
    const auto p = pad.dims.coord(i);
    out.at(p.x - 1, p.y - 1, p.z - 1) = 1.0f;
  }
  return out;
}

}  // namespace vxai
