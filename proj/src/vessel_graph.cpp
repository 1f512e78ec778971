#include "vxai/vessel_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "vxai/components.hpp"
#include "vxai/csv.hpp"

namespace vxai {

int VesselGraph::degree_sum() const {
  int s = 0;
  for (const auto& n : nodes) s += n.degree;
  return s;
}

namespace {

int distance_sq(const Index3& a, const Index3& b) {
  const auto d = a - b;
  return d.x * d.x + d.y * d.y + d.z * d.z;
}

bool adjacent26(const Index3& a, const Index3& b) {
  const auto d = a - b;
  return std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)}) == 1;
}

struct NodeBuild {
  std::vector<std::size_t> voxels;  // sorted linear indices
  Index3 position;
  bool alive = true;
};

struct EdgeBuild {
  int n0 = 0;
  int n1 = 0;
  std::vector<Index3> centerline;
  bool alive = true;
};

// Shortest 26-path between two voxels of the same junction cluster,
// endpoints excluded.
std::vector<Index3> path_within(const NodeBuild& node, const Dims& dims, const Index3& from, const Index3& to) {
  std::set<std::size_t> members(node.voxels.begin(), node.voxels.end());
  std::map<std::size_t, std::size_t> parent;
  std::deque<std::size_t> queue{dims.linear(from)};
  parent[dims.linear(from)] = dims.linear(from);
  const auto target = dims.linear(to);
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    if (cur == target) break;
    for (const auto& o : neighbor_offsets(Connectivity::full)) {
      const auto q = dims.coord(cur) + o;
      if (!dims.contains(q)) continue;
      const auto qi = dims.linear(q);
      if (!members.count(qi) || parent.count(qi)) continue;
      parent[qi] = cur;
      queue.push_back(qi);
    }
  }
  std::vector<Index3> path;
  if (!parent.count(target)) return path;
  for (auto c = parent[target]; c != dims.linear(from); c = parent[c]) path.push_back(dims.coord(c));
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

VesselGraph build_graph(const Volume3D& skeleton) {
  const auto dims = skeleton.dims();
  const auto& offsets = neighbor_offsets(Connectivity::full);
  auto on = [&](const Index3& p) { return dims.contains(p) && skeleton.at(p) != 0.0f; };
  auto count = [&](const Index3& p) {
    int c = 0;
    for (const auto& o : offsets) c += on(p + o) ? 1 : 0;
    return c;
  };

  // Node voxels: ends (one neighbour) and junction voxels (three or more).
  std::unordered_map<std::size_t, int> degree_of;
  for (std::size_t i = 0; i < skeleton.size(); ++i)
    if (skeleton[i] != 0.0f) degree_of[i] = count(dims.coord(i));

  std::vector<NodeBuild> nodes;
  std::unordered_map<std::size_t, int> node_of;
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    if (skeleton[i] == 0.0f || node_of.count(i)) continue;
    const int deg = degree_of[i];
    if (deg == 1) {
      node_of[i] = int(nodes.size());
      nodes.push_back({{i}, dims.coord(i), true});
    } else if (deg >= 3) {
      NodeBuild n;
      const int id = int(nodes.size());
      std::vector<std::size_t> stack{i};
      node_of[i] = id;
      while (!stack.empty()) {
        const auto cur = stack.back();
        stack.pop_back();
        n.voxels.push_back(cur);
        for (const auto& o : offsets) {
          const auto q = dims.coord(cur) + o;
          if (!on(q)) continue;
          const auto qi = dims.linear(q);
          if (degree_of[qi] >= 3 && !node_of.count(qi)) {
            node_of[qi] = id;
            stack.push_back(qi);
          }
        }
      }
      std::sort(n.voxels.begin(), n.voxels.end());
      double sx = 0, sy = 0, sz = 0;
      for (auto v : n.voxels) {
        const auto p = dims.coord(v);
        sx += p.x;
        sy += p.y;
        sz += p.z;
      }
      const double k = double(n.voxels.size());
      n.position = {int(std::lround(sx / k)), int(std::lround(sy / k)), int(std::lround(sz / k))};
      nodes.push_back(std::move(n));
    }
  }

  // Trace chains leaving each node.
  std::vector<EdgeBuild> edges;
  std::set<std::size_t> visited;
  std::set<std::pair<int, int>> direct;
  for (int id = 0; id < int(nodes.size()); ++id) {
    for (auto v : nodes[std::size_t(id)].voxels) {
      const auto pv = dims.coord(v);
      for (const auto& o : offsets) {
        const auto pu = pv + o;
        if (!on(pu)) continue;
        const auto u = dims.linear(pu);
        if (auto it = node_of.find(u); it != node_of.end()) {
          const int other = it->second;
          if (other == id || other < id || direct.count({id, other})) continue;
          direct.insert({id, other});
          edges.push_back({id, other, {pv, pu}, true});
          continue;
        }
        if (visited.count(u)) continue;
        visited.insert(u);
        EdgeBuild e{id, -1, {pv, pu}, true};
        auto prev = v;
        auto cur = u;
        while (true) {
          std::size_t next = cur;
          bool found = false;
          for (const auto& oo : offsets) {
            const auto q = dims.coord(cur) + oo;
            if (!on(q)) continue;
            const auto qi = dims.linear(q);
            if (qi == prev) continue;
            next = qi;
            found = true;
            break;
          }
          if (!found) break;
          e.centerline.push_back(dims.coord(next));
          if (auto it = node_of.find(next); it != node_of.end()) {
            e.n1 = it->second;
            break;
          }
          if (visited.count(next)) break;
          visited.insert(next);
          prev = cur;
          cur = next;
        }
        if (e.n1 >= 0) edges.push_back(std::move(e));
      }
    }
  }

  std::vector<int> degree(nodes.size(), 0);
  for (const auto& e : edges) {
    ++degree[std::size_t(e.n0)];
    ++degree[std::size_t(e.n1)];
  }

  // Merge edges through degree-2 nodes.
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (degree[n] != 2) continue;
    std::vector<std::size_t> inc;
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges[e].alive && (edges[e].n0 == int(n) || edges[e].n1 == int(n))) inc.push_back(e);
    nodes[n].alive = false;
    if (inc.size() == 1) {  // self loop with nothing else attached
      edges[inc[0]].alive = false;
      continue;
    }
    auto& a = edges[inc[0]];
    auto& b = edges[inc[1]];
    if (a.n1 != int(n)) {
      std::reverse(a.centerline.begin(), a.centerline.end());
      std::swap(a.n0, a.n1);
    }
    if (b.n0 != int(n)) {
      std::reverse(b.centerline.begin(), b.centerline.end());
      std::swap(b.n0, b.n1);
    }
    const auto ja = a.centerline.back();
    const auto jb = b.centerline.front();
    if (ja != jb && !adjacent26(ja, jb)) {
      const auto bridge = path_within(nodes[n], dims, ja, jb);
      a.centerline.insert(a.centerline.end(), bridge.begin(), bridge.end());
    }
    auto tail = b.centerline.begin();
    if (ja == jb) ++tail;
    a.centerline.insert(a.centerline.end(), tail, b.centerline.end());
    a.n1 = b.n1;
    b.alive = false;
  }

  // Centerlines enter a junction cluster at its rim; extend them through the
  // cluster so their ends touch the node position.
  auto anchor_of = [&](const NodeBuild& n) {
    Index3 best = dims.coord(n.voxels.front());
    for (auto v : n.voxels) {
      const auto p = dims.coord(v);
      if (distance_sq(p, n.position) < distance_sq(best, n.position)) best = p;
    }
    return best;
  };
  auto lead_in = [&](const NodeBuild& n, const Index3& rim) {
    std::vector<Index3> out;
    if (n.voxels.size() < 2) return out;
    const auto anchor = anchor_of(n);
    if (anchor != n.position) out.push_back(anchor);
    if (rim != anchor) {
      const auto mid = path_within(n, dims, anchor, rim);
      out.insert(out.end(), mid.begin(), mid.end());
    } else if (!out.empty()) {
      out.pop_back();  // the rim itself is the anchor
    }
    return out;
  };
  for (auto& e : edges) {
    if (!e.alive) continue;
    auto head = lead_in(nodes[std::size_t(e.n0)], e.centerline.front());
    e.centerline.insert(e.centerline.begin(), head.begin(), head.end());
    auto tail = lead_in(nodes[std::size_t(e.n1)], e.centerline.back());
    e.centerline.insert(e.centerline.end(), tail.rbegin(), tail.rend());
  }

  // Recount and renumber; isolated nodes are dropped.
  std::fill(degree.begin(), degree.end(), 0);
  for (const auto& e : edges)
    if (e.alive) {
      ++degree[std::size_t(e.n0)];
      ++degree[std::size_t(e.n1)];
    }
  VesselGraph g;
  std::vector<int> remap(nodes.size(), -1);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!nodes[n].alive || degree[n] == 0) continue;
    remap[n] = int(g.nodes.size());
    g.nodes.push_back({remap[n], nodes[n].position, degree[n]});
  }
  for (const auto& e : edges) {
    if (!e.alive) continue;
    g.edges.push_back({int(g.edges.size()), remap[std::size_t(e.n0)], remap[std::size_t(e.n1)], e.centerline});
  }
  return g;
}

std::string graph_to_json(const VesselGraph& g) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes) {
    nlohmann::ordered_json node;
    node["id"] = n.id;
    node["pos"] = {n.position.x, n.position.y, n.position.z};
    node["degree"] = n.degree;
    j["nodes"].push_back(node);
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges) {
    nlohmann::ordered_json edge;
    edge["id"] = e.id;
    edge["n0"] = e.n0;
    edge["n1"] = e.n1;
    edge["centerline"] = nlohmann::ordered_json::array();
    for (const auto& p : e.centerline) edge["centerline"].push_back({p.x, p.y, p.z});
    j["edges"].push_back(edge);
  }
  return j.dump() + "\n";
}

VesselGraph graph_from_json(const std::string& text) {
  VesselGraph g;
  try {
    const auto j = nlohmann::json::parse(text);
    auto pos = [](const nlohmann::json& a) {
      const auto v = a.get<std::vector<int>>();
      if (v.size() != 3) throw InputError("graph coordinates must have 3 entries");
      return Index3{v[0], v[1], v[2]};
    };
    std::map<int, int> node_index;
    for (const auto& n : j.at("nodes")) {
      GraphNode node{n.at("id").get<int>(), pos(n.at("pos")), n.value("degree", 0)};
      node_index[node.id] = int(g.nodes.size());
      g.nodes.push_back(node);
    }
    for (const auto& e : j.at("edges")) {
      GraphEdge edge{e.at("id").get<int>(), e.at("n0").get<int>(), e.at("n1").get<int>(), {}};
      if (!node_index.count(edge.n0) || !node_index.count(edge.n1))
        throw InputError("graph edge " + std::to_string(edge.id) + " references an unknown node");
      for (const auto& p : e.at("centerline")) edge.centerline.push_back(pos(p));
      if (edge.centerline.empty()) throw InputError("graph edge " + std::to_string(edge.id) + " has an empty centerline");
      g.edges.push_back(std::move(edge));
    }
    // Degrees are recomputed so imported graphs always satisfy the handshake.
    for (auto& n : g.nodes) n.degree = 0;
    for (const auto& e : g.edges) {
      ++g.nodes[std::size_t(node_index[e.n0])].degree;
      ++g.nodes[std::size_t(node_index[e.n1])].degree;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed graph document: ") + e.what());
  }
  return g;
}

void write_graph(const VesselGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << graph_to_json(g);
}

VesselGraph read_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

const char* to_string(PoiKind k) {
  switch (k) {
    case PoiKind::bifurcation: return "bifurcation";
    case PoiKind::endpoint: return "endpoint";
    case PoiKind::midpoint: return "midpoint";
  }
  return "midpoint";
}

PoiKind parse_poi_kind(const std::string& s) {
  if (s == "bifurcation") return PoiKind::bifurcation;
  if (s == "endpoint") return PoiKind::endpoint;
  if (s == "midpoint") return PoiKind::midpoint;
  throw InputError("unknown POI kind '" + s + "'");
}

namespace {

std::optional<Index3> snap_to_foreground(const Volume3D& mask, const Index3& p) {
  if (mask.dims().contains(p) && mask.at(p) != 0.0f) return p;
  std::optional<Index3> best;
  int best_d2 = 0;
  for (const auto& o : neighbor_offsets(Connectivity::full)) {
    const auto q = p + o;
    if (!mask.dims().contains(q) || mask.at(q) == 0.0f) continue;
    const int d2 = o.x * o.x + o.y * o.y + o.z * o.z;
    if (!best || d2 < best_d2) {
      best = q;
      best_d2 = d2;
    }
  }
  return best;
}

}  // namespace

std::vector<Poi> select_pois(const VesselGraph& graph, const Volume3D& mask, const PatchGrid& grid) {
  if (mask.dims() != grid.volume_dims) throw DomainError("mask dims do not match the patch grid");
  std::vector<Poi> pois;
  auto add = [&](PoiKind kind, int source, const Index3& raw) {
    const auto pos = snap_to_foreground(mask, raw);
    if (!pos) {
      spdlog::warn("dropping {} POI from source {}: ({},{},{}) has no foreground voxel within 1 voxel",
                   to_string(kind), source, raw.x, raw.y, raw.z);
      return;
    }
    Poi p;
    p.position = *pos;
    p.kind = kind;
    p.source_id = source;
    p.patch_memberships = patches_containing(grid, *pos);
    pois.push_back(std::move(p));
  };
  for (const auto& n : graph.nodes)
    if (n.degree >= 3) add(PoiKind::bifurcation, n.id, n.position);
  for (const auto& n : graph.nodes)
    if (n.degree == 1) add(PoiKind::endpoint, n.id, n.position);
  for (const auto& n : graph.nodes)
    if (n.degree == 0 || n.degree == 2) spdlog::warn("node {} has degree {}; no node POI emitted", n.id, n.degree);
  for (const auto& e : graph.edges) add(PoiKind::midpoint, e.id, e.centerline[e.centerline.size() / 2]);
  std::stable_sort(pois.begin(), pois.end(), [](const Poi& a, const Poi& b) {
    return std::pair(int(a.kind), a.source_id) < std::pair(int(b.kind), b.source_id);
  });
  for (std::size_t i = 0; i < pois.size(); ++i) pois[i].id = int(i);
  return pois;
}

void write_poi_table(const std::vector<Poi>& pois, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"poi_id", "kind", "x", "y", "z", "source_id", "n_patches"};
  for (const auto& p : pois)
    t.rows.push_back({std::to_string(p.id), to_string(p.kind), std::to_string(p.position.x), std::to_string(p.position.y),
                      std::to_string(p.position.z), std::to_string(p.source_id),
                      std::to_string(p.patch_memberships.size())});
  csv::write(t, path);
}

std::vector<Poi> read_poi_table(const std::filesystem::path& path, const PatchGrid& grid) {
  const auto t = csv::read(path);
  const auto c_id = t.column("poi_id"), c_kind = t.column("kind"), c_x = t.column("x"), c_y = t.column("y"),
             c_z = t.column("z"), c_src = t.column("source_id");
  std::vector<Poi> out;
  for (const auto& r : t.rows) {
    Poi p;
    try {
      p.id = std::stoi(r[c_id]);
      p.kind = parse_poi_kind(r[c_kind]);
      p.position = {std::stoi(r[c_x]), std::stoi(r[c_y]), std::stoi(r[c_z])};
      p.source_id = std::stoi(r[c_src]);
    } catch (const std::logic_error&) {
      throw InputError("'" + path.string() + "': malformed POI row");
    }
    if (!grid.volume_dims.contains(p.position)) throw InputError("'" + path.string() + "': POI outside the volume");
    p.patch_memberships = patches_containing(grid, p.position);
    out.push_back(std::move(p));
  }
  return out;
}

const char* to_string(PredictionStatus s) {
  switch (s) {
    case PredictionStatus::TP: return "TP";
    case PredictionStatus::FP: return "FP";
    case PredictionStatus::FN: return "FN";
    case PredictionStatus::TN: return "TN";
  }
  return "TN";
}

PredictionStatus parse_status(const std::string& s) {
  if (s == "TP") return PredictionStatus::TP;
  if (s == "FP") return PredictionStatus::FP;
  if (s == "FN") return PredictionStatus::FN;
  if (s == "TN") return PredictionStatus::TN;
  throw ConfigError("unknown prediction status '" + s + "'");
}

PredictionStatus classify_poi_status(const Poi& poi, const PatchIndex& patch, const PatchGrid& grid,
                                     const Volume3D& prediction, const Volume3D& gt) {
  if (!grid.contains(patch, poi.position)) throw DomainError("POI " + std::to_string(poi.id) + " lies outside the patch");
  const int ps = grid.patch_size;
  bool pred = false;
  if (prediction.dims() == Dims{ps, ps, ps}) {
    pred = prediction.at(poi.position - grid.origin(patch)) != 0.0f;
  } else if (prediction.dims() == grid.volume_dims) {
    pred = prediction.at(poi.position) != 0.0f;
  } else {
    throw DomainError("prediction volume matches neither the patch nor the volume dims");
  }
  const bool truth = gt.value(poi.position) != 0.0f;
  if (pred && truth) return PredictionStatus::TP;
  if (pred) return PredictionStatus::FP;
  if (truth) return PredictionStatus::FN;
  return PredictionStatus::TN;
}

}  // namespace vxai
