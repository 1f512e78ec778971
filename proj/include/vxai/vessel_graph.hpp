#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vxai/patch_grid.hpp"
#include "vxai/volume.hpp"

namespace vxai {

struct GraphNode {
  int id = 0;
  Index3 position;
  int degree = 0;
};

struct GraphEdge {
  int id = 0;
  int n0 = 0;
  int n1 = 0;
  std::vector<Index3> centerline;  ///< 26-connected, runs from n0 to n1
};

/// Centerline graph: nodes are bifurcations and vessel ends, edges are the
/// voxel chains between them. Node ids and edge ids equal their positions.
struct VesselGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  int degree_sum() const;
};

/// Builds the graph of a thin skeleton.
///
/// Voxels with one 26-neighbour become end nodes; voxels with three or more
/// are junction voxels, and 26-adjacent junction voxels collapse into one
/// node at their rounded centroid. Chains of two-neighbour voxels become
/// edges whose centerline includes the node voxels they attach to. Nodes
/// left with degree 2 are merged into a single edge; isolated voxels and
/// node-less cycles are not represented.
VesselGraph build_graph(const Volume3D& skeleton);

/// {nodes:[{id,pos:[x,y,z],degree}], edges:[{id,n0,n1,centerline:[[x,y,z],...]}]}
std::string graph_to_json(const VesselGraph& g);
VesselGraph graph_from_json(const std::string& text);
void write_graph(const VesselGraph& g, const std::filesystem::path& path);
VesselGraph read_graph(const std::filesystem::path& path);

enum class PoiKind { bifurcation, endpoint, midpoint };
const char* to_string(PoiKind k);
PoiKind parse_poi_kind(const std::string& s);

struct Poi {
  int id = 0;
  Index3 position;
  PoiKind kind = PoiKind::midpoint;
  int source_id = 0;  ///< node id (bifurcation/endpoint) or edge id (midpoint)
  std::vector<PatchIndex> patch_memberships;
};

/// One POI per node (bifurcation when degree >= 3, endpoint when degree 1)
/// and one per edge at centerline element floor(L/2). Output is ordered by
/// (kind, source id) and ids are assigned in that order. POIs landing on
/// mask background are snapped to the nearest foreground voxel among their
/// 26 neighbours, or dropped.
std::vector<Poi> select_pois(const VesselGraph& graph, const Volume3D& mask, const PatchGrid& grid);

/// poi_id,kind,x,y,z,source_id,n_patches
void write_poi_table(const std::vector<Poi>& pois, const std::filesystem::path& path);
/// Reads a POI table; patch memberships are recomputed from `grid`.
std::vector<Poi> read_poi_table(const std::filesystem::path& path, const PatchGrid& grid);

enum class PredictionStatus { TP, FP, FN, TN };
const char* to_string(PredictionStatus s);
PredictionStatus parse_status(const std::string& s);

/// Status of `poi` inside `patch`. `prediction` is either the patch-sized
/// prediction for that patch or a whole-volume prediction; `gt` is the
/// whole-volume ground truth. Throws DomainError when the POI is not inside
/// the patch.
PredictionStatus classify_poi_status(const Poi& poi, const PatchIndex& patch, const PatchGrid& grid,
                                     const Volume3D& prediction, const Volume3D& gt);

}  // namespace vxai
