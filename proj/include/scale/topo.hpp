#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scale/dataset.hpp"
#include "scale/iql.hpp"

namespace scale::topo {

using nn::Mat;
using nn::ParamSet;

struct TopoNode {
  uint32_t node_id = 0;
  Eigen::VectorXd z;
  uint32_t episode_id = 0;
  uint32_t step_index = 0;
};

struct TopoEdge {
  uint32_t from_id = 0;
  uint32_t to_id = 0;
  double value = 0.0;  // V(z_i, z_j), <= 0 in practice
  double cost = 0.0;   // |value|
};

struct TopoMap {
  std::vector<TopoNode> nodes;
  std::vector<TopoEdge> edges;
  uint64_t model_hash = 0;  // encoder + V checkpoint hash that built the map
  int d_z = 0;
};

struct TopoConfig {
  int node_stride = 5;
  double edge_threshold = -8.0;
  int max_episodes = 0;  // 0 = all episodes
  // Drop every node outside the largest connected component. Fragments are
  // localization traps: a query that matches one gets an empty route to
  // anywhere else.
  bool prune_fragments = true;
  // Reject edges whose endpoint nodes were recorded farther apart than this
  // (metres, 0 disables). The value head stays mildly optimistic about views
  // displaced along the travel direction, and a handful of such edges lets the
  // route search stitch "teleports" that no controller can follow. Collection
  // poses are mining-time data, same as the negative-pair gates; the runtime
  // never reads them.
  double max_edge_pose_dist = 0.0;
};

TopoMap build_map(const data::Dataset& dataset, const ParamSet& model,
                  const repr::ReprConfig& rcfg, const iql::IQLConfig& icfg,
                  const TopoConfig& cfg);

// Keep only the largest strongly connected component, reindexing node ids so
// that node_id == vector index still holds.
void prune_to_largest_component(TopoMap& map);

struct LocalizeResult {
  bool lost = false;
  uint32_t node_id = 0;
  double value = -1e18;
};

// argmax over nodes of V(z_t, z_node); LOST when the best value < v_loc.
LocalizeResult localize(const Eigen::VectorXd& z_t, const TopoMap& map,
                        const ParamSet& model, const repr::ReprConfig& rcfg,
                        const iql::IQLConfig& icfg, double v_loc);

// Same, but restricted to nodes within `hops` undirected edges of prev_node.
// Temporal filter: a tracked robot cannot teleport across the map, and view
// aliasing makes the unrestricted argmax do exactly that.
LocalizeResult localize_near(const Eigen::VectorXd& z_t, const TopoMap& map,
                             const ParamSet& model, const repr::ReprConfig& rcfg,
                             const iql::IQLConfig& icfg, double v_loc,
                             uint32_t prev_node, int hops);

// Minimum-cost route (edge costs |V|). Returns {start} when start == goal,
// empty when unreachable. Throws on unknown node ids.
std::vector<uint32_t> plan_route(const TopoMap& map, uint32_t start_node,
                                 uint32_t goal_node);

void save_map(const TopoMap& map, const std::string& path);
TopoMap load_map(const std::string& path, uint64_t expected_model_hash);

// Hash over the tensors the map depends on (encoder + value net).
uint64_t map_model_hash(const ParamSet& model);

}  // namespace scale::topo
