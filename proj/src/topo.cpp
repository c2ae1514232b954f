#include "scale/topo.hpp"

#include <cstring>
#include <fstream>
#include <queue>
#include <stdexcept>

namespace scale::topo {

TopoMap build_map(const data::Dataset& dataset, const ParamSet& model,
                  const repr::ReprConfig& rcfg, const iql::IQLConfig& icfg,
                  const TopoConfig& cfg) {
  if (dataset.episodes.empty()) throw std::runtime_error("build_map: empty dataset");
  TopoMap map;
  map.d_z = rcfg.d_z;
  map.model_hash = map_model_hash(model);

  const double max_range = dataset.meta.sim.max_range;
  size_t n_eps = dataset.episodes.size();
  if (cfg.max_episodes > 0) n_eps = std::min<size_t>(n_eps, cfg.max_episodes);

  std::vector<Eigen::VectorXd> feats;
  for (size_t e = 0; e < n_eps; ++e) {
    const auto& ep = dataset.episodes[e];
    // One node per stride-th step (the final frame is deliberately skipped so a
    // 20-step episode at stride 5 yields 4 nodes).
    for (size_t t = 0; t < ep.length(); t += cfg.node_stride) {
      TopoNode node;
      node.node_id = static_cast<uint32_t>(map.nodes.size());
      node.episode_id = ep.episode_id;
      node.step_index = static_cast<uint32_t>(t);
      map.nodes.push_back(node);
      feats.push_back(ep.obs[t].features(max_range));
    }
  }
  Mat features(feats.size(), rcfg.obs_dim);
  for (size_t i = 0; i < feats.size(); ++i) features.row(i) = feats[i];
  const Mat z = repr::encode(model, rcfg, features);
  for (size_t i = 0; i < map.nodes.size(); ++i) map.nodes[i].z = z.row(i);

  const int n = static_cast<int>(map.nodes.size());
  std::vector<sim::Pose> node_pose(n);
  for (int i = 0; i < n; ++i) {
    const auto& ep = dataset.episodes[map.nodes[i].episode_id];
    node_pose[i] =
        ep.steps[std::min<size_t>(map.nodes[i].step_index, ep.length() - 1)].pose;
  }
  // Pairwise values, batched one source node at a time.
  for (int i = 0; i < n; ++i) {
    Mat zi = z.row(i).replicate(n, 1);
    const Eigen::VectorXd values = iql::v_values(model, rcfg.d_z, icfg.hidden, zi, z);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // no self-loops
      if (cfg.max_edge_pose_dist > 0.0) {
        const double dx = node_pose[j].x - node_pose[i].x;
        const double dy = node_pose[j].y - node_pose[i].y;
        const double d = std::hypot(dx, dy);
        if (d > cfg.max_edge_pose_dist) continue;
        // Forward-consistency: an edge is traversable by driving, so the hop
        // must leave roughly along the source view's heading. Without this,
        // value optimism on "behind you" pairs admits edges a view-aligned
        // follower can never take. Very short hops (in-place turns) exempt.
        if (d > 0.75) {
          const double ang = std::atan2(dy, dx) - node_pose[i].theta;
          if (std::cos(ang) < 0.5) continue;
        }
      }
      if (values(j) >= cfg.edge_threshold) {
        map.edges.push_back({static_cast<uint32_t>(i), static_cast<uint32_t>(j), values(j),
                             std::abs(values(j))});
      }
    }
  }
  if (cfg.prune_fragments) prune_to_largest_component(map);
  return map;
}

void prune_to_largest_component(TopoMap& map) {
  const size_t n = map.nodes.size();
  if (n == 0) return;
  // Kosaraju: strong connectivity, so any two surviving nodes stay mutually
  // routable. Undirected connectivity is not enough — the value-thresholded
  // edges are directed, and a weakly-connected map still yields empty routes.
  std::vector<std::vector<uint32_t>> adj(n), radj(n);
  for (const auto& e : map.edges) {
    adj[e.from_id].push_back(e.to_id);
    radj[e.to_id].push_back(e.from_id);
  }
  std::vector<uint32_t> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);
  for (size_t s = 0; s < n; ++s) {
    if (visited[s]) continue;
    std::vector<std::pair<uint32_t, size_t>> stack{{static_cast<uint32_t>(s), 0}};
    visited[s] = 1;
    while (!stack.empty()) {
      auto& [u, i] = stack.back();
      if (i < adj[u].size()) {
        const uint32_t v = adj[u][i++];
        if (!visited[v]) {
          visited[v] = 1;
          stack.push_back({v, 0});
        }
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }
  std::vector<int> comp(n, -1);
  std::vector<size_t> comp_size;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] >= 0) continue;
    const int c = static_cast<int>(comp_size.size());
    size_t size = 0;
    std::vector<uint32_t> stack{*it};
    comp[*it] = c;
    while (!stack.empty()) {
      const uint32_t u = stack.back();
      stack.pop_back();
      ++size;
      for (uint32_t v : radj[u]) {
        if (comp[v] < 0) {
          comp[v] = c;
          stack.push_back(v);
        }
      }
    }
    comp_size.push_back(size);
  }
  int keep = 0;
  for (size_t c = 1; c < comp_size.size(); ++c) {
    if (comp_size[c] > comp_size[keep]) keep = static_cast<int>(c);
  }
  if (comp_size[keep] == n) return;

  std::vector<uint32_t> remap(n, UINT32_MAX);
  std::vector<TopoNode> kept;
  kept.reserve(comp_size[keep]);
  for (size_t i = 0; i < n; ++i) {
    if (comp[i] != keep) continue;
    remap[i] = static_cast<uint32_t>(kept.size());
    kept.push_back(map.nodes[i]);
    kept.back().node_id = remap[i];
  }
  std::vector<TopoEdge> edges;
  edges.reserve(map.edges.size());
  for (TopoEdge e : map.edges) {
    if (remap[e.from_id] == UINT32_MAX || remap[e.to_id] == UINT32_MAX) continue;
    e.from_id = remap[e.from_id];
    e.to_id = remap[e.to_id];
    edges.push_back(e);
  }
  map.nodes.swap(kept);
  map.edges.swap(edges);
}

LocalizeResult localize(const Eigen::VectorXd& z_t, const TopoMap& map,
                        const ParamSet& model, const repr::ReprConfig& rcfg,
                        const iql::IQLConfig& icfg, double v_loc) {
  if (map.nodes.empty()) throw std::runtime_error("localize: empty map");
  const int n = static_cast<int>(map.nodes.size());
  Mat z_rows(n, map.d_z);
  for (int i = 0; i < n; ++i) z_rows.row(i) = map.nodes[i].z;
  Mat zt_rows = z_t.transpose().replicate(n, 1);
  const Eigen::VectorXd values = iql::v_values(model, rcfg.d_z, icfg.hidden, zt_rows, z_rows);

  LocalizeResult result;
  result.value = values(0);
  result.node_id = map.nodes[0].node_id;
  for (int i = 1; i < n; ++i) {
    if (values(i) > result.value) {  // strict: ties keep the lowest node_id
      result.value = values(i);
      result.node_id = map.nodes[i].node_id;
    }
  }
  result.lost = result.value < v_loc;
  return result;
}

LocalizeResult localize_near(const Eigen::VectorXd& z_t, const TopoMap& map,
                             const ParamSet& model, const repr::ReprConfig& rcfg,
                             const iql::IQLConfig& icfg, double v_loc,
                             uint32_t prev_node, int hops) {
  const size_t n = map.nodes.size();
  if (prev_node >= n) throw std::runtime_error("localize_near: unknown node id");
  std::vector<std::vector<uint32_t>> adj(n);
  for (const auto& e : map.edges) {
    adj[e.from_id].push_back(e.to_id);
    adj[e.to_id].push_back(e.from_id);
  }
  std::vector<int> depth(n, -1);
  std::vector<uint32_t> frontier{prev_node}, candidates{prev_node};
  depth[prev_node] = 0;
  for (int d = 0; d < hops; ++d) {
    std::vector<uint32_t> next;
    for (uint32_t u : frontier) {
      for (uint32_t v : adj[u]) {
        if (depth[v] >= 0) continue;
        depth[v] = d + 1;
        next.push_back(v);
        candidates.push_back(v);
      }
    }
    frontier.swap(next);
  }

  Mat z_rows(static_cast<int>(candidates.size()), map.d_z);
  for (size_t i = 0; i < candidates.size(); ++i) z_rows.row(i) = map.nodes[candidates[i]].z;
  Mat zt_rows = z_t.transpose().replicate(static_cast<int>(candidates.size()), 1);
  const Eigen::VectorXd values = iql::v_values(model, rcfg.d_z, icfg.hidden, zt_rows, z_rows);

  LocalizeResult result;
  result.value = values(0);
  result.node_id = candidates[0];
  for (int i = 1; i < values.size(); ++i) {
    if (values(i) > result.value) {
      result.value = values(i);
      result.node_id = candidates[i];
    }
  }
  result.lost = result.value < v_loc;
  return result;
}

std::vector<uint32_t> plan_route(const TopoMap& map, uint32_t start_node,
                                 uint32_t goal_node) {
  const size_t n = map.nodes.size();
  if (start_node >= n || goal_node >= n) {
    throw std::runtime_error("plan_route: unknown node id");
  }
  if (start_node == goal_node) return {start_node};

  std::vector<std::vector<std::pair<uint32_t, double>>> adj(n);
  for (const auto& e : map.edges) adj[e.from_id].push_back({e.to_id, e.cost});

  const double inf = 1e18;
  std::vector<double> dist(n, inf);
  std::vector<int64_t> prev(n, -1);
  using Entry = std::pair<double, uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  dist[start_node] = 0.0;
  pq.push({0.0, start_node});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == goal_node) break;
    for (const auto& [v, c] : adj[u]) {
      if (d + c < dist[v]) {
        dist[v] = d + c;
        prev[v] = u;
        pq.push({dist[v], v});
      }
    }
  }
  if (dist[goal_node] >= inf) return {};
  std::vector<uint32_t> route;
  for (int64_t u = goal_node; u != -1; u = prev[u]) route.push_back(static_cast<uint32_t>(u));
  std::reverse(route.begin(), route.end());
  return route;
}

namespace {

constexpr char kMagic[4] = {'S', 'T', 'M', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("topo map: truncated file");
  return v;
}

}  // namespace

void save_map(const TopoMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write map: " + path);
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, 1);
  write_pod<uint64_t>(out, map.model_hash);
  write_pod<uint32_t>(out, static_cast<uint32_t>(map.d_z));
  write_pod<uint32_t>(out, static_cast<uint32_t>(map.nodes.size()));
  for (const auto& node : map.nodes) {
    write_pod<uint32_t>(out, node.node_id);
    write_pod<uint32_t>(out, node.episode_id);
    write_pod<uint32_t>(out, node.step_index);
    out.write(reinterpret_cast<const char*>(node.z.data()),
              static_cast<std::streamsize>(sizeof(double) * node.z.size()));
  }
  write_pod<uint32_t>(out, static_cast<uint32_t>(map.edges.size()));
  for (const auto& e : map.edges) {
    write_pod<uint32_t>(out, e.from_id);
    write_pod<uint32_t>(out, e.to_id);
    write_pod<double>(out, e.value);
  }
}

TopoMap load_map(const std::string& path, uint64_t expected_model_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open map: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("topo map: bad magic in " + path);
  }
  const auto version = read_pod<uint32_t>(in);
  if (version != 1) throw std::runtime_error("topo map: unsupported version");
  TopoMap map;
  map.model_hash = read_pod<uint64_t>(in);
  if (expected_model_hash != 0 && map.model_hash != expected_model_hash) {
    throw std::runtime_error("topo map: model hash mismatch (map built with different checkpoint)");
  }
  map.d_z = static_cast<int>(read_pod<uint32_t>(in));
  const auto n_nodes = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < n_nodes; ++i) {
    TopoNode node;
    node.node_id = read_pod<uint32_t>(in);
    node.episode_id = read_pod<uint32_t>(in);
    node.step_index = read_pod<uint32_t>(in);
    node.z.resize(map.d_z);
    in.read(reinterpret_cast<char*>(node.z.data()),
            static_cast<std::streamsize>(sizeof(double) * map.d_z));
    if (!in) throw std::runtime_error("topo map: truncated node table");
    map.nodes.push_back(std::move(node));
  }
  const auto n_edges = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < n_edges; ++i) {
    TopoEdge e;
    e.from_id = read_pod<uint32_t>(in);
    e.to_id = read_pod<uint32_t>(in);
    e.value = read_pod<double>(in);
    e.cost = std::abs(e.value);
    map.edges.push_back(e);
  }
  return map;
}

uint64_t map_model_hash(const ParamSet& model) {
  return nn::param_hash(model, "enc.") ^ (nn::param_hash(model, "v.") * 0x9e3779b97f4a7c15ull);
}

}  // namespace scale::topo
