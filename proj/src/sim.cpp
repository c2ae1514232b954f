#include "scale/sim.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace scale::sim {

using geo::Circle;
using geo::Polygon;
using geo::Segment;

Eigen::VectorXd Observation::features(double max_range) const {
  const int r = rays();
  Eigen::VectorXd f(2 * r + 1);
  for (int i = 0; i < r; ++i) f(i) = depths(i) / max_range;
  // Tag channel is deliberately not squashed to [0,1]: the *step* between
  // adjacent panels (1/64) is the position signal, and shrinking it with the
  // id range buries the signal in the encoder's smoothness.
  for (int i = 0; i < r; ++i) f(r + i) = surface_ids(i) / 64.0;
  f(2 * r) = illumination;
  return f;
}

static bool swept_collides(const World& world, const Vec2& from, const Vec2& to) {
  const Segment sweep{from, to};
  for (const auto& ob : world.obstacles) {
    if (std::holds_alternative<Circle>(ob.shape)) {
      if (geo::segment_hits_circle(sweep, std::get<Circle>(ob.shape))) return true;
    } else {
      if (geo::segment_hits_polygon(sweep, std::get<Polygon>(ob.shape))) return true;
    }
  }
  if (world.bounded) {
    if (to.x() <= world.xmin || to.x() >= world.xmax || to.y() <= world.ymin ||
        to.y() >= world.ymax) {
      return true;
    }
  }
  return false;
}

std::pair<Pose, bool> step(const Pose& pose, const Action& action, double dt,
                           const World& world, const SimConfig& cfg) {
  const double v = std::clamp(action.v, -cfg.v_max, cfg.v_max);
  const double w = std::clamp(action.w, -cfg.w_max, cfg.w_max);
  Pose next;
  next.x = pose.x + v * std::cos(pose.theta) * dt;
  next.y = pose.y + v * std::sin(pose.theta) * dt;
  next.theta = geo::wrap_angle(pose.theta + w * dt);
  if (swept_collides(world, pose.position(), next.position())) {
    return {pose, true};
  }
  return {next, false};
}

Observation observe(const Pose& pose, const World& world, int rays, double max_range,
                    double fov) {
  Observation obs;
  obs.depths.resize(rays);
  obs.surface_ids.resize(rays);
  obs.illumination = world.illumination;

  std::vector<Segment> walls;
  if (world.bounded) {
    walls = {
        {{world.xmin, world.ymin}, {world.xmin, world.ymax}},  // -x
        {{world.xmax, world.ymin}, {world.xmax, world.ymax}},  // +x
        {{world.xmin, world.ymin}, {world.xmax, world.ymin}},  // -y
        {{world.xmin, world.ymax}, {world.xmax, world.ymax}},  // +y
    };
  }

  const Vec2 origin = pose.position();
  for (int k = 0; k < rays; ++k) {
    const double frac = (rays > 1) ? static_cast<double>(k) / (rays - 1) - 0.5 : 0.0;
    const double bearing = pose.theta + fov * frac;
    const Vec2 dir{std::cos(bearing), std::sin(bearing)};
    double best = max_range;
    int best_id = 0;
    for (size_t wi = 0; wi < walls.size(); ++wi) {
      if (auto t = geo::ray_segment(origin, dir, walls[wi])) {
        if (*t < best) {
          best = *t;
          best_id = world.wall_ids[wi];
        }
      }
    }
    for (const auto& ob : world.obstacles) {
      std::optional<double> t;
      if (std::holds_alternative<Circle>(ob.shape)) {
        t = geo::ray_circle(origin, dir, std::get<Circle>(ob.shape));
      } else {
        t = geo::ray_polygon(origin, dir, std::get<Polygon>(ob.shape));
      }
      if (t && *t < best) {
        best = *t;
        best_id = ob.surface_id;
      }
    }
    obs.depths(k) = std::max(best, 1e-6);
    obs.surface_ids(k) = best_id;
  }
  return obs;
}

bool point_free(const World& world, const Vec2& p, double margin) {
  if (world.bounded) {
    if (p.x() < world.xmin + margin || p.x() > world.xmax - margin ||
        p.y() < world.ymin + margin || p.y() > world.ymax - margin) {
      return false;
    }
  }
  for (const auto& ob : world.obstacles) {
    if (std::holds_alternative<Circle>(ob.shape)) {
      Circle c = std::get<Circle>(ob.shape);
      c.radius += margin;
      if (geo::point_in_circle(p, c)) return false;
    } else {
      const auto& poly = std::get<Polygon>(ob.shape);
      if (geo::point_in_polygon(p, poly)) return false;
      if (margin > 0.0) {
        const size_t n = poly.vertices.size();
        for (size_t i = 0; i < n; ++i) {
          Segment e{poly.vertices[i], poly.vertices[(i + 1) % n]};
          if (geo::segment_point_distance(e, p) < margin) return false;
        }
      }
    }
  }
  return true;
}

double geodesic_distance(const World& world, const Vec2& a, const Vec2& b,
                         double resolution, std::vector<Vec2>* path_out) {
  const int nx = static_cast<int>(std::ceil((world.xmax - world.xmin) / resolution)) + 1;
  const int ny = static_cast<int>(std::ceil((world.ymax - world.ymin) / resolution)) + 1;
  auto cell_center = [&](int ix, int iy) {
    return Vec2{world.xmin + ix * resolution, world.ymin + iy * resolution};
  };
  auto to_cell = [&](const Vec2& p) {
    int ix = static_cast<int>(std::lround((p.x() - world.xmin) / resolution));
    int iy = static_cast<int>(std::lround((p.y() - world.ymin) / resolution));
    return std::pair<int, int>{std::clamp(ix, 0, nx - 1), std::clamp(iy, 0, ny - 1)};
  };
  std::vector<char> free_cell(static_cast<size_t>(nx) * ny);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      free_cell[ix * ny + iy] = point_free(world, cell_center(ix, iy), resolution * 0.9);

  auto [sx, sy] = to_cell(a);
  auto [gx, gy] = to_cell(b);
  if (!free_cell[sx * ny + sy] || !free_cell[gx * ny + gy]) return 1e18;

  const double inf = 1e18;
  std::vector<double> dist(static_cast<size_t>(nx) * ny, inf);
  std::vector<int> prev(static_cast<size_t>(nx) * ny, -1);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  const int start_idx = sx * ny + sy;
  dist[start_idx] = 0.0;
  pq.push({0.0, start_idx});
  const int dxs[] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dys[] = {0, 0, 1, -1, 1, -1, 1, -1};
  const double diag = resolution * std::sqrt(2.0);
  while (!pq.empty()) {
    auto [d, idx] = pq.top();
    pq.pop();
    if (d > dist[idx]) continue;
    const int ix = idx / ny, iy = idx % ny;
    if (ix == gx && iy == gy) break;
    for (int k = 0; k < 8; ++k) {
      const int jx = ix + dxs[k], jy = iy + dys[k];
      if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
      const int jdx = jx * ny + jy;
      if (!free_cell[jdx]) continue;
      const double nd = d + (k < 4 ? resolution : diag);
      if (nd < dist[jdx]) {
        dist[jdx] = nd;
        prev[jdx] = idx;
        pq.push({nd, jdx});
      }
    }
  }
  const double result = dist[gx * ny + gy];
  if (result >= inf) return 1e18;
  if (path_out) {
    path_out->clear();
    int idx = gx * ny + gy;
    while (idx != -1) {
      path_out->push_back(cell_center(idx / ny, idx % ny));
      idx = prev[idx];
    }
    std::reverse(path_out->begin(), path_out->end());
  }
  return result;
}

static Polygon rect(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

World make_world(const std::string& kind) {
  World w;
  if (kind == "corridor" || kind == "corridor-novel" || kind == "corridor-illum") {
    w.xmin = 0.0;
    w.xmax = 62.0;
    w.ymin = 0.0;
    w.ymax = 6.0;
    w.wall_ids = {1, 2, 3, 4};
    // Wall lining (doors, notice boards, cabinets): flat panels tile both
    // walls end to end, with tags increasing along the corridor like door
    // numbers. Every panel is unique, so no two sections alias, and
    // neighbouring panels differ by one tag step, so views drift smoothly as
    // the robot moves — cyclic tags alias for poses that see only one wall,
    // and shuffled tags make views centimetres apart look unrelated.
    for (int k = 0; 1.0 * k < w.xmax; ++k) {  // 62 south panels, tags 5..66
      w.obstacles.push_back(
          {rect(1.0 * k, 0.0, std::min(1.0 * (k + 1), w.xmax), 0.05), 5 + k});
    }
    for (int k = 0; 1.5 * k < w.xmax; ++k) {  // 42 north panels, tags 70..111
      w.obstacles.push_back(
          {rect(1.5 * k, 5.95, std::min(1.5 * (k + 1), w.xmax), 6.0), 70 + k});
    }
    if (kind == "corridor-novel") {
      w.variant_tag = "novel-obstacles";
      w.obstacles.push_back({Circle{{15.0, 1.6}, 0.7}, 115});
      w.obstacles.push_back({Circle{{27.0, 4.4}, 0.7}, 116});
      w.obstacles.push_back({Circle{{39.0, 2.2}, 0.7}, 117});
      w.obstacles.push_back({Circle{{51.0, 3.9}, 0.7}, 118});
    } else if (kind == "corridor-illum") {
      w.variant_tag = "illumination-shift";
      w.illumination = 0.6;
    }
  } else if (kind == "rooms") {
    // Two 10 m rooms joined by a 2 m wide corridor.
    w.xmin = 0.0;
    w.xmax = 26.0;
    w.ymin = 0.0;
    w.ymax = 12.0;
    w.wall_ids = {1, 2, 3, 4};
    w.obstacles.push_back({rect(10.0, 0.0, 16.0, 5.0), 125});
    w.obstacles.push_back({rect(10.0, 7.0, 16.0, 12.0), 126});
    // Furniture in the left room only: the rooms are otherwise mirror images,
    // and a wake-up in the bare right room must not look like the mapped one.
    w.obstacles.push_back({Circle{{4.5, 6.0}, 0.5}, 127});
    w.obstacles.push_back({rect(1.0, 0.0, 3.0, 0.3), 128});
    // Wall lining over the mapped half only, same idea as the corridor tiling.
    // The tag band is disjoint from the corridor world's so no rooms view can
    // masquerade as a corridor view in the shared encoder.
    for (int k = 0; k < 16; ++k) {
      w.obstacles.push_back({rect(1.0 * k, 0.0, 1.0 * (k + 1), 0.05), 130 + k});
      w.obstacles.push_back({rect(1.0 * k, 11.95, 1.0 * (k + 1), 12.0), 150 + k});
    }
    w.obstacles.push_back({rect(0.0, 0.0, 0.05, 6.0), 170});
    w.obstacles.push_back({rect(0.0, 6.0, 0.05, 12.0), 171});
    // The right room has its own wall lining; its surface tags never appear
    // in the mapped half of the world.
    w.obstacles.push_back({rect(25.95, 3.0, 26.0, 9.0), 180});
    w.obstacles.push_back({rect(20.0, 11.95, 24.0, 12.0), 181});
    w.obstacles.push_back({rect(18.0, 0.0, 22.0, 0.05), 182});
  } else if (kind == "empty-unbounded") {
    w.bounded = false;
  } else {
    throw std::runtime_error("unknown world kind: " + kind);
  }
  return w;
}

ScenarioRegistry ScenarioRegistry::builtin() {
  ScenarioRegistry reg;
  auto add = [&](Scenario s) { reg.scenarios[s.id] = s; };
  add({"corridor-easy", "corridor", 5.0, 15.0, 1e9, -1e9, true});
  add({"corridor-medium", "corridor", 15.0, 40.0, 1e9, -1e9, true});
  add({"corridor-hard", "corridor", 40.0, 60.0, 1e9, -1e9, true});
  add({"corridor-novel", "corridor-novel", 5.0, 15.0, 1e9, -1e9, true});
  add({"corridor-illum", "corridor-illum", 5.0, 15.0, 1e9, -1e9, true});
  add({"rooms-easy", "rooms", 4.0, 12.0, 15.0, -1e9, true});
  add({"rooms-unmapped", "rooms", 0.0, 0.0, 1e9, 17.0, false});
  return reg;
}

ScenarioRegistry ScenarioRegistry::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario registry: " + path);
  nlohmann::json j;
  in >> j;
  ScenarioRegistry reg;
  for (const auto& js : j.at("scenarios")) {
    Scenario s;
    s.id = js.at("id").get<std::string>();
    s.world_kind = js.at("world").get<std::string>();
    s.band_lo = js.value("band_lo", 0.0);
    s.band_hi = js.value("band_hi", 0.0);
    s.sample_xmax = js.value("sample_xmax", 1e9);
    s.sample_xmin = js.value("sample_xmin", -1e9);
    s.has_goal = js.value("has_goal", true);
    reg.scenarios[s.id] = s;
  }
  return reg;
}

void ScenarioRegistry::save_json(const std::string& path) const {
  nlohmann::json j;
  j["scenarios"] = nlohmann::json::array();
  for (const auto& [id, s] : scenarios) {
    nlohmann::json js;
    js["id"] = s.id;
    js["world"] = s.world_kind;
    js["band_lo"] = s.band_lo;
    js["band_hi"] = s.band_hi;
    js["sample_xmax"] = s.sample_xmax;
    js["sample_xmin"] = s.sample_xmin;
    js["has_goal"] = s.has_goal;
    j["scenarios"].push_back(js);
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

static uint64_t mix_seed(uint64_t seed, const std::string& id) {
  uint64_t h = 1469598103934665603ull;
  for (char c : id) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h ^ (seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
}

ScenarioInstance reset_scenario(const ScenarioRegistry& reg, const std::string& scenario_id,
                                uint64_t seed) {
  auto it = reg.scenarios.find(scenario_id);
  if (it == reg.scenarios.end()) {
    throw std::runtime_error("unknown scenario id: " + scenario_id);
  }
  const Scenario& sc = it->second;
  ScenarioInstance inst;
  inst.world = make_world(sc.world_kind);
  inst.has_goal = sc.has_goal;

  std::mt19937_64 rng(mix_seed(seed, scenario_id));
  std::uniform_real_distribution<double> ux(inst.world.xmin + 0.8, inst.world.xmax - 0.8);
  std::uniform_real_distribution<double> uy(inst.world.ymin + 0.8, inst.world.ymax - 0.8);
  std::uniform_real_distribution<double> uth(-M_PI, M_PI);
  std::uniform_real_distribution<double> ujit(-0.4, 0.4);

  auto sample_free = [&](double xlo, double xhi) {
    for (int tries = 0; tries < 20000; ++tries) {
      Vec2 p{ux(rng), uy(rng)};
      if (p.x() < xlo || p.x() > xhi) continue;
      if (point_free(inst.world, p, 0.6)) return p;
    }
    throw std::runtime_error("could not sample free point in scenario " + scenario_id);
  };

  if (!sc.has_goal) {
    const Vec2 s = sample_free(sc.sample_xmin, sc.sample_xmax);
    inst.start = {s.x(), s.y(), geo::wrap_angle(uth(rng))};
    inst.goal = inst.start;
    return inst;
  }

  for (int tries = 0; tries < 2000; ++tries) {
    const Vec2 s = sample_free(sc.sample_xmin, sc.sample_xmax);
    const Vec2 g = sample_free(sc.sample_xmin, sc.sample_xmax);
    std::vector<Vec2> path;
    const double d = geodesic_distance(inst.world, s, g, 0.25, &path);
    if (d < sc.band_lo || d > sc.band_hi) continue;
    double theta0 = uth(rng);
    if (path.size() >= 3) {
      const Vec2 dir = path[2] - path[0];
      theta0 = geo::wrap_angle(std::atan2(dir.y(), dir.x()) + ujit(rng));
    }
    inst.start = {s.x(), s.y(), theta0};
    inst.goal = {g.x(), g.y(), 0.0};
    return inst;
  }
  throw std::runtime_error("could not sample start/goal in band for " + scenario_id);
}

}  // namespace scale::sim
