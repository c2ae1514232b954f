#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scale/geometry.hpp"

namespace scale::sim {

using geo::Pose;
using geo::Vec2;

struct Action {
  double v = 0.0;  // linear velocity, m/s
  double w = 0.0;  // angular velocity, rad/s
};

struct Obstacle {
  std::variant<geo::Circle, geo::Polygon> shape;
  int surface_id = 0;
};

struct World {
  double xmin = 0.0, xmax = 10.0, ymin = 0.0, ymax = 10.0;
  bool bounded = true;
  std::vector<Obstacle> obstacles;
  std::array<int, 4> wall_ids = {1, 2, 3, 4};  // -x, +x, -y, +y walls
  double illumination = 0.0;
  std::string variant_tag = "base";
};

struct Observation {
  Eigen::VectorXd depths;       // R ray distances, clipped to max_range
  Eigen::VectorXi surface_ids;  // R integer tags, 0 = nothing in range
  double illumination = 0.0;

  int rays() const { return static_cast<int>(depths.size()); }
  // Flat feature vector of dim 2R+1 fed to the encoders.
  Eigen::VectorXd features(double max_range) const;
};

inline int obs_feature_dim(int rays) { return 2 * rays + 1; }

struct SimConfig {
  double dt = 0.25;
  double v_max = 1.0;
  double w_max = 1.5;
  int rays = 32;
  double max_range = 12.0;
  double fov = 69.0 * M_PI / 180.0;
};

// Unicycle integration with motion cancelled on collision.
std::pair<Pose, bool> step(const Pose& pose, const Action& action, double dt,
                           const World& world, const SimConfig& cfg = {});

Observation observe(const Pose& pose, const World& world, int rays, double max_range,
                    double fov = 69.0 * M_PI / 180.0);

bool point_free(const World& world, const Vec2& p, double margin = 0.0);

// Grid-Dijkstra geodesic distance in meters; infinity if unreachable.
double geodesic_distance(const World& world, const Vec2& a, const Vec2& b,
                         double resolution = 0.25,
                         std::vector<Vec2>* path_out = nullptr);

struct Scenario {
  std::string id;
  std::string world_kind;   // corridor | corridor-novel | corridor-illum | rooms
  double band_lo = 0.0;     // geodesic start-goal band, meters
  double band_hi = 0.0;
  double sample_xmax = 1e9; // start/goal sampling restricted to x <= sample_xmax
  double sample_xmin = -1e9;
  bool has_goal = true;     // false: active-initialization scenario (no goal)
};

struct ScenarioRegistry {
  std::map<std::string, Scenario> scenarios;
  static ScenarioRegistry builtin();
  static ScenarioRegistry load_json(const std::string& path);
  void save_json(const std::string& path) const;
};

World make_world(const std::string& kind);

struct ScenarioInstance {
  World world;
  Pose start;
  Pose goal;
  bool has_goal = true;
};

ScenarioInstance reset_scenario(const ScenarioRegistry& reg, const std::string& scenario_id,
                                uint64_t seed);

}  // namespace scale::sim
