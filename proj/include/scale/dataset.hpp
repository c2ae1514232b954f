#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scale/sim.hpp"

namespace scale::data {

using sim::Action;
using sim::Observation;
using sim::Pose;

// reward design: -1 per step, 0 at goal, -10 on collision.
// Collision dominates when both flags are raised.
double reward(bool reached_goal, bool collided);

struct StepRecord {
  Action action;
  double reward = -1.0;
  bool done = false;
  bool collided = false;
  Pose pose;  // ground truth, used only for metrics and policy supervision
};

struct Episode {
  uint32_t episode_id = 0;
  std::string world;  // world kind this episode was collected in
  std::vector<Observation> obs;  // steps + 1 frames
  std::vector<StepRecord> steps;

  size_t length() const { return steps.size(); }
};

struct DatasetMeta {
  uint32_t rays = 32;
  uint32_t obs_dim = 65;  // 2R + 1
  std::string world_kind;
  std::string variant_tag;
  std::string policy_spec;
  uint64_t seed = 0;
  sim::SimConfig sim;
};

struct Transition {
  const Observation* obs;
  Action action;
  double reward;
  const Observation* next_obs;
  bool done;
  bool collided;
  Pose pose;
  uint32_t episode_id;
  uint32_t step_index;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Episode> episodes;

  size_t total_steps() const;
  Transition transition(size_t episode, size_t step) const;
};

struct CollectSpec {
  std::string world_kind = "corridor";
  double region_xmin = -1e9;  // data collection confined to this x-range
  double region_xmax = 1e9;
  int timeout_steps = 400;
  double goal_radius = 0.5;
  double min_task_distance = 3.0;
  sim::SimConfig sim;
};

// policy_spec: "noisy-waypoint-follower" | "collision-seeker"
Dataset collect_episodes(const CollectSpec& spec, const std::string& policy_spec,
                         int n_episodes, uint64_t seed);

void write_dataset(const Dataset& d, const std::string& path);
Dataset read_dataset(const std::string& path);

// Concatenates episodes (re-numbering ids); metadata must agree on dims.
Dataset merge(const Dataset& a, const Dataset& b);

}  // namespace scale::data
