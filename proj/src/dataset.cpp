#include "scale/dataset.hpp"

#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace scale::data {

double reward(bool reached_goal, bool collided) {
  if (collided) return -10.0;
  if (reached_goal) return 0.0;
  return -1.0;
}

size_t Dataset::total_steps() const {
  size_t n = 0;
  for (const auto& e : episodes) n += e.length();
  return n;
}

Transition Dataset::transition(size_t episode, size_t step) const {
  const Episode& e = episodes.at(episode);
  const StepRecord& s = e.steps.at(step);
  return Transition{&e.obs.at(step), s.action,   s.reward, &e.obs.at(step + 1),
                    s.done,          s.collided, s.pose,   e.episode_id,
                    static_cast<uint32_t>(step)};
}

namespace {

using geo::Vec2;
using geo::wrap_angle;

struct EpisodeRollout {
  Episode episode;
};

Episode run_waypoint_episode(const CollectSpec& spec, const sim::World& world,
                             uint32_t episode_id, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(world.xmin + 0.8, world.xmax - 0.8);
  std::uniform_real_distribution<double> uy(world.ymin + 0.8, world.ymax - 0.8);
  std::uniform_real_distribution<double> uth(-M_PI, M_PI);
  std::normal_distribution<double> noise_v(0.0, 0.12);
  std::normal_distribution<double> noise_w(0.0, 0.35);

  auto sample_free = [&]() {
    for (int tries = 0; tries < 20000; ++tries) {
      Vec2 p{ux(rng), uy(rng)};
      if (p.x() < spec.region_xmin || p.x() > spec.region_xmax) continue;
      if (sim::point_free(world, p, 0.6)) return p;
    }
    throw std::runtime_error("collect: no free point in region");
  };

  Vec2 start, goal;
  std::vector<Vec2> path;
  for (int tries = 0;; ++tries) {
    start = sample_free();
    goal = sample_free();
    const double d = sim::geodesic_distance(world, start, goal, 0.25, &path);
    if (d >= spec.min_task_distance && d < 1e17) break;
    if (tries > 500) throw std::runtime_error("collect: no feasible task");
  }

  Episode ep;
  ep.episode_id = episode_id;
  ep.world = spec.world_kind;
  sim::Pose pose{start.x(), start.y(), wrap_angle(uth(rng))};
  ep.obs.push_back(sim::observe(pose, world, spec.sim.rays, spec.sim.max_range, spec.sim.fov));

  size_t wp_idx = 0;
  // Occasional in-place scan windows: without them, turning appears only in
  // the first few steps of an episode and "goal behind the robot" states are
  // barely covered by the relabeled training pairs.
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> scan_len(6, 12);
  int scanning = 0;
  double scan_dir = 1.0;
  for (int t = 0; t < spec.timeout_steps; ++t) {
    // Lookahead waypoint: farthest path point within 1.5 m.
    while (wp_idx + 1 < path.size() &&
           (path[wp_idx] - pose.position()).norm() < 1.5) {
      ++wp_idx;
    }
    const Vec2 wp = path.empty() ? goal : path[wp_idx];
    const double bearing = std::atan2(wp.y() - pose.y, wp.x() - pose.x);
    const double err = wrap_angle(bearing - pose.theta);
    if (scanning == 0 && u01(rng) < 0.015) {
      scanning = scan_len(rng);
      scan_dir = u01(rng) < 0.5 ? -1.0 : 1.0;
    }
    Action a;
    if (scanning > 0) {
      --scanning;
      a.w = std::clamp(scan_dir * spec.sim.w_max + noise_w(rng), -spec.sim.w_max,
                       spec.sim.w_max);
      a.v = std::clamp(0.15 + noise_v(rng), 0.0, spec.sim.v_max);
    } else {
      a.w = std::clamp(2.0 * err + noise_w(rng), -spec.sim.w_max, spec.sim.w_max);
      const double fwd =
          (std::abs(err) > 1.2) ? 0.15 : spec.sim.v_max * (1.0 - 0.5 * std::abs(err));
      a.v = std::clamp(fwd + noise_v(rng), 0.0, spec.sim.v_max);
    }

    auto [next_pose, collided] = sim::step(pose, a, spec.sim.dt, world, spec.sim);
    const bool reached = (next_pose.position() - goal).norm() <= spec.goal_radius;
    StepRecord rec;
    rec.action = a;
    rec.collided = collided;
    rec.reward = reward(reached && !collided, collided);
    rec.done = collided || reached || (t + 1 == spec.timeout_steps);
    rec.pose = pose;
    pose = next_pose;
    ep.obs.push_back(sim::observe(pose, world, spec.sim.rays, spec.sim.max_range, spec.sim.fov));
    ep.steps.push_back(rec);
    if (rec.done) break;
  }
  return ep;
}

Episode run_collision_episode(const CollectSpec& spec, const sim::World& world,
                              uint32_t episode_id, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(world.xmin + 0.8, world.xmax - 0.8);
  std::uniform_real_distribution<double> uy(world.ymin + 0.8, world.ymax - 0.8);
  std::uniform_real_distribution<double> uth(-M_PI, M_PI);
  std::normal_distribution<double> noise_w(0.0, 0.25);

  Vec2 start;
  for (int tries = 0;; ++tries) {
    start = Vec2{ux(rng), uy(rng)};
    if (start.x() >= spec.region_xmin && start.x() <= spec.region_xmax &&
        sim::point_free(world, start, 0.4)) {
      break;
    }
    if (tries > 20000) throw std::runtime_error("collect: no free start");
  }

  Episode ep;
  ep.episode_id = episode_id;
  ep.world = spec.world_kind;
  sim::Pose pose{start.x(), start.y(), wrap_angle(uth(rng))};
  ep.obs.push_back(sim::observe(pose, world, spec.sim.rays, spec.sim.max_range, spec.sim.fov));
  for (int t = 0; t < spec.timeout_steps; ++t) {
    Action a{spec.sim.v_max, std::clamp(noise_w(rng), -spec.sim.w_max, spec.sim.w_max)};
    auto [next_pose, collided] = sim::step(pose, a, spec.sim.dt, world, spec.sim);
    StepRecord rec;
    rec.action = a;
    rec.collided = collided;
    rec.reward = reward(false, collided);
    rec.done = collided || (t + 1 == spec.timeout_steps);
    rec.pose = pose;
    pose = next_pose;
    ep.obs.push_back(sim::observe(pose, world, spec.sim.rays, spec.sim.max_range, spec.sim.fov));
    ep.steps.push_back(rec);
    if (rec.done) break;
  }
  return ep;
}

}  // namespace

Dataset collect_episodes(const CollectSpec& spec, const std::string& policy_spec,
                         int n_episodes, uint64_t seed) {
  if (n_episodes < 1) throw std::runtime_error("collect_episodes: n_episodes must be >= 1");
  const sim::World world = sim::make_world(spec.world_kind);
  Dataset d;
  d.meta.rays = spec.sim.rays;
  d.meta.obs_dim = sim::obs_feature_dim(spec.sim.rays);
  d.meta.world_kind = spec.world_kind;
  d.meta.variant_tag = world.variant_tag;
  d.meta.policy_spec = policy_spec;
  d.meta.seed = seed;
  d.meta.sim = spec.sim;

  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_episodes; ++i) {
    if (policy_spec == "noisy-waypoint-follower") {
      d.episodes.push_back(run_waypoint_episode(spec, world, static_cast<uint32_t>(i), rng));
    } else if (policy_spec == "collision-seeker") {
      d.episodes.push_back(run_collision_episode(spec, world, static_cast<uint32_t>(i), rng));
    } else {
      throw std::runtime_error("unknown behavior policy: " + policy_spec);
    }
  }
  return d;
}

namespace {

constexpr char kMagic[4] = {'S', 'D', 'S', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error(std::string("dataset: truncated file reading ") + what);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto len = read_pod<uint32_t>(in, "string length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("dataset: truncated file reading string");
  return s;
}

void write_obs(std::ostream& out, const sim::Observation& o) {
  for (int i = 0; i < o.depths.size(); ++i) write_pod<float>(out, static_cast<float>(o.depths(i)));
  for (int i = 0; i < o.surface_ids.size(); ++i) write_pod<int32_t>(out, o.surface_ids(i));
  write_pod<float>(out, static_cast<float>(o.illumination));
}

sim::Observation read_obs(std::istream& in, int rays) {
  sim::Observation o;
  o.depths.resize(rays);
  o.surface_ids.resize(rays);
  for (int i = 0; i < rays; ++i) o.depths(i) = read_pod<float>(in, "depth");
  for (int i = 0; i < rays; ++i) o.surface_ids(i) = read_pod<int32_t>(in, "surface id");
  o.illumination = read_pod<float>(in, "illumination");
  return o;
}

}  // namespace

void write_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint32_t>(out, d.meta.rays);
  write_pod<uint32_t>(out, d.meta.obs_dim);
  write_string(out, d.meta.world_kind);
  write_string(out, d.meta.variant_tag);
  write_string(out, d.meta.policy_spec);
  write_pod<uint64_t>(out, d.meta.seed);
  write_pod<double>(out, d.meta.sim.dt);
  write_pod<double>(out, d.meta.sim.v_max);
  write_pod<double>(out, d.meta.sim.w_max);
  write_pod<double>(out, d.meta.sim.max_range);
  write_pod<uint32_t>(out, static_cast<uint32_t>(d.episodes.size()));
  for (const auto& e : d.episodes) {
    write_pod<uint32_t>(out, e.episode_id);
    write_pod<uint32_t>(out, static_cast<uint32_t>(e.steps.size()));
    for (const auto& o : e.obs) write_obs(out, o);
    for (const auto& s : e.steps) {
      write_pod<float>(out, static_cast<float>(s.action.v));
      write_pod<float>(out, static_cast<float>(s.action.w));
      write_pod<float>(out, static_cast<float>(s.reward));
      write_pod<uint8_t>(out, s.done ? 1 : 0);
      write_pod<uint8_t>(out, s.collided ? 1 : 0);
      write_pod<float>(out, static_cast<float>(s.pose.x));
      write_pod<float>(out, static_cast<float>(s.pose.y));
      write_pod<float>(out, static_cast<float>(s.pose.theta));
    }
  }
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("dataset: bad magic header in " + path);
  }
  const auto version = read_pod<uint32_t>(in, "version");
  if (version != kVersion) {
    throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
  }
  Dataset d;
  d.meta.rays = read_pod<uint32_t>(in, "rays");
  d.meta.obs_dim = read_pod<uint32_t>(in, "obs dim");
  if (d.meta.obs_dim != sim::obs_feature_dim(static_cast<int>(d.meta.rays))) {
    throw std::runtime_error("dataset: metadata dim mismatch (obs_dim vs rays)");
  }
  d.meta.world_kind = read_string(in);
  d.meta.variant_tag = read_string(in);
  d.meta.policy_spec = read_string(in);
  d.meta.seed = read_pod<uint64_t>(in, "seed");
  d.meta.sim.dt = read_pod<double>(in, "dt");
  d.meta.sim.v_max = read_pod<double>(in, "v_max");
  d.meta.sim.w_max = read_pod<double>(in, "w_max");
  d.meta.sim.max_range = read_pod<double>(in, "max_range");
  d.meta.sim.rays = static_cast<int>(d.meta.rays);
  const auto n_episodes = read_pod<uint32_t>(in, "episode count");
  for (uint32_t i = 0; i < n_episodes; ++i) {
    Episode e;
    e.episode_id = read_pod<uint32_t>(in, "episode id");
    e.world = d.meta.world_kind;
    const auto n_steps = read_pod<uint32_t>(in, "step count");
    for (uint32_t k = 0; k < n_steps + 1; ++k) {
      e.obs.push_back(read_obs(in, static_cast<int>(d.meta.rays)));
    }
    for (uint32_t k = 0; k < n_steps; ++k) {
      StepRecord s;
      s.action.v = read_pod<float>(in, "action.v");
      s.action.w = read_pod<float>(in, "action.w");
      s.reward = read_pod<float>(in, "reward");
      s.done = read_pod<uint8_t>(in, "done") != 0;
      s.collided = read_pod<uint8_t>(in, "collided") != 0;
      s.pose.x = read_pod<float>(in, "pose.x");
      s.pose.y = read_pod<float>(in, "pose.y");
      s.pose.theta = read_pod<float>(in, "pose.theta");
      e.steps.push_back(s);
    }
    d.episodes.push_back(std::move(e));
  }
  return d;
}

Dataset merge(const Dataset& a, const Dataset& b) {
  if (a.meta.obs_dim != b.meta.obs_dim || a.meta.rays != b.meta.rays) {
    throw std::runtime_error("merge: dataset dims disagree");
  }
  Dataset out = a;
  for (Episode e : b.episodes) {
    e.episode_id = static_cast<uint32_t>(out.episodes.size());
    out.episodes.push_back(std::move(e));
  }
  return out;
}

}  // namespace scale::data
