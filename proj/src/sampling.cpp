#include "scale/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace scale::data {

int estimate_steps(const sim::Pose& a, const sim::Pose& b, double v_max, double w_max,
                   double dt) {
  const double d = std::hypot(b.x - a.x, b.y - a.y);
  double turn = 0.0;
  if (d > 0.5) {
    const double dir = std::atan2(b.y - a.y, b.x - a.x);
    turn = std::abs(geo::wrap_angle(dir - a.theta)) +
           std::abs(geo::wrap_angle(b.theta - dir));
  } else {
    turn = std::abs(geo::wrap_angle(b.theta - a.theta));
  }
  return static_cast<int>(std::ceil(d / (v_max * dt) + turn / (w_max * dt)));
}

int sample_truncated_geometric_gap(double p, int d_max, std::mt19937_64& rng) {
  if (d_max <= 1) return d_max;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int gap = 1;
  while (gap < d_max && u01(rng) > p) ++gap;
  return gap;
}

void sample_batch(const Dataset& dataset, const SampleConfig& cfg, std::mt19937_64& rng,
                  std::vector<GoalPair>& positives, std::vector<GoalPair>& negatives) {
  if (dataset.episodes.empty()) throw std::runtime_error("sample_batch: empty dataset");
  if (cfg.d_max < 1) throw std::runtime_error("sample_batch: d_max must be >= 1");
  positives.clear();
  negatives.clear();

  const double max_range = dataset.meta.sim.max_range;
  const int n_neg = static_cast<int>(std::lround(cfg.batch_size * cfg.negative_fraction));
  const int n_cal = cfg.calibration_radius > 0.0
                        ? static_cast<int>(std::lround(cfg.batch_size * cfg.calibration_fraction))
                        : 0;
  const int n_pos = cfg.batch_size - n_neg - n_cal;

  std::uniform_int_distribution<size_t> pick_ep(0, dataset.episodes.size() - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  auto pick_step = [&](const Episode& e) {
    std::uniform_int_distribution<size_t> pick(0, e.length() - 1);
    return pick(rng);
  };
  // Pose of frame index i (the final frame reuses the last step's pose; the
  // half-step error is irrelevant at the 10 m gate).
  auto frame_pose = [](const Episode& e, size_t i) {
    return e.steps[std::min(i, e.length() - 1)].pose;
  };
  auto far_apart = [&](const Episode& ea, size_t ta, const Episode& eb, size_t tb) {
    if (cfg.min_negative_pose_dist <= 0.0) return true;
    if (ea.world != eb.world) return true;  // different world: unreachable
    const sim::Pose a = frame_pose(ea, ta);
    const sim::Pose b = frame_pose(eb, tb);
    return std::hypot(a.x - b.x, a.y - b.y) >= cfg.min_negative_pose_dist;
  };

  int guard = 0;
  while (static_cast<int>(positives.size()) < n_pos) {
    if (++guard > cfg.batch_size * 1000) {
      throw std::runtime_error("sample_batch: cannot draw positives (episodes too short?)");
    }
    const Episode& e = dataset.episodes[pick_ep(rng)];
    if (e.length() == 0) continue;
    const size_t t = pick_step(e);
    const int gap = sample_truncated_geometric_gap(cfg.gap_geometric_p, cfg.d_max, rng);
    if (t + gap > e.length()) continue;  // goal frame beyond episode end: resample

    GoalPair gp;
    gp.episode = e.episode_id;
    gp.step = static_cast<uint32_t>(t);
    gp.timestep_gap = gap;
    gp.positive = true;
    gp.obs_f = e.obs[t].features(max_range);
    gp.next_obs_f = e.obs[t + 1].features(max_range);
    gp.goal_f = e.obs[t + gap].features(max_range);
    gp.action = e.steps[t].action;
    gp.collided = e.steps[t].collided;
    const bool reached = gap <= 1 && !gp.collided;
    gp.relabeled_reward = reward(reached, gp.collided);
    gp.done_goal = reached;
    positives.push_back(std::move(gp));
  }

  guard = 0;
  while (static_cast<int>(negatives.size()) < n_neg) {
    if (++guard > cfg.batch_size * 1000) {
      throw std::runtime_error("sample_batch: cannot draw negatives");
    }
    const bool cross = cfg.cross_episode_negatives && dataset.episodes.size() > 1 &&
                       u01(rng) < 0.5;
    if (cross) {
      const Episode& ea = dataset.episodes[pick_ep(rng)];
      const Episode& eb = dataset.episodes[pick_ep(rng)];
      if (ea.length() == 0 || eb.length() == 0 || ea.episode_id == eb.episode_id) continue;
      const size_t ta = pick_step(ea);
      const size_t tb = pick_step(eb);
      if (!far_apart(ea, ta, eb, tb)) continue;
      GoalPair gp;
      gp.episode = ea.episode_id;
      gp.step = static_cast<uint32_t>(ta);
      gp.timestep_gap = cfg.d_max + 1;
      gp.positive = false;
      gp.obs_f = ea.obs[ta].features(max_range);
      gp.next_obs_f = ea.obs[ta + 1].features(max_range);
      gp.goal_f = eb.obs[tb].features(max_range);
      if ((gp.obs_f - gp.goal_f).norm() < cfg.min_negative_feature_dist) continue;
      gp.action = ea.steps[ta].action;
      gp.relabeled_reward = reward(false, false);
      negatives.push_back(std::move(gp));
    } else {
      const Episode& e = dataset.episodes[pick_ep(rng)];
      if (static_cast<int>(e.length()) <= cfg.d_max + 1) continue;
      const size_t t = pick_step(e);
      const int max_gap = static_cast<int>(e.length() - t);
      if (max_gap <= cfg.d_max + 1) continue;
      std::uniform_int_distribution<int> pick_gap(cfg.d_max + 1, max_gap);
      const int gap = pick_gap(rng);
      if (!far_apart(e, t, e, t + gap)) continue;
      GoalPair gp;
      gp.episode = e.episode_id;
      gp.step = static_cast<uint32_t>(t);
      gp.timestep_gap = gap;
      gp.positive = false;
      gp.obs_f = e.obs[t].features(max_range);
      gp.next_obs_f = e.obs[t + 1].features(max_range);
      gp.goal_f = e.obs[t + gap].features(max_range);
      if ((gp.obs_f - gp.goal_f).norm() < cfg.min_negative_feature_dist) continue;
      gp.action = e.steps[t].action;
      gp.relabeled_reward = reward(false, false);
      negatives.push_back(std::move(gp));
    }
  }

  // Calibration pairs: any two same-world frames within calibration_radius,
  // with a value target derived from the pose-estimated step count.
  guard = 0;
  const double v_max = dataset.meta.sim.v_max;
  const double w_max = dataset.meta.sim.w_max;
  const double dt = dataset.meta.sim.dt;
  int drawn = 0;
  while (drawn < n_cal) {
    if (++guard > cfg.batch_size * 1000) {
      throw std::runtime_error("sample_batch: cannot draw calibration pairs");
    }
    const Episode& ea = dataset.episodes[pick_ep(rng)];
    const Episode& eb = dataset.episodes[pick_ep(rng)];
    if (ea.length() == 0 || eb.length() == 0) continue;
    if (ea.world != eb.world) continue;
    const size_t ta = pick_step(ea);
    const size_t tb = pick_step(eb);
    if (ea.episode_id == eb.episode_id && ta == tb) continue;
    const sim::Pose pa = frame_pose(ea, ta);
    const sim::Pose pb = frame_pose(eb, tb);
    if (std::hypot(pa.x - pb.x, pa.y - pb.y) > cfg.calibration_radius) continue;
    GoalPair gp;
    gp.episode = ea.episode_id;
    gp.step = static_cast<uint32_t>(ta);
    gp.timestep_gap = 0;
    gp.positive = false;
    gp.obs_f = ea.obs[ta].features(max_range);
    gp.next_obs_f = ea.obs[ta + 1].features(max_range);
    gp.goal_f = eb.obs[tb].features(max_range);
    gp.action = ea.steps[ta].action;
    gp.relabeled_reward = reward(false, false);
    gp.calib_steps = estimate_steps(pa, pb, v_max, w_max, dt);
    negatives.push_back(std::move(gp));
    ++drawn;
  }
}

}  // namespace scale::data
