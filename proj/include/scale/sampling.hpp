#pragma once

#include <random>

#include "scale/dataset.hpp"

namespace scale::data {

struct GoalPair {
  uint32_t episode = 0;
  uint32_t step = 0;
  int timestep_gap = 0;
  bool positive = true;
  Eigen::VectorXd obs_f;       // featurized anchor observation
  Eigen::VectorXd next_obs_f;  // featurized next observation
  Eigen::VectorXd goal_f;      // featurized goal observation
  Action action;
  double relabeled_reward = -1.0;
  bool done_goal = false;  // goal reached at this transition
  bool collided = false;
  // Pose-estimated control steps from anchor to goal view, or -1 for ordinary
  // negatives (which regress to the value floor).
  int calib_steps = -1;
};

struct SampleConfig {
  int batch_size = 128;
  // Reachability horizon in control steps. At 0.25 s / 1 m/s this covers
  // ~10 m, so relabeled goals span the scale navigation actually uses.
  int d_max = 40;
  double gap_geometric_p = 0.08;  // truncated at d_max
  double negative_fraction = 0.25;
  bool cross_episode_negatives = true;
  // Alias guard: drop negative candidates whose anchor and goal frames are
  // nearly identical (corridor sections repeat, so "far" pairs can look like
  // "same place" pairs and poison the value floor). 0 disables.
  double min_negative_feature_dist = 0.15;
  // Negatives must be genuinely far: every episode here overlaps the same
  // small workspace, so a frame from another episode can sit a metre away
  // facing the other direction. Without a positional gate those pairs train
  // "same place, different heading" toward the value floor and the policy
  // never learns that turning has value. Pairs from different worlds always
  // qualify; 0 disables. Collection poses are used for mining only — the
  // runtime never sees them.
  double min_negative_pose_dist = 10.0;
  // Calibration pairs: cross-trajectory pairs whose recorded poses sit within
  // calibration_radius get a value target derived from the pose-estimated
  // step count instead of the floor. Relabeling alone never grounds the value
  // of "frame from another episode, a few metres away" — the gate above
  // excludes such pairs from the floor, and positives are same-episode only —
  // yet localization and map edges query exactly that range. Near the radius
  // a straight line may cut through an interior wall, but the estimated step
  // count there already discounts to within a step or two of v_min, so the
  // optimism is bounded. Poses are mining-time only.
  double calibration_fraction = 0.35;
  double calibration_radius = 8.0;
};

// Hindsight-relabeled positive/negative goal pairs. |pos| + |neg| ==
// batch_size; `negatives` holds the floor-regressed pairs followed by the
// pose-calibrated pairs (calib_steps >= 0).
void sample_batch(const Dataset& dataset, const SampleConfig& cfg, std::mt19937_64& rng,
                  std::vector<GoalPair>& positives, std::vector<GoalPair>& negatives);

int sample_truncated_geometric_gap(double p, int d_max, std::mt19937_64& rng);

// Control steps to drive pose a -> pose b: turn toward b, drive straight,
// turn into b's heading. An upper-bound surrogate for the optimal dubins-like
// path, used only to calibrate value targets at data-mining time.
int estimate_steps(const sim::Pose& a, const sim::Pose& b, double v_max, double w_max,
                   double dt);

}  // namespace scale::data
