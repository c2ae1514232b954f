#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "scale/sampling.hpp"

using namespace scale;

namespace {

data::Dataset corridor_data(int episodes, uint64_t seed) {
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  return data::collect_episodes(spec, "noisy-waypoint-follower", episodes, seed);
}

}  // namespace

TEST_CASE("batch split: |B+| + |B-| equals batch_size with the configured ratios") {
  data::Dataset d = corridor_data(6, 21);
  data::SampleConfig cfg;  // batch 128, negative 0.25, calibration 0.35
  std::mt19937_64 rng(3);
  std::vector<data::GoalPair> pos, neg;
  data::sample_batch(d, cfg, rng, pos, neg);
  CHECK(pos.size() + neg.size() == 128);
  int n_floor = 0, n_cal = 0;
  for (const auto& g : neg) (g.calib_steps < 0 ? n_floor : n_cal)++;
  CHECK(std::abs(n_floor - 32) <= 1);
  CHECK(std::abs(n_cal - 45) <= 1);

  // Disabling the calibration radius removes the calibrated pairs entirely.
  cfg.calibration_radius = 0.0;
  data::sample_batch(d, cfg, rng, pos, neg);
  CHECK(pos.size() + neg.size() == 128);
  for (const auto& g : neg) CHECK(g.calib_steps < 0);
}

TEST_CASE("pose step estimate: turn, drive, turn at actuator rates") {
  // 4 m straight ahead at v_max 1, dt 0.25: exactly 16 steps.
  CHECK(data::estimate_steps({0, 0, 0}, {4, 0, 0}, 1.0, 1.5, 0.25) == 16);
  // Same but the goal faces back: + pi turn at w_max 1.5 -> +ceil(8.37...) total 25.
  CHECK(data::estimate_steps({0, 0, 0}, {4, 0, M_PI}, 1.0, 1.5, 0.25) == 25);
  // In-place half turn only (distance below the 0.5 m direction cutoff).
  CHECK(data::estimate_steps({0, 0, 0}, {0, 0, M_PI}, 1.0, 1.5, 0.25) == 9);
  // Behind the robot: turn pi, drive 4 m, turn back pi.
  CHECK(data::estimate_steps({0, 0, 0}, {-4, 0, 0}, 1.0, 1.5, 0.25) == 33);
}

TEST_CASE("calibration pairs stay within the pose radius and share a world") {
  data::Dataset d = corridor_data(6, 29);
  data::SampleConfig cfg;
  std::mt19937_64 rng(5);
  std::vector<data::GoalPair> pos, neg;
  data::sample_batch(d, cfg, rng, pos, neg);
  const auto& sc = d.meta.sim;
  // Worst case: radius at full drive speed plus two half-turns.
  const int bound = static_cast<int>(
      std::ceil(cfg.calibration_radius / (sc.v_max * sc.dt) +
                2.0 * M_PI / (sc.w_max * sc.dt)));
  int seen = 0;
  for (const auto& g : neg) {
    if (g.calib_steps < 0) continue;
    ++seen;
    CHECK(!g.positive);
    CHECK(g.calib_steps <= bound);
  }
  CHECK(seen > 0);
}

TEST_CASE("positive pairs: goal is literally the future frame at the stated gap") {
  data::Dataset d = corridor_data(4, 22);
  data::SampleConfig cfg;
  std::mt19937_64 rng(7);
  std::vector<data::GoalPair> pos, neg;
  data::sample_batch(d, cfg, rng, pos, neg);
  const double mr = d.meta.sim.max_range;
  for (const auto& p : pos) {
    CHECK(p.positive);
    CHECK(p.timestep_gap >= 1);
    CHECK(p.timestep_gap <= cfg.d_max);
    const auto& e = d.episodes[p.episode];
    REQUIRE(p.step + p.timestep_gap < e.obs.size());
    CHECK((p.obs_f - e.obs[p.step].features(mr)).norm() == 0.0);
    CHECK((p.next_obs_f - e.obs[p.step + 1].features(mr)).norm() == 0.0);
    CHECK((p.goal_f - e.obs[p.step + p.timestep_gap].features(mr)).norm() == 0.0);
  }
}

TEST_CASE("relabeled rewards take only values {0, -1, -10}") {
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  data::Dataset d = data::merge(
      corridor_data(4, 23),
      data::collect_episodes(spec, "collision-seeker", 2, 24));
  data::SampleConfig cfg;
  std::mt19937_64 rng(11);
  std::vector<data::GoalPair> pos, neg;
  bool saw_zero = false;
  for (int it = 0; it < 20; ++it) {
    data::sample_batch(d, cfg, rng, pos, neg);
    for (const auto& p : pos) {
      const bool valid = p.relabeled_reward == 0.0 || p.relabeled_reward == -1.0 ||
                         p.relabeled_reward == -10.0;
      CHECK(valid);
      // Goal reached at the anchor step <=> gap 1 without collision.
      if (p.timestep_gap <= 1 && !p.collided) {
        CHECK(p.relabeled_reward == 0.0);
        CHECK(p.done_goal);
        saw_zero = true;
      }
    }
  }
  CHECK(saw_zero);
}

TEST_CASE("d_max=1 forces every positive gap to 1") {
  data::Dataset d = corridor_data(3, 25);
  data::SampleConfig cfg;
  cfg.d_max = 1;
  std::mt19937_64 rng(13);
  std::vector<data::GoalPair> pos, neg;
  data::sample_batch(d, cfg, rng, pos, neg);
  for (const auto& p : pos) CHECK(p.timestep_gap == 1);
}

TEST_CASE("negative pairs come from far gaps or other episodes") {
  data::Dataset d = corridor_data(6, 26);
  data::SampleConfig cfg;
  std::mt19937_64 rng(17);
  std::vector<data::GoalPair> pos, neg;
  data::sample_batch(d, cfg, rng, pos, neg);
  CHECK(!neg.empty());
  for (const auto& n : neg) {
    CHECK_FALSE(n.positive);
    // Either cross-episode (gap flagged 0 with mismatched goal) or gap > d_max.
    if (n.timestep_gap > 0) CHECK(n.timestep_gap > cfg.d_max);
  }
}

TEST_CASE("alias guard keeps negatives visually distinct from their goal") {
  data::Dataset d = corridor_data(6, 29);
  data::SampleConfig cfg;
  cfg.min_negative_feature_dist = 0.3;
  std::mt19937_64 rng(23);
  std::vector<data::GoalPair> pos, neg;
  for (int it = 0; it < 5; ++it) {
    data::sample_batch(d, cfg, rng, pos, neg);
    for (const auto& n : neg) {
      if (n.calib_steps >= 0) continue;  // calibrated pairs are close on purpose
      CHECK((n.obs_f - n.goal_f).norm() >= cfg.min_negative_feature_dist);
    }
  }
  // Threshold 0 disables the check entirely.
  cfg.min_negative_feature_dist = 0.0;
  data::sample_batch(d, cfg, rng, pos, neg);
  CHECK(!neg.empty());
}

TEST_CASE("within-episode negatives disabled cross-episode still satisfy polarity") {
  data::Dataset d = corridor_data(6, 27);
  data::SampleConfig cfg;
  cfg.cross_episode_negatives = false;
  std::mt19937_64 rng(19);
  std::vector<data::GoalPair> pos, neg;
  data::sample_batch(d, cfg, rng, pos, neg);
  for (const auto& n : neg) {
    if (n.calib_steps >= 0) continue;  // calibrated pairs use gap 0
    CHECK(n.timestep_gap > cfg.d_max);
  }
}

TEST_CASE("truncated geometric gap stays in [1, d_max] and is deterministic") {
  std::mt19937_64 a(31), b(31);
  for (int i = 0; i < 2000; ++i) {
    const int g = data::sample_truncated_geometric_gap(0.2, 10, a);
    CHECK(g >= 1);
    CHECK(g <= 10);
    CHECK(g == data::sample_truncated_geometric_gap(0.2, 10, b));
  }
}

TEST_CASE("sampler determinism given the rng state") {
  data::Dataset d = corridor_data(4, 28);
  data::SampleConfig cfg;
  std::mt19937_64 r1(5), r2(5);
  std::vector<data::GoalPair> p1, n1, p2, n2;
  data::sample_batch(d, cfg, r1, p1, n1);
  data::sample_batch(d, cfg, r2, p2, n2);
  REQUIRE(p1.size() == p2.size());
  for (size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].episode == p2[i].episode);
    CHECK(p1[i].step == p2[i].step);
    CHECK(p1[i].timestep_gap == p2[i].timestep_gap);
  }
}
