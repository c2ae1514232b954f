#pragma once

#include <optional>
#include <random>

#include "scale/affordance.hpp"
#include "scale/rnd.hpp"

namespace scale::recovery {

using nn::Mat;
using nn::ParamSet;

struct CostWeights {
  double lambda_goal = 0.5;      // goal pull (dropped when no goal)
  double eta_reach = 0.3;        // eta_1: reachability constraint
  double eta_prob = 0.05;        // eta_2: transition-probability constraint
  double eta_aggr = 0.1;         // eta_3: aggressiveness constraint
  double v_loc = -10.0;
  double delta_theta_min = 0.6;  // radians
};

struct MppiConfig {
  int n_candidates = 64;
  int k_steps = 5;
  int iters = 3;
  double temperature = 1.0;
};

struct Ablations {
  bool use_rnd = true;
  bool use_rnn = true;
};

// Everything the planner evaluates against.
struct Models {
  const ParamSet& params;
  repr::ReprConfig rcfg;
  iql::IQLConfig icfg;
  afford::AffordConfig acfg;
  rnd::RNDConfig ncfg;
  double dt = 0.25;
};

struct PlanCandidate {
  afford::LatentRollout rollout;
  double cost = 0.0;
};

// Eq-style recovery cost over a finished rollout. `rollout.values` must hold
// V_k = V(z_{k-1}, z_k) with z_0 = z_t; the eta_2 term uses -log p(u_k) so
// probable codes are preferred.
double score_plan(const Models& m, const Eigen::VectorXd& z_t,
                  const std::optional<Eigen::VectorXd>& z_g,
                  const afford::LatentRollout& rollout, const CostWeights& weights,
                  bool use_rnd = true);

// N rollouts from codes drawn around `mean_codes` (zero mean = the prior).
struct CandidateSet {
  std::vector<Mat> codes;   // K entries of N x d_u
  std::vector<Mat> states;  // K entries of N x d_z
  Mat values;               // N x K
  Mat prior_logp;           // N x K
  Eigen::VectorXd yaw;      // N
  Eigen::VectorXd costs;    // N
};

CandidateSet generate_candidates(const Models& m, const Eigen::VectorXd& z_t,
                                 const Mat& h_t, int n, int k,
                                 const std::vector<Eigen::VectorXd>& mean_codes,
                                 std::mt19937_64& rng);

void score_candidates(const Models& m, const Eigen::VectorXd& z_t,
                      const std::optional<Eigen::VectorXd>& z_g, CandidateSet& set,
                      const CostWeights& weights, const Ablations& abl);

// Importance-sampling refinement with elitism; best-ever candidate returned.
PlanCandidate mppi_refine(const Models& m, const Eigen::VectorXd& z_t, const Mat& h_t,
                          const std::optional<Eigen::VectorXd>& z_g,
                          const CostWeights& weights, const MppiConfig& cfg,
                          const Ablations& abl, std::mt19937_64& rng);

struct RecoverStep {
  sim::Action action;
  PlanCandidate plan;
};

// One recovery control step: plan, then act toward the first imagined latent.
RecoverStep recover_step(const Models& m, const Eigen::VectorXd& z_t, const Mat& h_t,
                         const std::optional<Eigen::VectorXd>& z_g,
                         const CostWeights& weights, const MppiConfig& cfg,
                         const Ablations& abl, std::mt19937_64& rng);

}  // namespace scale::recovery
