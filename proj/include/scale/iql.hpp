#pragma once

#include <random>

#include "scale/nets.hpp"
#include "scale/optim.hpp"
#include "scale/representation.hpp"
#include "scale/sampling.hpp"

namespace scale::iql {

using nn::Mat;
using nn::ParamSet;

struct IQLConfig {
  double gamma = 0.97;
  double tau = 0.7;           // expectile
  double beta_awr = 3.0;      // inverse temperature
  double v_min = -20.0;       // negative-pair value target
  double adv_clip = 100.0;    // advantage weight clip
  double sigma_min = 0.05;    // policy std bounds
  double sigma_max = 1.0;
  int hidden = 128;
  double lr = 3e-4;
  double weight_decay = 1e-4;
  double rho = 0.005;  // target soft-update mixing
  int steps = 6000;
  double action_v_max = 1.0;  // actuator bounds for the tanh-squashed mean
  double action_w_max = 1.5;
};

// Asymmetric squared loss |tau - 1(u<0)| * u^2 (upper-expectile weighting).
double expectile_loss(double u, double tau);

Eigen::VectorXd relative_goal_embedding(const Eigen::VectorXd& z_g,
                                        const Eigen::VectorXd& z_t);

nn::MLPSpec q_spec(int d_z, int hidden, const std::string& prefix = "q");
nn::MLPSpec v_spec(int d_z, int hidden);
nn::MLPSpec pi_spec(int d_z, int hidden);

// Q, target Q, V and policy networks (plus policy log-std).
void init_iql(ParamSet& params, int d_z, const IQLConfig& cfg, std::mt19937_64& rng);

struct IQLBatch {
  // Positive pairs (hindsight-relabeled).
  Mat pos_obs, pos_next, pos_goal;  // raw features
  Mat pos_actions;                  // n x 2
  Eigen::VectorXd pos_rewards;
  std::vector<char> pos_done_goal;
  // Negative and pose-calibrated pairs. calib_steps < 0 regresses to v_min,
  // otherwise to the discounted value of that many -1 rewards.
  Mat neg_obs, neg_goal;
  std::vector<int> neg_calib_steps;
};

IQLBatch make_batch(const std::vector<data::GoalPair>& positives,
                    const std::vector<data::GoalPair>& negatives);

enum class LossTerm { Q, V, Pi };

struct LossReport {
  double l_q = 0.0, l_v = 0.0, l_pi = 0.0;
  double mean_v_pos = 0.0, mean_v_neg = 0.0;
};

// One loss term with analytic gradients (L_Q also back-propagates into the
// encoder; L_V / L_Pi see stop-gradient latents).
double iql_loss(const ParamSet& model, const repr::ReprConfig& rcfg, const IQLConfig& cfg,
                const IQLBatch& batch, LossTerm term, nn::GradMap* grads);

// All three terms plus diagnostics; grads (if given) accumulate every term.
LossReport iql_losses(const ParamSet& model, const repr::ReprConfig& rcfg,
                      const IQLConfig& cfg, const IQLBatch& batch, nn::GradMap* grads);

struct TrainReport {
  std::vector<LossReport> curve;  // sampled every 100 steps
};

// Stage-2 loop: Q/V/policy updates, encoder fine-tuning through L_Q, and
// target-network soft updates. Writes a loss CSV when path is non-empty.
TrainReport train_iql(const data::Dataset& dataset, ParamSet& model,
                      const repr::ReprConfig& rcfg, const IQLConfig& cfg,
                      const data::SampleConfig& scfg, uint64_t seed,
                      const std::string& loss_csv_path = "");

// --- plain evaluation helpers ---------------------------------------------

// V(z, goal) via the relative goal embedding; one row per pair.
Eigen::VectorXd v_values(const ParamSet& model, int d_z, int hidden, const Mat& z,
                         const Mat& z_goal);
double v_value(const ParamSet& model, int d_z, int hidden, const Eigen::VectorXd& z,
               const Eigen::VectorXd& z_goal);

// Squashed policy mean action.
sim::Action policy_mean_action(const ParamSet& model, int d_z, const IQLConfig& cfg,
                               const Eigen::VectorXd& z, const Eigen::VectorXd& z_goal);
// Batched variant: one (v, w) row per (z, goal) pair.
Mat policy_mean_batch(const ParamSet& model, int d_z, const IQLConfig& cfg, const Mat& z,
                      const Mat& z_goal);
// Mean action plus k-1 samples from the policy distribution, re-ranked by Q.
// One greedy improvement step at decision time; candidates stay on-manifold
// because they come from the policy itself.
sim::Action policy_q_action(const ParamSet& model, int d_z, const IQLConfig& cfg,
                            const Eigen::VectorXd& z, const Eigen::VectorXd& z_goal,
                            int k, std::mt19937_64& rng);

}  // namespace scale::iql
