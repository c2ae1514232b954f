#pragma once

#include <random>

#include "scale/iql.hpp"
#include "scale/nets.hpp"
#include "scale/representation.hpp"
#include "scale/sampling.hpp"

namespace scale::afford {

using nn::Mat;
using nn::ParamSet;

struct AffordConfig {
  int d_u = 8;       // transition-code dim
  int d_h = 64;      // temporal feature dim (forced to d_z when use_rnn=false)
  int history = 8;   // GRU history horizon H
  int k_steps = 5;   // rollout length K
  double beta_vib = 0.01;
  int hidden = 128;
  double lr = 3e-4;
  double weight_decay = 1e-4;
  int steps = 4000;
  bool use_rnn = true;  // ablation: h := current z

  int feature_dim(int d_z) const { return use_rnn ? d_h : d_z; }
};

void init_affordance(ParamSet& params, int d_z, const AffordConfig& cfg,
                     std::mt19937_64& rng);

// FiLM: gamma(h) (.) u + delta(h), with learned linear gamma/delta.
Eigen::VectorXd film_modulate(const ParamSet& params, const Eigen::VectorXd& h,
                              const Eigen::VectorXd& u);

// GRU over the latent history (padded by repeating the oldest frame).
// With use_rnn=false this is the identity on the last latent.
Eigen::VectorXd temporal_encode(const ParamSet& params, const AffordConfig& cfg, int d_z,
                                const std::vector<Eigen::VectorXd>& z_history);

// One incremental GRU update of the temporal feature with a new latent.
Mat temporal_step(const ParamSet& params, const AffordConfig& cfg, int d_z, const Mat& h,
                  const Mat& z);

// Decoder psi(h, u), batched.
Mat decode(const ParamSet& params, const AffordConfig& cfg, int d_z, const Mat& h,
           const Mat& u);

struct AffordBatch {
  std::vector<Mat> history;  // H matrices of n x d_z, oldest first
  Mat z_target;              // n x d_z
};

AffordBatch make_afford_batch(const data::Dataset& dataset, const ParamSet& model,
                              const repr::ReprConfig& rcfg, const AffordConfig& cfg,
                              int batch_size, int d_max, std::mt19937_64& rng);

struct AffordLoss {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

// VIB objective: reconstruction through the forward-inverse cycle plus
// KL(q(u|h,z') || N(0, I)). `noise` is the reparameterization draw (n x d_u),
// passed in so the loss is deterministic for gradient checking.
AffordLoss affordance_loss(const ParamSet& params, const AffordConfig& cfg, int d_z,
                           const AffordBatch& batch, const Mat& noise, nn::GradMap* grads);

struct LatentRollout {
  std::vector<Eigen::VectorXd> codes;   // u_{1:K}
  std::vector<Eigen::VectorXd> states;  // z_{t+1:t+K}
  std::vector<double> prior_logp;       // standard-normal log density per code
  std::vector<double> values;           // V_k = V(z_{k-1}, z_k)
  double yaw = 0.0;                     // plan yaw estimate
};

// Recursive latent rollout: decode, then feed the prediction back through the
// GRU. Batched over candidates; codes[k] is N x d_u.
std::vector<Mat> rollout_latent_batch(const ParamSet& params, const AffordConfig& cfg,
                                      int d_z, Mat h, const std::vector<Mat>& codes,
                                      Mat* final_h = nullptr);

LatentRollout rollout_latent(const ParamSet& params, const AffordConfig& cfg, int d_z,
                             const Eigen::VectorXd& h,
                             const std::vector<Eigen::VectorXd>& codes);

// Integrated policy yaw over the imagined states.
double estimate_plan_yaw(const ParamSet& model, const iql::IQLConfig& icfg, int d_z,
                         const Eigen::VectorXd& z_t,
                         const std::vector<Eigen::VectorXd>& states, double dt);

struct TrainReport {
  std::vector<AffordLoss> curve;
};

TrainReport train_affordance(const data::Dataset& dataset, ParamSet& model,
                             const repr::ReprConfig& rcfg, const AffordConfig& cfg,
                             int batch_size, int d_max, uint64_t seed);

double standard_normal_logpdf(const Eigen::VectorXd& u);

}  // namespace scale::afford
