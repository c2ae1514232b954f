#pragma once

#include <random>

#include "scale/nets.hpp"
#include "scale/optim.hpp"

namespace scale::rnd {

using nn::Mat;
using nn::ParamSet;

struct RNDConfig {
  int d_rnd = 32;
  int hidden = 128;
  double lr = 3e-4;
  double weight_decay = 1e-4;
  int steps = 4000;
  int batch_size = 128;
  // Training-time jitter, relative to the latent std. Without it the
  // predictor memorizes the exact training latents and every nearby-but-new
  // latent scores as novel; with it whole familiar regions score low.
  double augment_sigma = 0.05;
};

// Prior: frozen random MLP. Predictor: one extra hidden layer, trained to
// match the prior on dataset latents.
void init_rnd(ParamSet& params, int d_z, const RNDConfig& cfg, std::mt19937_64& rng);

// T(z) = || prior(z) - predictor(z) ||^2, per row.
Eigen::VectorXd novelty_scores(const ParamSet& params, int d_z, const RNDConfig& cfg,
                               const Mat& z);
double novelty_score(const ParamSet& params, int d_z, const RNDConfig& cfg,
                     const Eigen::VectorXd& z);

// Mean novelty over a batch, with gradients for the predictor only.
double rnd_loss(const ParamSet& params, int d_z, const RNDConfig& cfg, const Mat& z,
                nn::GradMap* grads);

struct TrainReport {
  std::vector<double> epoch_means;  // smoothed training-set novelty per epoch
};

TrainReport train_rnd(const Mat& latents, ParamSet& params, int d_z, const RNDConfig& cfg,
                      uint64_t seed);

uint64_t prior_checksum(const ParamSet& params);

}  // namespace scale::rnd
