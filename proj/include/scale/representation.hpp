#pragma once

#include <random>

#include "scale/dataset.hpp"
#include "scale/nets.hpp"
#include "scale/optim.hpp"

namespace scale::repr {

using nn::Mat;
using nn::ParamSet;

struct ReprConfig {
  int obs_dim = 65;
  int d_z = 32;
  int hidden = 128;
  int codebook_size = 128;
  double commitment_weight = 0.25;
  int pretrain_steps = 3000;
  int batch_size = 128;
  double lr = 3e-4;
  double weight_decay = 1e-4;
};

nn::MLPSpec encoder_spec(const ReprConfig& cfg);
nn::MLPSpec decoder_spec(const ReprConfig& cfg);

// Adds encoder, decoder and codebook tensors to `params`.
void init_representation(ParamSet& params, const ReprConfig& cfg, std::mt19937_64& rng);

// Continuous (pre-quantization) latents; one row per observation.
Mat encode(const ParamSet& params, const ReprConfig& cfg, const Mat& obs_features);
Eigen::VectorXd encode_one(const ParamSet& params, const ReprConfig& cfg,
                           const Eigen::VectorXd& obs_features);

// Nearest codebook entry by Euclidean distance; ties go to the lowest index.
std::pair<Eigen::VectorXd, int> quantize(const Eigen::VectorXd& z_e, const Mat& codebook);

// Full VQ-VAE objective (reconstruction + codebook + commitment) on a batch
// of featurized observations. Deterministic; usable as a grad-check target.
double vqvae_loss(const ParamSet& params, const ReprConfig& cfg, const Mat& batch,
                  nn::GradMap* grads, double* recon_out = nullptr);

struct PretrainReport {
  double final_recon = 0.0;
  std::vector<std::pair<long, double>> loss_curve;  // (step, loss)
};

PretrainReport pretrain_encoder(const data::Dataset& dataset, ParamSet& params,
                                const ReprConfig& cfg, uint64_t seed);

// All observation feature rows of a dataset, episode order.
Mat all_features(const data::Dataset& dataset);

}  // namespace scale::repr
