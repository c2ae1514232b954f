#include "scale/rnd.hpp"

#include <cmath>
#include <stdexcept>

namespace scale::rnd {

using ad::Graph;
using ad::Var;

namespace {

nn::MLPSpec prior_spec(int d_z, const RNDConfig& cfg) {
  return {"rnd.prior", {d_z, cfg.hidden, cfg.d_rnd}, false};
}

nn::MLPSpec pred_spec(int d_z, const RNDConfig& cfg) {
  return {"rnd.pred", {d_z, cfg.hidden, cfg.hidden, cfg.d_rnd}, false};
}

}  // namespace

void init_rnd(ParamSet& params, int d_z, const RNDConfig& cfg, std::mt19937_64& rng) {
  nn::init_mlp(params, prior_spec(d_z, cfg), rng);
  nn::init_mlp(params, pred_spec(d_z, cfg), rng);
}

Eigen::VectorXd novelty_scores(const ParamSet& params, int d_z, const RNDConfig& cfg,
                               const Mat& z) {
  const Mat prior = nn::mlp_forward(params, prior_spec(d_z, cfg), z);
  const Mat pred = nn::mlp_forward(params, pred_spec(d_z, cfg), z);
  return (prior - pred).rowwise().squaredNorm();
}

double novelty_score(const ParamSet& params, int d_z, const RNDConfig& cfg,
                     const Eigen::VectorXd& z) {
  return novelty_scores(params, d_z, cfg, z.transpose())(0);
}

double rnd_loss(const ParamSet& params, int d_z, const RNDConfig& cfg, const Mat& z,
                nn::GradMap* grads) {
  Graph g;
  nn::ParamVars vars = nn::make_vars(g, params, "rnd.pred");
  Var x = g.leaf(z);
  Var prior = nn::mlp_forward(g, vars, prior_spec(d_z, cfg), x);
  Var pred = nn::mlp_forward(g, vars, pred_spec(d_z, cfg), x);
  Var loss = ad::mean_sq_dist(pred, prior);
  if (grads) {
    g.backward(loss);
    nn::GradMap all;
    nn::collect_grads(g, vars, all);
    for (auto& [name, grad] : all) {
      auto [it, inserted] = grads->try_emplace(name, grad);
      if (!inserted) it->second += grad;
    }
  }
  return loss.scalar();
}

TrainReport train_rnd(const Mat& latents, ParamSet& params, int d_z, const RNDConfig& cfg,
                      uint64_t seed) {
  if (latents.rows() == 0) throw std::runtime_error("train_rnd: no latents");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> pick(0, latents.rows() - 1);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double latent_std =
      std::sqrt((latents.array() - latents.mean()).square().mean());
  const double sigma = cfg.augment_sigma * latent_std;
  nn::OptimState opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;

  TrainReport report;
  Mat batch(cfg.batch_size, latents.cols());
  const int steps_per_epoch = std::max(1, cfg.steps / 10);
  double epoch_sum = 0.0;
  int epoch_count = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    for (int i = 0; i < cfg.batch_size; ++i) {
      batch.row(i) = latents.row(pick(rng));
      if (sigma > 0.0) {
        for (long j = 0; j < batch.cols(); ++j) batch(i, j) += sigma * n01(rng);
      }
    }
    nn::GradMap grads;
    const double loss = rnd_loss(params, d_z, cfg, batch, &grads);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_rnd: diverged at step " + std::to_string(step));
    }
    nn::optimizer_step(params, grads, opt);
    epoch_sum += loss;
    if (++epoch_count == steps_per_epoch) {
      report.epoch_means.push_back(epoch_sum / epoch_count);
      epoch_sum = 0.0;
      epoch_count = 0;
    }
  }
  return report;
}

uint64_t prior_checksum(const ParamSet& params) { return nn::param_hash(params, "rnd.prior"); }

}  // namespace scale::rnd
