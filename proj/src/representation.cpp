#include "scale/representation.hpp"

#include <stdexcept>

namespace scale::repr {

using ad::Graph;
using ad::Var;

nn::MLPSpec encoder_spec(const ReprConfig& cfg) {
  return {"enc", {cfg.obs_dim, cfg.hidden, cfg.hidden, cfg.d_z}, true};
}

nn::MLPSpec decoder_spec(const ReprConfig& cfg) {
  return {"vqdec", {cfg.d_z, cfg.hidden, cfg.hidden, cfg.obs_dim}, false};
}

void init_representation(ParamSet& params, const ReprConfig& cfg, std::mt19937_64& rng) {
  nn::init_mlp(params, encoder_spec(cfg), rng);
  nn::init_mlp(params, decoder_spec(cfg), rng);
  std::normal_distribution<double> n01(0.0, 0.3);
  Mat codebook(cfg.codebook_size, cfg.d_z);
  for (long i = 0; i < codebook.size(); ++i) codebook.data()[i] = n01(rng);
  params.tensors["vq.codebook"] = codebook;
}

Mat encode(const ParamSet& params, const ReprConfig& cfg, const Mat& obs_features) {
  if (obs_features.cols() != cfg.obs_dim) {
    throw std::runtime_error("encode: observation dim mismatch");
  }
  return nn::mlp_forward(params, encoder_spec(cfg), obs_features);
}

Eigen::VectorXd encode_one(const ParamSet& params, const ReprConfig& cfg,
                           const Eigen::VectorXd& obs_features) {
  return encode(params, cfg, obs_features.transpose()).row(0);
}

std::pair<Eigen::VectorXd, int> quantize(const Eigen::VectorXd& z_e, const Mat& codebook) {
  if (codebook.rows() == 0) throw std::runtime_error("quantize: empty codebook");
  int best = 0;
  double best_d = (codebook.row(0).transpose() - z_e).squaredNorm();
  for (int i = 1; i < codebook.rows(); ++i) {
    const double d = (codebook.row(i).transpose() - z_e).squaredNorm();
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = i;
    }
  }
  return {codebook.row(best), best};
}

double vqvae_loss(const ParamSet& params, const ReprConfig& cfg, const Mat& batch,
                  nn::GradMap* grads, double* recon_out) {
  Graph g;
  nn::ParamVars vars = nn::make_vars(g, params);
  Var x = g.leaf(batch);
  Var z_e = nn::mlp_forward(g, vars, encoder_spec(cfg), x);

  const Mat& codebook = params.at("vq.codebook");
  std::vector<int> indices(batch.rows());
  Mat z_q_val(batch.rows(), cfg.d_z);
  for (int i = 0; i < batch.rows(); ++i) {
    auto [entry, idx] = quantize(z_e.val().row(i), codebook);
    indices[i] = idx;
    z_q_val.row(i) = entry;
  }

  // Straight-through estimator: decoder sees z_q, gradients flow to z_e.
  Var z_q = ad::add(z_e, g.leaf(z_q_val - z_e.val()));
  Var recon = ad::mean_sq_dist(nn::mlp_forward(g, vars, decoder_spec(cfg), z_q), x);
  Var selected = ad::gather_rows(vars.at("vq.codebook"), indices);
  Var codebook_loss = ad::mean_sq_dist(selected, ad::stopgrad(z_e));
  Var commit = ad::mean_sq_dist(z_e, ad::stopgrad(selected));
  Var loss = ad::add(recon, ad::add(codebook_loss, ad::scale(commit, cfg.commitment_weight)));

  if (recon_out) *recon_out = recon.scalar();
  if (grads) {
    g.backward(loss);
    nn::collect_grads(g, vars, *grads);
  }
  return loss.scalar();
}

Mat all_features(const data::Dataset& dataset) {
  const double max_range = dataset.meta.sim.max_range;
  size_t total = 0;
  for (const auto& e : dataset.episodes) total += e.obs.size();
  Mat out(total, dataset.meta.obs_dim);
  size_t row = 0;
  for (const auto& e : dataset.episodes) {
    for (const auto& o : e.obs) out.row(row++) = o.features(max_range);
  }
  return out;
}

PretrainReport pretrain_encoder(const data::Dataset& dataset, ParamSet& params,
                                const ReprConfig& cfg, uint64_t seed) {
  if (dataset.episodes.empty()) throw std::runtime_error("pretrain_encoder: empty dataset");
  const Mat features = all_features(dataset);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> pick(0, features.rows() - 1);

  nn::OptimState opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;

  PretrainReport report;
  Mat batch(cfg.batch_size, cfg.obs_dim);
  for (int step = 0; step < cfg.pretrain_steps; ++step) {
    for (int i = 0; i < cfg.batch_size; ++i) batch.row(i) = features.row(pick(rng));
    nn::GradMap grads;
    double recon = 0.0;
    const double loss = vqvae_loss(params, cfg, batch, &grads, &recon);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("pretrain_encoder: loss diverged at step " +
                               std::to_string(step));
    }
    nn::optimizer_step(params, grads, opt);
    if (step % 100 == 0) report.loss_curve.emplace_back(step, loss);
  }

  // Final reconstruction error on a deterministic subset.
  const long n_eval = std::min<long>(512, features.rows());
  Mat eval = features.topRows(n_eval);
  double recon = 0.0;
  vqvae_loss(params, cfg, eval, nullptr, &recon);
  report.final_recon = recon;
  return report;
}

}  // namespace scale::repr
