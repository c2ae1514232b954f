#include "scale/affordance.hpp"

#include <stdexcept>

namespace scale::afford {

using ad::Graph;
using ad::Var;

namespace {

nn::GRUSpec gru_spec(int d_z, const AffordConfig& cfg) {
  return {"aff.gru", d_z, cfg.d_h};
}

nn::MLPSpec qenc_spec(int d_z, const AffordConfig& cfg) {
  return {"aff.qenc", {cfg.feature_dim(d_z) + d_z, cfg.hidden, 2 * cfg.d_u}, false};
}

nn::MLPSpec dec_spec(int d_z, const AffordConfig& cfg) {
  return {"aff.dec", {cfg.feature_dim(d_z) + cfg.d_u, cfg.hidden, cfg.hidden, d_z}, false};
}

}  // namespace

void init_affordance(ParamSet& params, int d_z, const AffordConfig& cfg,
                     std::mt19937_64& rng) {
  if (cfg.use_rnn) nn::init_gru(params, gru_spec(d_z, cfg), rng);
  nn::init_mlp(params, qenc_spec(d_z, cfg), rng);
  nn::init_mlp(params, dec_spec(d_z, cfg), rng);
  const int d_f = cfg.feature_dim(d_z);
  nn::init_mlp(params, {"aff.film.gamma", {d_f, cfg.d_u}, false}, rng);
  nn::init_mlp(params, {"aff.film.delta", {d_f, cfg.d_u}, false}, rng);
}

Eigen::VectorXd film_modulate(const ParamSet& params, const Eigen::VectorXd& h,
                              const Eigen::VectorXd& u) {
  const Mat& wg = params.at("aff.film.gamma.w0");
  const Mat& wd = params.at("aff.film.delta.w0");
  if (h.size() != wg.rows()) throw std::runtime_error("film_modulate: dim mismatch");
  Eigen::VectorXd gamma = wg.transpose() * h + params.at("aff.film.gamma.b0").row(0).transpose();
  Eigen::VectorXd delta = wd.transpose() * h + params.at("aff.film.delta.b0").row(0).transpose();
  return gamma.cwiseProduct(u) + delta;
}

Eigen::VectorXd temporal_encode(const ParamSet& params, const AffordConfig& cfg, int d_z,
                                const std::vector<Eigen::VectorXd>& z_history) {
  if (z_history.empty()) throw std::runtime_error("temporal_encode: empty history");
  if (!cfg.use_rnn) return z_history.back();
  const nn::GRUSpec spec = gru_spec(d_z, cfg);
  Mat h = Mat::Zero(1, cfg.d_h);
  const int pad = cfg.history - static_cast<int>(z_history.size());
  for (int i = 0; i < std::max(pad, 0); ++i) {
    h = nn::gru_step(params, spec, h, Mat(z_history.front().transpose()));
  }
  for (const auto& z : z_history) {
    h = nn::gru_step(params, spec, h, Mat(z.transpose()));
  }
  return h.row(0);
}

Mat temporal_step(const ParamSet& params, const AffordConfig& cfg, int d_z, const Mat& h,
                  const Mat& z) {
  if (!cfg.use_rnn) return z;
  return nn::gru_step(params, gru_spec(d_z, cfg), h, z);
}

Mat decode(const ParamSet& params, const AffordConfig& cfg, int d_z, const Mat& h,
           const Mat& u) {
  const Mat& wg = params.at("aff.film.gamma.w0");
  const Mat& wd = params.at("aff.film.delta.w0");
  Mat gamma = (h * wg).rowwise() + Eigen::RowVectorXd(params.at("aff.film.gamma.b0").row(0));
  Mat delta = (h * wd).rowwise() + Eigen::RowVectorXd(params.at("aff.film.delta.b0").row(0));
  Mat f = gamma.cwiseProduct(u) + delta;
  Mat in(h.rows(), h.cols() + f.cols());
  in << h, f;
  return nn::mlp_forward(params, dec_spec(d_z, cfg), in);
}

AffordBatch make_afford_batch(const data::Dataset& dataset, const ParamSet& model,
                              const repr::ReprConfig& rcfg, const AffordConfig& cfg,
                              int batch_size, int d_max, std::mt19937_64& rng) {
  if (dataset.episodes.empty()) throw std::runtime_error("make_afford_batch: empty dataset");
  const double max_range = dataset.meta.sim.max_range;
  std::uniform_int_distribution<size_t> pick_ep(0, dataset.episodes.size() - 1);

  std::vector<std::vector<Eigen::VectorXd>> histories;
  Mat targets(batch_size, rcfg.obs_dim);
  int guard = 0;
  while (static_cast<int>(histories.size()) < batch_size) {
    if (++guard > batch_size * 1000) {
      throw std::runtime_error("make_afford_batch: episodes too short");
    }
    const auto& e = dataset.episodes[pick_ep(rng)];
    if (e.length() < 2) continue;
    std::uniform_int_distribution<size_t> pick_t(0, e.length() - 1);
    const size_t t = pick_t(rng);
    const int gap = data::sample_truncated_geometric_gap(0.2, d_max, rng);
    if (t + gap > e.length()) continue;
    std::vector<Eigen::VectorXd> hist;
    const int start = std::max<int>(0, static_cast<int>(t) - cfg.history + 1);
    for (int i = start; i <= static_cast<int>(t); ++i) {
      hist.push_back(e.obs[i].features(max_range));
    }
    targets.row(histories.size()) = e.obs[t + gap].features(max_range);
    histories.push_back(std::move(hist));
  }

  // Encode once (stop-gradient latents) and assemble padded history tensors.
  AffordBatch batch;
  batch.z_target = repr::encode(model, rcfg, targets);
  batch.history.assign(cfg.history, Mat(batch_size, rcfg.d_z));
  for (int i = 0; i < batch_size; ++i) {
    const auto& hist = histories[i];
    Mat z = repr::encode(model, rcfg, [&] {
      Mat m(hist.size(), rcfg.obs_dim);
      for (size_t k = 0; k < hist.size(); ++k) m.row(k) = hist[k];
      return m;
    }());
    for (int k = 0; k < cfg.history; ++k) {
      const int src = std::max(0, static_cast<int>(hist.size()) - cfg.history + k);
      batch.history[k].row(i) = z.row(std::min<int>(src, z.rows() - 1));
    }
  }
  return batch;
}

AffordLoss affordance_loss(const ParamSet& params, const AffordConfig& cfg, int d_z,
                           const AffordBatch& batch, const Mat& noise, nn::GradMap* grads) {
  const int n = static_cast<int>(batch.z_target.rows());
  Graph g;
  nn::ParamVars vars = nn::make_vars(g, params, "aff.");

  // Temporal feature from the (stop-gradient) latent history.
  Var h = g.leaf(Mat::Zero(n, cfg.feature_dim(d_z)));
  if (cfg.use_rnn) {
    const nn::GRUSpec spec = gru_spec(d_z, cfg);
    for (const Mat& z : batch.history) {
      h = nn::gru_step(g, vars, spec, h, g.leaf(z));
    }
  } else {
    h = g.leaf(batch.history.back());
  }

  Var zp = g.leaf(batch.z_target);
  Var enc_out = nn::mlp_forward(g, vars, qenc_spec(d_z, cfg), ad::concat_cols(h, zp));
  Var mu = ad::slice_cols(enc_out, 0, cfg.d_u);
  Var sigma = ad::exp_(ad::slice_cols(enc_out, cfg.d_u, cfg.d_u));
  Var u = ad::add(mu, ad::mul(sigma, g.leaf(noise)));

  Var gamma = nn::mlp_forward(g, vars, {"aff.film.gamma", {cfg.feature_dim(d_z), cfg.d_u}}, h);
  Var delta = nn::mlp_forward(g, vars, {"aff.film.delta", {cfg.feature_dim(d_z), cfg.d_u}}, h);
  Var f = ad::add(ad::mul(gamma, u), delta);
  Var pred = nn::mlp_forward(g, vars, dec_spec(d_z, cfg), ad::concat_cols(h, f));

  Var recon = ad::mean_sq_dist(pred, zp);
  // Closed-form KL(N(mu, sigma^2) || N(0, I)) summed over dims, mean over batch.
  Var kl_terms = ad::scale(
      ad::add_scalar(ad::sub(ad::add(ad::square(mu), ad::square(sigma)),
                             ad::scale(ad::log_(ad::square(sigma)), 1.0)),
                     -1.0),
      0.5);
  Var kl = ad::mean_all(ad::rowsum(kl_terms));
  Var loss = ad::add(recon, ad::scale(kl, cfg.beta_vib));

  AffordLoss out;
  out.total = loss.scalar();
  out.recon = recon.scalar();
  out.kl = kl.scalar();
  if (!std::isfinite(out.total)) {
    throw std::runtime_error("affordance_loss: non-finite loss");
  }
  if (grads) {
    g.backward(loss);
    nn::GradMap all;
    nn::collect_grads(g, vars, all);
    for (auto& [name, grad] : all) {
      auto [it, inserted] = grads->try_emplace(name, grad);
      if (!inserted) it->second += grad;
    }
  }
  return out;
}

std::vector<Mat> rollout_latent_batch(const ParamSet& params, const AffordConfig& cfg,
                                      int d_z, Mat h, const std::vector<Mat>& codes,
                                      Mat* final_h) {
  std::vector<Mat> states;
  states.reserve(codes.size());
  for (const Mat& u : codes) {
    Mat z_hat = decode(params, cfg, d_z, h, u);
    h = temporal_step(params, cfg, d_z, h, z_hat);
    states.push_back(std::move(z_hat));
  }
  if (final_h) *final_h = h;
  return states;
}

LatentRollout rollout_latent(const ParamSet& params, const AffordConfig& cfg, int d_z,
                             const Eigen::VectorXd& h,
                             const std::vector<Eigen::VectorXd>& codes) {
  std::vector<Mat> code_mats;
  for (const auto& u : codes) code_mats.push_back(u.transpose());
  const std::vector<Mat> states = rollout_latent_batch(params, cfg, d_z, h.transpose(),
                                                       code_mats);
  LatentRollout out;
  out.codes = codes;
  for (const auto& s : states) out.states.push_back(s.row(0));
  for (const auto& u : codes) out.prior_logp.push_back(standard_normal_logpdf(u));
  return out;
}

double estimate_plan_yaw(const ParamSet& model, const iql::IQLConfig& icfg, int d_z,
                         const Eigen::VectorXd& z_t,
                         const std::vector<Eigen::VectorXd>& states, double dt) {
  double yaw = 0.0;
  Eigen::VectorXd prev = z_t;
  for (const auto& z_next : states) {
    const sim::Action a = iql::policy_mean_action(model, d_z, icfg, prev, z_next);
    yaw += a.w * dt;
    prev = z_next;
  }
  return yaw;
}

TrainReport train_affordance(const data::Dataset& dataset, ParamSet& model,
                             const repr::ReprConfig& rcfg, const AffordConfig& cfg,
                             int batch_size, int d_max, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  nn::OptimState opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;

  TrainReport report;
  for (int step = 0; step < cfg.steps; ++step) {
    AffordBatch batch = make_afford_batch(dataset, model, rcfg, cfg, batch_size, d_max, rng);
    Mat noise(batch_size, cfg.d_u);
    for (long i = 0; i < noise.size(); ++i) noise.data()[i] = n01(rng);
    nn::GradMap grads;
    const AffordLoss l = affordance_loss(model, cfg, rcfg.d_z, batch, noise, &grads);
    nn::optimizer_step(model, grads, opt);
    if (step % 100 == 0 || step + 1 == cfg.steps) report.curve.push_back(l);
  }
  return report;
}

double standard_normal_logpdf(const Eigen::VectorXd& u) {
  return -0.5 * u.squaredNorm() - 0.5 * u.size() * std::log(2.0 * M_PI);
}

}  // namespace scale::afford
