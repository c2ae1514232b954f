#include "scale/iql.hpp"

#include <fstream>
#include <stdexcept>

namespace scale::iql {

using ad::Graph;
using ad::Var;

double expectile_loss(double u, double tau) {
  const double w = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
  return w * u * u;
}

Eigen::VectorXd relative_goal_embedding(const Eigen::VectorXd& z_g,
                                        const Eigen::VectorXd& z_t) {
  if (z_g.size() != z_t.size()) {
    throw std::runtime_error("relative_goal_embedding: dim mismatch");
  }
  return z_g - z_t;
}

nn::MLPSpec q_spec(int d_z, int hidden, const std::string& prefix) {
  return {prefix, {2 * d_z + 2, hidden, hidden, 1}, false};
}

nn::MLPSpec v_spec(int d_z, int hidden) { return {"v", {2 * d_z, hidden, hidden, 1}, false}; }

nn::MLPSpec pi_spec(int d_z, int hidden) { return {"pi", {2 * d_z, hidden, hidden, 2}, false}; }

void init_iql(ParamSet& params, int d_z, const IQLConfig& cfg, std::mt19937_64& rng) {
  nn::init_mlp(params, q_spec(d_z, cfg.hidden), rng);
  nn::init_mlp(params, v_spec(d_z, cfg.hidden), rng);
  nn::init_mlp(params, pi_spec(d_z, cfg.hidden), rng);
  params.tensors["pi.logstd"] = Mat::Zero(1, 2);
  // Target network starts as a copy of the online Q.
  for (const auto& [name, t] : params.subset("q.").tensors) {
    params.tensors["qt." + name.substr(2)] = t;
  }
}

IQLBatch make_batch(const std::vector<data::GoalPair>& positives,
                    const std::vector<data::GoalPair>& negatives) {
  IQLBatch b;
  const int np = static_cast<int>(positives.size());
  const int nn_ = static_cast<int>(negatives.size());
  if (np == 0) throw std::runtime_error("make_batch: empty positive batch");
  const int dim = static_cast<int>(positives[0].obs_f.size());
  b.pos_obs.resize(np, dim);
  b.pos_next.resize(np, dim);
  b.pos_goal.resize(np, dim);
  b.pos_actions.resize(np, 2);
  b.pos_rewards.resize(np);
  b.pos_done_goal.resize(np);
  for (int i = 0; i < np; ++i) {
    const auto& gp = positives[i];
    b.pos_obs.row(i) = gp.obs_f;
    b.pos_next.row(i) = gp.next_obs_f;
    b.pos_goal.row(i) = gp.goal_f;
    b.pos_actions(i, 0) = gp.action.v;
    b.pos_actions(i, 1) = gp.action.w;
    b.pos_rewards(i) = gp.relabeled_reward;
    b.pos_done_goal[i] = gp.done_goal ? 1 : 0;
  }
  b.neg_obs.resize(nn_, dim);
  b.neg_goal.resize(nn_, dim);
  b.neg_calib_steps.resize(nn_);
  for (int i = 0; i < nn_; ++i) {
    b.neg_obs.row(i) = negatives[i].obs_f;
    b.neg_goal.row(i) = negatives[i].goal_f;
    b.neg_calib_steps[i] = negatives[i].calib_steps;
  }
  return b;
}

namespace {

Mat pair_input(const Mat& z, const Mat& z_goal) {
  Mat in(z.rows(), 2 * z.cols());
  in << z, (z_goal - z);
  return in;
}

Eigen::VectorXd plain_v(const ParamSet& model, int d_z, int hidden, const Mat& z,
                        const Mat& z_goal) {
  return nn::mlp_forward(model, v_spec(d_z, hidden), pair_input(z, z_goal)).col(0);
}

Eigen::VectorXd plain_q_target(const ParamSet& model, int d_z, int hidden, const Mat& z,
                               const Mat& actions, const Mat& z_goal) {
  Mat in(z.rows(), 2 * d_z + 2);
  in << z, actions, (z_goal - z);
  return nn::mlp_forward(model, q_spec(d_z, hidden, "qt"), in).col(0);
}

struct Latents {
  Mat z, z_next, z_goal;        // positives
  Mat zn, zn_goal;              // negatives
};

Latents plain_latents(const ParamSet& model, const repr::ReprConfig& rcfg,
                      const IQLBatch& b) {
  Latents l;
  l.z = repr::encode(model, rcfg, b.pos_obs);
  l.z_next = repr::encode(model, rcfg, b.pos_next);
  l.z_goal = repr::encode(model, rcfg, b.pos_goal);
  if (b.neg_obs.rows() > 0) {
    l.zn = repr::encode(model, rcfg, b.neg_obs);
    l.zn_goal = repr::encode(model, rcfg, b.neg_goal);
  }
  return l;
}

double loss_q(const ParamSet& model, const repr::ReprConfig& rcfg, const IQLConfig& cfg,
              const IQLBatch& b, const Latents& lat, nn::GradMap* grads) {
  const int d_z = rcfg.d_z;
  // Bootstrapped target, fully stop-gradient: r + gamma * V(z', dz'_g),
  // zero bootstrap when the transition reached the goal.
  Eigen::VectorXd v_next = plain_v(model, d_z, cfg.hidden, lat.z_next, lat.z_goal);
  Eigen::VectorXd target = b.pos_rewards;
  for (int i = 0; i < target.size(); ++i) {
    if (!b.pos_done_goal[i]) target(i) += cfg.gamma * v_next(i);
  }

  Graph g;
  nn::ParamVars vars = nn::make_vars(g, model);
  Var x = g.leaf(b.pos_obs);
  Var xg = g.leaf(b.pos_goal);
  Var z = nn::mlp_forward(g, vars, repr::encoder_spec(rcfg), x);
  Var zg = nn::mlp_forward(g, vars, repr::encoder_spec(rcfg), xg);
  Var qin = ad::concat_cols(z, ad::concat_cols(g.leaf(b.pos_actions), ad::sub(zg, z)));
  Var q = nn::mlp_forward(g, vars, q_spec(d_z, cfg.hidden), qin);
  Var loss = ad::mean_all(ad::square(ad::sub(g.leaf(target), q)));
  if (grads) {
    g.backward(loss);
    nn::GradMap all;
    nn::collect_grads(g, vars, all);
    for (auto& [name, grad] : all) {
      if (name.rfind("q.", 0) == 0 || name.rfind("enc.", 0) == 0) {
        auto [it, inserted] = grads->try_emplace(name, grad);
        if (!inserted) it->second += grad;
      }
    }
  }
  return loss.scalar();
}

double loss_v(const ParamSet& model, const repr::ReprConfig& rcfg, const IQLConfig& cfg,
              const IQLBatch& b, const Latents& lat, nn::GradMap* grads,
              LossReport* report) {
  const int d_z = rcfg.d_z;
  Eigen::VectorXd q_hat =
      plain_q_target(model, d_z, cfg.hidden, lat.z, b.pos_actions, lat.z_goal);

  Graph g;
  nn::ParamVars vars = nn::make_vars(g, model, "v.");
  Var v_pos = nn::mlp_forward(g, vars, v_spec(d_z, cfg.hidden),
                              g.leaf(pair_input(lat.z, lat.z_goal)));
  Var u = ad::sub(g.leaf(Mat(q_hat)), v_pos);
  // Expectile weights depend only on the sign of u; constants in backward.
  Mat w(u.val().rows(), 1);
  for (int i = 0; i < w.rows(); ++i) {
    w(i, 0) = std::abs(cfg.tau - (u.val()(i, 0) < 0.0 ? 1.0 : 0.0));
  }
  Var loss = ad::mean_all(ad::mul(g.leaf(w), ad::square(u)));
  double v_neg_mean = 0.0;
  if (b.neg_obs.rows() > 0) {
    Var v_neg = nn::mlp_forward(g, vars, v_spec(d_z, cfg.hidden),
                                g.leaf(pair_input(lat.zn, lat.zn_goal)));
    // Plain negatives regress to the floor; pose-calibrated pairs to the
    // discounted sum of k rewards of -1, still floored at v_min.
    Mat tgt(b.neg_obs.rows(), 1);
    for (int i = 0; i < tgt.rows(); ++i) {
      const int k = b.neg_calib_steps.empty() ? -1 : b.neg_calib_steps[i];
      tgt(i, 0) = k < 0 ? cfg.v_min
                        : std::max(-(1.0 - std::pow(cfg.gamma, k)) / (1.0 - cfg.gamma),
                                   cfg.v_min);
    }
    Var neg_loss = ad::mean_all(ad::square(ad::sub(v_neg, g.leaf(tgt))));
    loss = ad::add(loss, neg_loss);
    v_neg_mean = v_neg.val().mean();
  }
  if (report) {
    report->mean_v_pos = v_pos.val().mean();
    report->mean_v_neg = v_neg_mean;
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
  return loss.scalar();
}

double loss_pi(const ParamSet& model, const repr::ReprConfig& rcfg, const IQLConfig& cfg,
               const IQLBatch& b, const Latents& lat, nn::GradMap* grads) {
  const int d_z = rcfg.d_z;
  Eigen::VectorXd q_hat =
      plain_q_target(model, d_z, cfg.hidden, lat.z, b.pos_actions, lat.z_goal);
  Eigen::VectorXd v = plain_v(model, d_z, cfg.hidden, lat.z, lat.z_goal);
  Mat w(q_hat.size(), 1);
  for (int i = 0; i < q_hat.size(); ++i) {
    w(i, 0) = std::min(std::exp(cfg.beta_awr * (q_hat(i) - v(i))), cfg.adv_clip);
  }

  Graph g;
  nn::ParamVars vars = nn::make_vars(g, model, "pi.");
  Var raw = nn::mlp_forward(g, vars, pi_spec(d_z, cfg.hidden),
                            g.leaf(pair_input(lat.z, lat.z_goal)));
  Eigen::RowVector2d bounds(cfg.action_v_max, cfg.action_w_max);
  Var mean = ad::mul_rowvec(ad::tanh_(raw), g.leaf(bounds));
  // sigma = sigma_min + (sigma_max - sigma_min) * sigmoid(logstd)
  Var sigma = ad::add_scalar(
      ad::scale(ad::sigmoid_(vars.at("pi.logstd")), cfg.sigma_max - cfg.sigma_min),
      cfg.sigma_min);
  Var diff = ad::sub(g.leaf(b.pos_actions), mean);
  Var zscore = ad::mul_rowvec(diff, ad::reciprocal(sigma));
  Var logp = ad::add_scalar(
      ad::add_rowvec(ad::scale(ad::square(zscore), -0.5), ad::scale(ad::log_(sigma), -1.0)),
      -0.5 * std::log(2.0 * M_PI));
  Var weighted = ad::mul(g.leaf(w), ad::rowsum(logp));
  Var loss = ad::scale(ad::mean_all(weighted), -1.0);
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

}  // namespace

double iql_loss(const ParamSet& model, const repr::ReprConfig& rcfg, const IQLConfig& cfg,
                const IQLBatch& batch, LossTerm term, nn::GradMap* grads) {
  const Latents lat = plain_latents(model, rcfg, batch);
  switch (term) {
    case LossTerm::Q:
      return loss_q(model, rcfg, cfg, batch, lat, grads);
    case LossTerm::V:
      return loss_v(model, rcfg, cfg, batch, lat, grads, nullptr);
    case LossTerm::Pi:
      return loss_pi(model, rcfg, cfg, batch, lat, grads);
  }
  throw std::runtime_error("iql_loss: bad term");
}

LossReport iql_losses(const ParamSet& model, const repr::ReprConfig& rcfg,
                      const IQLConfig& cfg, const IQLBatch& batch, nn::GradMap* grads) {
  const Latents lat = plain_latents(model, rcfg, batch);
  LossReport report;
  report.l_q = loss_q(model, rcfg, cfg, batch, lat, grads);
  report.l_v = loss_v(model, rcfg, cfg, batch, lat, grads, &report);
  report.l_pi = loss_pi(model, rcfg, cfg, batch, lat, grads);
  if (!std::isfinite(report.l_q) || !std::isfinite(report.l_v) ||
      !std::isfinite(report.l_pi)) {
    throw std::runtime_error("iql_losses: non-finite loss (L_Q=" + std::to_string(report.l_q) +
                             " L_V=" + std::to_string(report.l_v) +
                             " L_pi=" + std::to_string(report.l_pi) + ")");
  }
  return report;
}

TrainReport train_iql(const data::Dataset& dataset, ParamSet& model,
                      const repr::ReprConfig& rcfg, const IQLConfig& cfg,
                      const data::SampleConfig& scfg, uint64_t seed,
                      const std::string& loss_csv_path) {
  std::mt19937_64 rng(seed);
  nn::OptimState opt_q, opt_v, opt_pi;
  for (auto* o : {&opt_q, &opt_v, &opt_pi}) {
    o->lr = cfg.lr;
    o->weight_decay = cfg.weight_decay;
  }

  std::ofstream csv;
  if (!loss_csv_path.empty()) {
    csv.open(loss_csv_path);
    csv << "step,l_q,l_v,l_pi,mean_v_pos,mean_v_neg\n";
  }

  TrainReport report;
  std::vector<data::GoalPair> pos, neg;
  for (int step = 0; step < cfg.steps; ++step) {
    data::sample_batch(dataset, scfg, rng, pos, neg);
    const IQLBatch batch = make_batch(pos, neg);
    const Latents lat = plain_latents(model, rcfg, batch);

    LossReport lr_;
    nn::GradMap gq, gv, gpi;
    lr_.l_q = loss_q(model, rcfg, cfg, batch, lat, &gq);
    lr_.l_v = loss_v(model, rcfg, cfg, batch, lat, &gv, &lr_);
    lr_.l_pi = loss_pi(model, rcfg, cfg, batch, lat, &gpi);
    if (!std::isfinite(lr_.l_q + lr_.l_v + lr_.l_pi)) {
      throw std::runtime_error("train_iql: diverged at step " + std::to_string(step));
    }
    nn::optimizer_step(model, gq, opt_q);
    nn::optimizer_step(model, gv, opt_v);
    nn::optimizer_step(model, gpi, opt_pi);
    nn::soft_update(model, "qt.", model, "q.", cfg.rho);

    if (step % 100 == 0 || step + 1 == cfg.steps) {
      report.curve.push_back(lr_);
      if (csv.is_open()) {
        csv << step << "," << lr_.l_q << "," << lr_.l_v << "," << lr_.l_pi << ","
            << lr_.mean_v_pos << "," << lr_.mean_v_neg << "\n";
      }
    }
  }
  return report;
}

Eigen::VectorXd v_values(const ParamSet& model, int d_z, int hidden, const Mat& z,
                         const Mat& z_goal) {
  return plain_v(model, d_z, hidden, z, z_goal);
}

double v_value(const ParamSet& model, int d_z, int hidden, const Eigen::VectorXd& z,
               const Eigen::VectorXd& z_goal) {
  Mat zm = z.transpose();
  Mat gm = z_goal.transpose();
  return plain_v(model, d_z, hidden, zm, gm)(0);
}

Mat policy_mean_batch(const ParamSet& model, int d_z, const IQLConfig& cfg, const Mat& z,
                      const Mat& z_goal) {
  Mat raw = nn::mlp_forward(model, pi_spec(d_z, cfg.hidden), pair_input(z, z_goal));
  Mat out(raw.rows(), 2);
  out.col(0) = cfg.action_v_max * raw.col(0).array().tanh();
  out.col(1) = cfg.action_w_max * raw.col(1).array().tanh();
  return out;
}

sim::Action policy_mean_action(const ParamSet& model, int d_z, const IQLConfig& cfg,
                               const Eigen::VectorXd& z, const Eigen::VectorXd& z_goal) {
  Mat in(1, 2 * d_z);
  in << z.transpose(), (z_goal - z).transpose();
  Mat raw = nn::mlp_forward(model, pi_spec(d_z, cfg.hidden), in);
  sim::Action a;
  a.v = cfg.action_v_max * std::tanh(raw(0, 0));
  a.w = cfg.action_w_max * std::tanh(raw(0, 1));
  return a;
}

sim::Action policy_q_action(const ParamSet& model, int d_z, const IQLConfig& cfg,
                            const Eigen::VectorXd& z, const Eigen::VectorXd& z_goal,
                            int k, std::mt19937_64& rng) {
  const sim::Action mean = policy_mean_action(model, d_z, cfg, z, z_goal);
  if (k <= 1) return mean;
  const Mat& logstd = model.tensors.at("pi.logstd");
  auto sig = [&](int i) {
    return cfg.sigma_min +
           (cfg.sigma_max - cfg.sigma_min) / (1.0 + std::exp(-logstd(0, i)));
  };
  const double sv = sig(0), sw = sig(1);
  std::normal_distribution<double> n01;
  Mat actions(k, 2);
  actions(0, 0) = mean.v;
  actions(0, 1) = mean.w;
  for (int i = 1; i < k; ++i) {
    actions(i, 0) = std::clamp(mean.v + sv * n01(rng), -cfg.action_v_max, cfg.action_v_max);
    actions(i, 1) = std::clamp(mean.w + sw * n01(rng), -cfg.action_w_max, cfg.action_w_max);
  }
  Mat in(k, 2 * d_z + 2);
  for (int i = 0; i < k; ++i) {
    in.row(i) << z.transpose(), actions.row(i), (z_goal - z).transpose();
  }
  const Eigen::VectorXd q = nn::mlp_forward(model, q_spec(d_z, cfg.hidden, "q"), in).col(0);
  int best = 0;
  q.maxCoeff(&best);
  return {actions(best, 0), actions(best, 1)};
}

}  // namespace scale::iql
