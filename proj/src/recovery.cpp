#include "scale/recovery.hpp"

#include <stdexcept>

namespace scale::recovery {

double score_plan(const Models& m, const Eigen::VectorXd& z_t,
                  const std::optional<Eigen::VectorXd>& z_g,
                  const afford::LatentRollout& rollout, const CostWeights& weights,
                  bool use_rnd) {
  const size_t k = rollout.states.size();
  if (k == 0) throw std::runtime_error("score_plan: empty rollout");
  if (rollout.values.size() != k || rollout.prior_logp.size() != k) {
    throw std::runtime_error("score_plan: rollout missing values or prior densities");
  }
  const Eigen::VectorXd& z_k = rollout.states.back();
  double cost = use_rnd ? rnd::novelty_score(m.params, m.rcfg.d_z, m.ncfg, z_k) : 0.0;
  if (z_g) cost += weights.lambda_goal * (z_k - *z_g).squaredNorm();
  for (size_t i = 0; i < k; ++i) {
    cost += weights.eta_reach * (weights.v_loc - rollout.values[i]);
    cost += weights.eta_prob * (-rollout.prior_logp[i]);
  }
  cost += weights.eta_aggr * (weights.delta_theta_min - rollout.yaw);
  return cost;
}

CandidateSet generate_candidates(const Models& m, const Eigen::VectorXd& z_t,
                                 const Mat& h_t, int n, int k,
                                 const std::vector<Eigen::VectorXd>& mean_codes,
                                 std::mt19937_64& rng) {
  if (n < 1 || k < 1) throw std::runtime_error("generate_candidates: n, k must be >= 1");
  const int d_u = m.acfg.d_u;
  std::normal_distribution<double> n01(0.0, 1.0);

  CandidateSet set;
  set.codes.resize(k);
  for (int step = 0; step < k; ++step) {
    Mat u(n, d_u);
    for (long i = 0; i < u.size(); ++i) u.data()[i] = n01(rng);
    if (!mean_codes.empty()) u.rowwise() += Eigen::RowVectorXd(mean_codes[step].transpose());
    set.codes[step] = std::move(u);
  }

  Mat h = h_t.replicate(n, 1);
  set.states = afford::rollout_latent_batch(m.params, m.acfg, m.rcfg.d_z, h, set.codes);

  set.values.resize(n, k);
  set.prior_logp.resize(n, k);
  set.yaw = Eigen::VectorXd::Zero(n);
  Mat prev = z_t.transpose().replicate(n, 1);
  for (int step = 0; step < k; ++step) {
    const Mat& cur = set.states[step];
    set.values.col(step) = iql::v_values(m.params, m.rcfg.d_z, m.icfg.hidden, prev, cur);
    const Mat actions = iql::policy_mean_batch(m.params, m.rcfg.d_z, m.icfg, prev, cur);
    set.yaw += actions.col(1) * m.dt;
    for (int i = 0; i < n; ++i) {
      set.prior_logp(i, step) = afford::standard_normal_logpdf(set.codes[step].row(i));
    }
    prev = cur;
  }
  return set;
}

void score_candidates(const Models& m, const Eigen::VectorXd& z_t,
                      const std::optional<Eigen::VectorXd>& z_g, CandidateSet& set,
                      const CostWeights& weights, const Ablations& abl) {
  const int n = static_cast<int>(set.values.rows());
  const int k = static_cast<int>(set.values.cols());
  const Mat& z_last = set.states.back();

  Eigen::VectorXd novelty = Eigen::VectorXd::Zero(n);
  if (abl.use_rnd) novelty = rnd::novelty_scores(m.params, m.rcfg.d_z, m.ncfg, z_last);

  set.costs.resize(n);
  for (int i = 0; i < n; ++i) {
    double cost = novelty(i);
    if (z_g) {
      cost += weights.lambda_goal * (z_last.row(i).transpose() - *z_g).squaredNorm();
    }
    for (int step = 0; step < k; ++step) {
      cost += weights.eta_reach * (weights.v_loc - set.values(i, step));
      cost += weights.eta_prob * (-set.prior_logp(i, step));
    }
    cost += weights.eta_aggr * (weights.delta_theta_min - set.yaw(i));
    set.costs(i) = cost;
  }
}

namespace {

PlanCandidate extract(const CandidateSet& set, int idx) {
  PlanCandidate cand;
  const int k = static_cast<int>(set.codes.size());
  for (int step = 0; step < k; ++step) {
    cand.rollout.codes.push_back(set.codes[step].row(idx));
    cand.rollout.states.push_back(set.states[step].row(idx));
    cand.rollout.prior_logp.push_back(set.prior_logp(idx, step));
    cand.rollout.values.push_back(set.values(idx, step));
  }
  cand.rollout.yaw = set.yaw(idx);
  cand.cost = set.costs(idx);
  return cand;
}

}  // namespace

PlanCandidate mppi_refine(const Models& m, const Eigen::VectorXd& z_t, const Mat& h_t,
                          const std::optional<Eigen::VectorXd>& z_g,
                          const CostWeights& weights, const MppiConfig& cfg,
                          const Ablations& abl, std::mt19937_64& rng) {
  if (cfg.iters < 1) throw std::runtime_error("mppi_refine: iters must be >= 1");
  std::vector<Eigen::VectorXd> mean(cfg.k_steps, Eigen::VectorXd::Zero(m.acfg.d_u));
  PlanCandidate best;
  bool have_best = false;

  for (int iter = 0; iter < cfg.iters; ++iter) {
    CandidateSet set =
        generate_candidates(m, z_t, h_t, cfg.n_candidates, cfg.k_steps, mean, rng);
    score_candidates(m, z_t, z_g, set, weights, abl);

    int argmin = 0;
    set.costs.minCoeff(&argmin);
    if (!have_best || set.costs(argmin) < best.cost) {
      best = extract(set, argmin);
      have_best = true;
    }

    // Softmax(-cost / temperature)-weighted mean update.
    const double c_min = set.costs.minCoeff();
    Eigen::VectorXd w = (-(set.costs.array() - c_min) / cfg.temperature).exp();
    w /= w.sum();
    for (int step = 0; step < cfg.k_steps; ++step) {
      mean[step] = set.codes[step].transpose() * w;
    }
  }
  return best;
}

RecoverStep recover_step(const Models& m, const Eigen::VectorXd& z_t, const Mat& h_t,
                         const std::optional<Eigen::VectorXd>& z_g,
                         const CostWeights& weights, const MppiConfig& cfg,
                         const Ablations& abl, std::mt19937_64& rng) {
  RecoverStep out;
  out.plan = mppi_refine(m, z_t, h_t, z_g, weights, cfg, abl, rng);
  const Eigen::VectorXd& subgoal = out.plan.rollout.states.front();
  out.action = iql::policy_mean_action(m.params, m.rcfg.d_z, m.icfg, z_t, subgoal);
  return out;
}

}  // namespace scale::recovery
