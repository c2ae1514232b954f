#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scale/affordance.hpp"
#include "scale/gradcheck.hpp"

using namespace scale;
using Mat = Eigen::MatrixXd;

namespace {

afford::AffordConfig small_cfg(bool use_rnn = true) {
  afford::AffordConfig cfg;
  cfg.d_u = 2;
  cfg.d_h = 8;
  cfg.history = 3;
  cfg.k_steps = 3;
  cfg.hidden = 12;
  cfg.use_rnn = use_rnn;
  return cfg;
}

constexpr int kDz = 6;

nn::ParamSet small_model(const afford::AffordConfig& cfg, uint64_t seed) {
  nn::ParamSet p;
  std::mt19937_64 rng(seed);
  afford::init_affordance(p, kDz, cfg, rng);
  return p;
}

Mat randn(int r, int c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Mat m(r, c);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

// History of `n` identical latent frames plus a target, without a dataset.
afford::AffordBatch toy_batch(const afford::AffordConfig& cfg, int n, uint64_t seed) {
  afford::AffordBatch b;
  b.z_target = randn(n, kDz, seed);
  b.history.assign(cfg.history, randn(n, kDz, seed + 1));
  return b;
}

}  // namespace

TEST_CASE("film modulation: constant gamma/delta worked example") {
  // gamma(h) = (2, 2), delta(h) = (1, 1) via zero weights and fixed biases.
  nn::ParamSet p;
  const int d_f = 4;
  p.tensors["aff.film.gamma.w0"] = Mat::Zero(d_f, 2);
  p.tensors["aff.film.gamma.b0"] = Mat::Constant(1, 2, 2.0);
  p.tensors["aff.film.delta.w0"] = Mat::Zero(d_f, 2);
  p.tensors["aff.film.delta.b0"] = Mat::Constant(1, 2, 1.0);

  Eigen::VectorXd h = Eigen::VectorXd::Ones(d_f);
  Eigen::VectorXd u(2);
  u << 1.0, -1.0;
  Eigen::VectorXd f = afford::film_modulate(p, h, u);
  CHECK(f(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f(1) == doctest::Approx(-1.0).epsilon(1e-12));

  // Affine in u for fixed h: f(au) = gamma .* (au) + delta.
  Eigen::VectorXd f2 = afford::film_modulate(p, h, 2.0 * u);
  CHECK((f2 - (2.0 * (f - Eigen::VectorXd::Ones(2)) + Eigen::VectorXd::Ones(2))).norm() <
        1e-12);

  Eigen::VectorXd bad = Eigen::VectorXd::Zero(d_f + 1);
  CHECK_THROWS(afford::film_modulate(p, bad, u));
}

TEST_CASE("film modulation depends on the conditioning feature through the weights") {
  afford::AffordConfig cfg = small_cfg();
  nn::ParamSet p = small_model(cfg, 2);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(cfg.d_u);
  Eigen::VectorXd h1 = Eigen::VectorXd::Zero(cfg.d_h);
  Eigen::VectorXd h2 = Eigen::VectorXd::Ones(cfg.d_h);
  CHECK((afford::film_modulate(p, h1, u) - afford::film_modulate(p, h2, u)).norm() > 1e-6);
}

TEST_CASE("vib kl term: closed form on a hand-set posterior") {
  afford::AffordConfig cfg = small_cfg(false);  // h := z, no GRU
  cfg.d_u = 1;
  nn::ParamSet p = small_model(cfg, 3);
  // Posterior head outputs (mu, log sigma) = (1, 0) for every input.
  p.at("aff.qenc.w0").setZero();
  p.at("aff.qenc.b0").setZero();
  p.at("aff.qenc.w1").setZero();
  p.at("aff.qenc.b1") << 1.0, 0.0;

  afford::AffordBatch b = toy_batch(cfg, 5, 4);
  const Mat noise = Mat::Zero(5, 1);
  afford::AffordLoss l = afford::affordance_loss(p, cfg, kDz, b, noise, nullptr);
  // KL(N(1,1) || N(0,1)) = 0.5 (mu^2 + sigma^2 - 1 - log sigma^2) = 0.5.
  CHECK(l.kl == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(l.total == doctest::Approx(l.recon + cfg.beta_vib * l.kl).epsilon(1e-9));

  // Posterior equal to the prior: KL vanishes.
  p.at("aff.qenc.b1").setZero();
  afford::AffordLoss l0 = afford::affordance_loss(p, cfg, kDz, b, noise, nullptr);
  CHECK(l0.kl == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("beta_vib = 0 removes the information bottleneck penalty") {
  afford::AffordConfig cfg = small_cfg();
  cfg.beta_vib = 0.0;
  nn::ParamSet p = small_model(cfg, 5);
  afford::AffordBatch b = toy_batch(cfg, 4, 6);
  const Mat noise = randn(4, cfg.d_u, 7);
  afford::AffordLoss l = afford::affordance_loss(p, cfg, kDz, b, noise, nullptr);
  CHECK(l.total == doctest::Approx(l.recon).epsilon(1e-12));
  CHECK(l.kl >= 0.0);
}

TEST_CASE("affordance loss gradients match finite differences") {
  afford::AffordConfig cfg = small_cfg();
  nn::ParamSet p = small_model(cfg, 8);
  afford::AffordBatch b = toy_batch(cfg, 4, 9);
  const Mat noise = randn(4, cfg.d_u, 10);

  nn::LossFn fn = [&](const nn::ParamSet& params, nn::GradMap* grads) {
    return afford::affordance_loss(params, cfg, kDz, b, noise, grads).total;
  };
  std::mt19937_64 rng(11);
  CHECK(nn::grad_check(fn, p, 1e-6, 10, rng) < 1e-4);
}

TEST_CASE("temporal encoding: pass-through without the rnn, padding with it") {
  afford::AffordConfig cfg = small_cfg(false);
  nn::ParamSet p = small_model(cfg, 12);
  Eigen::VectorXd z = randn(kDz, 1, 13).col(0);
  CHECK((afford::temporal_encode(p, cfg, kDz, {Eigen::VectorXd::Zero(kDz), z}) - z).norm() ==
        0.0);

  afford::AffordConfig rcfg = small_cfg(true);
  nn::ParamSet pr = small_model(rcfg, 14);
  // A single frame is left-padded by repetition, so it matches the explicit
  // repeated history of length H.
  std::vector<Eigen::VectorXd> rep(rcfg.history, z);
  CHECK((afford::temporal_encode(pr, rcfg, kDz, {z}) -
         afford::temporal_encode(pr, rcfg, kDz, rep)).norm() < 1e-12);
  CHECK_THROWS(afford::temporal_encode(pr, rcfg, kDz, {}));
}

TEST_CASE("temporal step: identity without rnn, bounded with it") {
  afford::AffordConfig no = small_cfg(false);
  nn::ParamSet p0 = small_model(no, 15);
  Mat z = randn(3, kDz, 16);
  CHECK((afford::temporal_step(p0, no, kDz, Mat::Zero(3, kDz), z) - z).norm() == 0.0);

  afford::AffordConfig yes = small_cfg(true);
  nn::ParamSet p1 = small_model(yes, 17);
  Mat h = Mat::Zero(3, yes.d_h);
  for (int t = 0; t < 50; ++t) {
    h = afford::temporal_step(p1, yes, kDz, h, randn(3, kDz, 100 + t));
    CHECK(h.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("latent rollout: one step decodes, two steps compose through the rnn") {
  afford::AffordConfig cfg = small_cfg();
  nn::ParamSet p = small_model(cfg, 18);
  Eigen::VectorXd h0 = randn(cfg.d_h, 1, 19).col(0);
  Eigen::VectorXd u0 = randn(cfg.d_u, 1, 20).col(0);
  Eigen::VectorXd u1 = randn(cfg.d_u, 1, 21).col(0);

  afford::LatentRollout r1 = afford::rollout_latent(p, cfg, kDz, h0, {u0});
  REQUIRE(r1.states.size() == 1);
  Mat direct = afford::decode(p, cfg, kDz, h0.transpose(), u0.transpose());
  CHECK((r1.states[0].transpose() - direct).cwiseAbs().maxCoeff() < 1e-12);

  afford::LatentRollout r2 = afford::rollout_latent(p, cfg, kDz, h0, {u0, u1});
  REQUIRE(r2.states.size() == 2);
  CHECK((r2.states[0] - r1.states[0]).norm() == 0.0);
  Mat h1 = afford::temporal_step(p, cfg, kDz, h0.transpose(), direct);
  Mat step2 = afford::decode(p, cfg, kDz, h1, u1.transpose());
  CHECK((r2.states[1].transpose() - step2).cwiseAbs().maxCoeff() < 1e-12);

  // Prior log-density recorded per code.
  CHECK(r2.prior_logp[0] == doctest::Approx(afford::standard_normal_logpdf(u0)));
  CHECK(r2.prior_logp[1] == doctest::Approx(afford::standard_normal_logpdf(u1)));
}

TEST_CASE("latent rollout is deterministic and matches its batched form") {
  afford::AffordConfig cfg = small_cfg();
  nn::ParamSet p = small_model(cfg, 22);
  Eigen::VectorXd h0 = randn(cfg.d_h, 1, 23).col(0);
  std::vector<Eigen::VectorXd> codes;
  for (int k = 0; k < cfg.k_steps; ++k) codes.push_back(randn(cfg.d_u, 1, 30 + k).col(0));

  afford::LatentRollout a = afford::rollout_latent(p, cfg, kDz, h0, codes);
  afford::LatentRollout b = afford::rollout_latent(p, cfg, kDz, h0, codes);
  for (size_t k = 0; k < a.states.size(); ++k) CHECK((a.states[k] - b.states[k]).norm() == 0.0);

  std::vector<Mat> code_mats;
  for (const auto& u : codes) code_mats.push_back(u.transpose());
  Mat final_h;
  std::vector<Mat> batched =
      afford::rollout_latent_batch(p, cfg, kDz, h0.transpose(), code_mats, &final_h);
  for (size_t k = 0; k < batched.size(); ++k) {
    CHECK((batched[k].row(0).transpose() - a.states[k]).norm() < 1e-12);
  }
  CHECK(final_h.rows() == 1);
  CHECK(final_h.cols() == cfg.d_h);
}

TEST_CASE("standard normal log-density worked values") {
  Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
  CHECK(afford::standard_normal_logpdf(zero1) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(afford::standard_normal_logpdf(one) ==
        doctest::Approx(-0.5 - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
  // Monotone decreasing in the norm.
  Eigen::VectorXd big(1);
  big << 3.0;
  CHECK(afford::standard_normal_logpdf(big) < afford::standard_normal_logpdf(one));
}

TEST_CASE("plan yaw: zeroed policy head integrates to zero") {
  afford::AffordConfig cfg = small_cfg();
  iql::IQLConfig icfg;
  icfg.hidden = 16;
  nn::ParamSet p = small_model(cfg, 24);
  std::mt19937_64 rng(25);
  iql::init_iql(p, kDz, icfg, rng);
  std::vector<Eigen::VectorXd> states = {randn(kDz, 1, 26).col(0), randn(kDz, 1, 27).col(0)};
  Eigen::VectorXd z0 = randn(kDz, 1, 28).col(0);

  const double yaw = afford::estimate_plan_yaw(p, icfg, kDz, z0, states, 0.25);
  CHECK(std::isfinite(yaw));
  // Sum of per-step turn-rate commands times dt: bounded by K * w_max * dt.
  CHECK(std::abs(yaw) <= states.size() * icfg.action_w_max * 0.25 + 1e-12);

  p.at("pi.w2").setZero();
  p.at("pi.b2").setZero();
  CHECK(afford::estimate_plan_yaw(p, icfg, kDz, z0, states, 0.25) == doctest::Approx(0.0));
}

TEST_CASE("afford batch assembly: shapes, padding and determinism") {
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  data::Dataset d = data::collect_episodes(spec, "noisy-waypoint-follower", 3, 40);
  repr::ReprConfig rcfg;
  rcfg.d_z = kDz;
  rcfg.hidden = 16;
  afford::AffordConfig cfg = small_cfg();
  nn::ParamSet p;
  std::mt19937_64 irng(41);
  repr::init_representation(p, rcfg, irng);

  std::mt19937_64 r1(42), r2(42);
  afford::AffordBatch a = afford::make_afford_batch(d, p, rcfg, cfg, 16, 10, r1);
  afford::AffordBatch b = afford::make_afford_batch(d, p, rcfg, cfg, 16, 10, r2);
  CHECK(a.z_target.rows() == 16);
  CHECK(a.z_target.cols() == kDz);
  REQUIRE(a.history.size() == static_cast<size_t>(cfg.history));
  for (const Mat& h : a.history) {
    CHECK(h.rows() == 16);
    CHECK(h.cols() == kDz);
  }
  CHECK((a.z_target - b.z_target).norm() == 0.0);
  for (size_t k = 0; k < a.history.size(); ++k) {
    CHECK((a.history[k] - b.history[k]).norm() == 0.0);
  }
}

TEST_CASE("short affordance training run reduces the objective") {
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  data::Dataset d = data::collect_episodes(spec, "noisy-waypoint-follower", 4, 50);
  repr::ReprConfig rcfg;
  rcfg.d_z = kDz;
  rcfg.hidden = 16;
  afford::AffordConfig cfg = small_cfg();
  cfg.steps = 400;
  nn::ParamSet p;
  std::mt19937_64 irng(51);
  repr::init_representation(p, rcfg, irng);
  afford::init_affordance(p, rcfg.d_z, cfg, irng);

  afford::TrainReport rep = afford::train_affordance(d, p, rcfg, cfg, 32, 10, 52);
  REQUIRE(rep.curve.size() >= 2);
  CHECK(rep.curve.back().total < rep.curve.front().total);
  CHECK(p.all_finite());
}
