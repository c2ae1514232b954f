#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scale/gradcheck.hpp"
#include "scale/iql.hpp"

using namespace scale;
using Mat = Eigen::MatrixXd;

namespace {

struct Fixture {
  repr::ReprConfig rcfg;
  iql::IQLConfig cfg;
  nn::ParamSet model;
  iql::IQLBatch batch;

  explicit Fixture(uint64_t seed) {
    rcfg.d_z = 8;
    rcfg.hidden = 24;
    cfg.hidden = 16;
    std::mt19937_64 rng(seed);
    repr::init_representation(model, rcfg, rng);
    iql::init_iql(model, rcfg.d_z, cfg, rng);

    data::CollectSpec spec;
    spec.world_kind = "corridor";
    data::Dataset d = data::collect_episodes(spec, "noisy-waypoint-follower", 3, seed + 1);
    data::SampleConfig scfg;
    scfg.batch_size = 24;
    std::mt19937_64 srng(seed + 2);
    std::vector<data::GoalPair> pos, neg;
    data::sample_batch(d, scfg, srng, pos, neg);
    batch = iql::make_batch(pos, neg);
  }
};

// Finite-difference check restricted to tensors with one of the given
// prefixes; everything else stays fixed inside the closure.
double prefix_grad_check(const nn::ParamSet& full,
                         const std::vector<std::string>& prefixes,
                         const std::function<double(const nn::ParamSet&, nn::GradMap*)>& loss,
                         uint64_t seed) {
  nn::ParamSet sub;
  for (const auto& prefix : prefixes) {
    for (const auto& [name, t] : full.subset(prefix).tensors) sub.tensors[name] = t;
  }
  nn::LossFn fn = [&](const nn::ParamSet& params, nn::GradMap* grads) {
    nn::ParamSet merged = full;
    for (const auto& [name, t] : params.tensors) merged.tensors[name] = t;
    nn::GradMap all;
    const double value = loss(merged, grads ? &all : nullptr);
    if (grads) {
      for (const auto& [name, gmat] : all) {
        if (params.has(name)) (*grads)[name] = gmat;
      }
    }
    return value;
  };
  std::mt19937_64 rng(seed);
  return nn::grad_check(fn, sub, 1e-6, 10, rng);
}

}  // namespace

TEST_CASE("expectile loss worked values and symmetry structure") {
  CHECK(iql::expectile_loss(2.0, 0.5) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(iql::expectile_loss(2.0, 0.7) == doctest::Approx(2.8).epsilon(1e-9));
  CHECK(iql::expectile_loss(-2.0, 0.7) == doctest::Approx(1.2).epsilon(1e-9));
  CHECK(iql::expectile_loss(0.0, 0.7) == 0.0);
  // tau > 0.5 penalizes under-estimation (u > 0) more.
  CHECK(iql::expectile_loss(1.0, 0.9) > iql::expectile_loss(-1.0, 0.9));
  // tau = 0.5 reduces to a symmetric half-quadratic.
  CHECK(iql::expectile_loss(3.0, 0.5) == doctest::Approx(iql::expectile_loss(-3.0, 0.5)));
}

TEST_CASE("relative goal embedding is the latent difference") {
  Eigen::VectorXd zg(3), zt(3);
  zg << 1.0, 2.0, 3.0;
  zt << 0.5, -1.0, 3.0;
  Eigen::VectorXd d = iql::relative_goal_embedding(zg, zt);
  CHECK(d(0) == doctest::Approx(0.5));
  CHECK(d(1) == doctest::Approx(3.0));
  CHECK(d(2) == doctest::Approx(0.0));
  // Antisymmetry and the zero self-goal.
  CHECK((iql::relative_goal_embedding(zt, zg) + d).norm() < 1e-12);
  CHECK(iql::relative_goal_embedding(zg, zg).norm() == 0.0);

  Eigen::VectorXd bad(2);
  CHECK_THROWS(iql::relative_goal_embedding(zg, bad));
}

TEST_CASE("critic loss gradients (terminal batch) match finite differences") {
  Fixture f(101);
  // With every transition terminal the bootstrap target is a constant, so the
  // Q and encoder gradients are fully finite-difference checkable.
  for (auto& dg : f.batch.pos_done_goal) dg = 1;
  const double err = prefix_grad_check(
      f.model, {"q.", "enc."},
      [&](const nn::ParamSet& m, nn::GradMap* g) {
        return iql::iql_loss(m, f.rcfg, f.cfg, f.batch, iql::LossTerm::Q, g);
      },
      5);
  CHECK(err < 1e-4);
}

TEST_CASE("critic loss gradients (bootstrapped batch, Q head only)") {
  Fixture f(102);
  // The bootstrap target depends on V and the encoder but not on the online Q
  // head, so restricting the check to q.* keeps the target constant.
  const double err = prefix_grad_check(
      f.model, {"q."},
      [&](const nn::ParamSet& m, nn::GradMap* g) {
        return iql::iql_loss(m, f.rcfg, f.cfg, f.batch, iql::LossTerm::Q, g);
      },
      6);
  CHECK(err < 1e-4);
}

TEST_CASE("value loss gradients match finite differences") {
  Fixture f(103);
  const double err = prefix_grad_check(
      f.model, {"v."},
      [&](const nn::ParamSet& m, nn::GradMap* g) {
        return iql::iql_loss(m, f.rcfg, f.cfg, f.batch, iql::LossTerm::V, g);
      },
      7);
  CHECK(err < 1e-4);
}

TEST_CASE("policy loss gradients match finite differences") {
  Fixture f(104);
  const double err = prefix_grad_check(
      f.model, {"pi."},
      [&](const nn::ParamSet& m, nn::GradMap* g) {
        return iql::iql_loss(m, f.rcfg, f.cfg, f.batch, iql::LossTerm::Pi, g);
      },
      8);
  CHECK(err < 1e-4);
}

TEST_CASE("policy loss with zeroed heads equals the analytic Gaussian NLL") {
  Fixture f(105);
  // Zero the final layers: advantage weights collapse to exp(0)=1 and the
  // policy mean to 0, so L_pi is the plain (negated) mean log-likelihood.
  for (const char* name : {"qt.w2", "qt.b2", "v.w2", "v.b2", "pi.w2", "pi.b2"}) {
    f.model.at(name).setZero();
  }
  const double loss = iql::iql_loss(f.model, f.rcfg, f.cfg, f.batch, iql::LossTerm::Pi, nullptr);

  const double sigma =
      f.cfg.sigma_min + (f.cfg.sigma_max - f.cfg.sigma_min) / (1.0 + std::exp(0.0));
  double expect = 0.0;
  for (int i = 0; i < f.batch.pos_actions.rows(); ++i) {
    for (int k = 0; k < 2; ++k) {
      const double a = f.batch.pos_actions(i, k);
      expect += -0.5 * (a / sigma) * (a / sigma) - std::log(sigma) -
                0.5 * std::log(2.0 * M_PI);
    }
  }
  expect = -expect / f.batch.pos_actions.rows();
  CHECK(loss == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("value head overfits negative targets: floor and calibrated") {
  Fixture f(106);
  nn::OptimState opt;
  opt.lr = 3e-3;
  opt.weight_decay = 0.0;
  for (int step = 0; step < 4000; ++step) {
    nn::GradMap g;
    iql::iql_loss(f.model, f.rcfg, f.cfg, f.batch, iql::LossTerm::V, &g);
    nn::optimizer_step(f.model, g, opt);
  }
  const Mat zn = repr::encode(f.model, f.rcfg, f.batch.neg_obs);
  const Mat zg = repr::encode(f.model, f.rcfg, f.batch.neg_goal);
  const Eigen::VectorXd v = iql::v_values(f.model, f.rcfg.d_z, f.cfg.hidden, zn, zg);
  for (int i = 0; i < v.size(); ++i) {
    const int k = f.batch.neg_calib_steps[i];
    const double want =
        k < 0 ? f.cfg.v_min
              : std::max(-(1.0 - std::pow(f.cfg.gamma, k)) / (1.0 - f.cfg.gamma),
                         f.cfg.v_min);
    CHECK(std::abs(v(i) - want) < 1.0);
  }
}

TEST_CASE("combined losses report finite diagnostics and reject NaN weights") {
  Fixture f(107);
  iql::LossReport rep = iql::iql_losses(f.model, f.rcfg, f.cfg, f.batch, nullptr);
  CHECK(std::isfinite(rep.l_q));
  CHECK(std::isfinite(rep.l_v));
  CHECK(std::isfinite(rep.l_pi));
  CHECK(std::isfinite(rep.mean_v_pos));
  CHECK(std::isfinite(rep.mean_v_neg));

  f.model.at("q.w0")(0, 0) = std::nan("");
  CHECK_THROWS(iql::iql_losses(f.model, f.rcfg, f.cfg, f.batch, nullptr));
}

TEST_CASE("policy mean respects actuator bounds and is deterministic") {
  Fixture f(108);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01(0, 1);
  Eigen::VectorXd z(f.rcfg.d_z), zg(f.rcfg.d_z);
  for (int i = 0; i < f.rcfg.d_z; ++i) {
    z(i) = n01(rng);
    zg(i) = n01(rng);
  }
  sim::Action a = iql::policy_mean_action(f.model, f.rcfg.d_z, f.cfg, z, zg);
  sim::Action b = iql::policy_mean_action(f.model, f.rcfg.d_z, f.cfg, z, zg);
  CHECK(a.v == b.v);
  CHECK(a.w == b.w);
  CHECK(std::abs(a.v) <= f.cfg.action_v_max);
  CHECK(std::abs(a.w) <= f.cfg.action_w_max);

  Mat zrow = z.transpose(), grow = zg.transpose();
  Mat batch = iql::policy_mean_batch(f.model, f.rcfg.d_z, f.cfg, zrow, grow);
  CHECK(batch(0, 0) == doctest::Approx(a.v));
  CHECK(batch(0, 1) == doctest::Approx(a.w));
}

TEST_CASE("short training run reduces the critic loss on a fixed probe batch") {
  Fixture f(109);
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  data::Dataset d = data::collect_episodes(spec, "noisy-waypoint-follower", 4, 55);
  data::SampleConfig scfg;
  scfg.batch_size = 32;
  iql::IQLConfig tcfg = f.cfg;
  tcfg.steps = 300;

  const double before = iql::iql_losses(f.model, f.rcfg, tcfg, f.batch, nullptr).l_v;
  iql::train_iql(d, f.model, f.rcfg, tcfg, scfg, 77);
  const double after = iql::iql_losses(f.model, f.rcfg, tcfg, f.batch, nullptr).l_v;
  CHECK(after < before);
  CHECK(f.model.all_finite());
}
