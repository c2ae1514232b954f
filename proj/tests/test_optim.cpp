#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "scale/gradcheck.hpp"
#include "scale/optim.hpp"

using namespace scale;
using Mat = Eigen::MatrixXd;

TEST_CASE("adamw: zero gradient and zero decay is a fixed point") {
  nn::ParamSet p;
  p.tensors["w"] = Mat::Constant(2, 2, 1.5);
  nn::OptimState opt;
  opt.weight_decay = 0.0;
  nn::GradMap g{{"w", Mat::Zero(2, 2)}};
  nn::optimizer_step(p, g, opt);
  CHECK((p.at("w").array() - 1.5).abs().maxCoeff() < 1e-12);
  CHECK(opt.step == 1);
}

TEST_CASE("adamw: positive gradient decreases the parameter") {
  nn::ParamSet p;
  p.tensors["w"] = Mat::Constant(1, 1, 2.0);
  nn::OptimState opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.0;
  nn::GradMap g{{"w", Mat::Constant(1, 1, 1.0)}};
  nn::optimizer_step(p, g, opt);
  CHECK(p.at("w")(0, 0) < 2.0);
  // First AdamW step moves by ~lr regardless of gradient magnitude.
  CHECK(p.at("w")(0, 0) == doctest::Approx(2.0 - 0.1).epsilon(1e-3));
}

TEST_CASE("adamw: decoupled weight decay shrinks even with zero gradient") {
  nn::ParamSet p;
  p.tensors["w"] = Mat::Constant(1, 1, 2.0);
  nn::OptimState opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.5;
  nn::GradMap g{{"w", Mat::Zero(1, 1)}};
  nn::optimizer_step(p, g, opt);
  CHECK(p.at("w")(0, 0) == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
}

TEST_CASE("adamw: identical runs produce identical trajectories") {
  auto run = [] {
    nn::ParamSet p;
    p.tensors["w"] = Mat::Constant(3, 3, 0.7);
    nn::OptimState opt;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01(0, 1);
    for (int i = 0; i < 50; ++i) {
      Mat g(3, 3);
      for (long k = 0; k < g.size(); ++k) g.data()[k] = n01(rng);
      nn::GradMap gm{{"w", g}};
      nn::optimizer_step(p, gm, opt);
    }
    return p;
  };
  CHECK(nn::param_hash(run()) == nn::param_hash(run()));
}

TEST_CASE("adamw: non-finite gradient names the offending tensor") {
  nn::ParamSet p;
  p.tensors["bad.tensor"] = Mat::Zero(1, 1);
  nn::OptimState opt;
  nn::GradMap g{{"bad.tensor", Mat::Constant(1, 1, std::nan(""))}};
  CHECK_THROWS_WITH_AS(nn::optimizer_step(p, g, opt), doctest::Contains("bad.tensor"),
                       std::runtime_error);
}

TEST_CASE("soft_update endpoint and midpoint behavior") {
  nn::ParamSet target, online;
  target.tensors["qt.w"] = Mat::Zero(2, 2);
  online.tensors["q.w"] = Mat::Constant(2, 2, 2.0);

  nn::ParamSet t1 = target;
  nn::soft_update(t1, "qt.", online, "q.", 1.0);
  CHECK((t1.at("qt.w").array() - 2.0).abs().maxCoeff() < 1e-12);

  nn::ParamSet t0 = target;
  nn::soft_update(t0, "qt.", online, "q.", 0.0);
  CHECK(t0.at("qt.w").cwiseAbs().maxCoeff() < 1e-12);

  nn::ParamSet th = target;
  nn::soft_update(th, "qt.", online, "q.", 0.5);
  CHECK(th.at("qt.w")(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("grad_check: quadratic loss to 1e-6") {
  nn::ParamSet p;
  p.tensors["p"] = Mat::Constant(1, 1, 3.0);
  nn::LossFn fn = [](const nn::ParamSet& params, nn::GradMap* grads) {
    const double v = params.at("p")(0, 0);
    if (grads) (*grads)["p"] = Mat::Constant(1, 1, v);
    return 0.5 * v * v;
  };
  std::mt19937_64 rng(1);
  CHECK(nn::grad_check(fn, p, 1e-5, 4, rng) < 1e-6);
}

TEST_CASE("grad_check: constant loss has zero gradient") {
  nn::ParamSet p;
  p.tensors["p"] = Mat::Constant(2, 2, 1.0);
  nn::LossFn fn = [](const nn::ParamSet& params, nn::GradMap* grads) {
    if (grads) (*grads)["p"] = Mat::Zero(2, 2);
    return 7.0;
  };
  std::mt19937_64 rng(2);
  CHECK(nn::grad_check(fn, p, 1e-5, 4, rng) < 1e-9);
}

TEST_CASE("grad_check flags a wrong analytic gradient") {
  nn::ParamSet p;
  p.tensors["p"] = Mat::Constant(1, 1, 3.0);
  nn::LossFn wrong = [](const nn::ParamSet& params, nn::GradMap* grads) {
    const double v = params.at("p")(0, 0);
    if (grads) (*grads)["p"] = Mat::Constant(1, 1, 2.0 * v);  // claims d/dv v^2... for 0.5 v^2
    return 0.5 * v * v;
  };
  std::mt19937_64 rng(3);
  CHECK(nn::grad_check(wrong, p, 1e-5, 4, rng) > 0.1);
}

TEST_CASE("checkpoint round-trip preserves tensors and seed") {
  nn::ParamSet p;
  p.init_seed = 77;
  p.tensors["a.w"] = Mat::Random(3, 4);
  p.tensors["b.w"] = Mat::Random(1, 2);
  const std::string path = "/tmp/scale_test_ckpt.bin";
  nn::save_checkpoint(p, path);
  nn::ParamSet r = nn::load_checkpoint(path);
  CHECK(r.init_seed == 77);
  CHECK(nn::param_hash(r) == nn::param_hash(p));
  CHECK((r.at("a.w") - p.at("a.w")).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("param_hash differs across prefixes and changes with content") {
  nn::ParamSet p;
  p.tensors["a.w"] = Mat::Constant(2, 2, 1.0);
  p.tensors["b.w"] = Mat::Constant(2, 2, 2.0);
  const uint64_t h1 = nn::param_hash(p, "a.");
  const uint64_t h2 = nn::param_hash(p, "b.");
  CHECK(h1 != h2);
  p.tensors["a.w"](0, 0) = 1.0 + 1e-12;
  CHECK(nn::param_hash(p, "a.") != h1);
}
