#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "scale/gradcheck.hpp"
#include "scale/representation.hpp"

using namespace scale;
using Mat = Eigen::MatrixXd;

namespace {

nn::ParamSet fresh_params(const repr::ReprConfig& cfg, uint64_t seed) {
  nn::ParamSet p;
  std::mt19937_64 rng(seed);
  repr::init_representation(p, cfg, rng);
  return p;
}

Mat random_obs(int n, int dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat m(n, dim);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace

TEST_CASE("encode is deterministic and shape-checked") {
  repr::ReprConfig cfg;
  cfg.obs_dim = 10;
  cfg.d_z = 6;
  cfg.hidden = 16;
  nn::ParamSet p = fresh_params(cfg, 1);
  const Mat obs = random_obs(4, 10, 2);
  const Mat z1 = repr::encode(p, cfg, obs);
  const Mat z2 = repr::encode(p, cfg, obs);
  CHECK(z1.rows() == 4);
  CHECK(z1.cols() == 6);
  CHECK((z1 - z2).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd bad = Eigen::VectorXd::Zero(7);
  CHECK_THROWS(repr::encode_one(p, cfg, bad));
}

TEST_CASE("quantize: exact match, nearest entry, tie to lowest index") {
  Mat codebook(4, 1);
  codebook << 0.0, 10.0, -1.0, 1.0;
  {
    Eigen::VectorXd z(1);
    z << 10.0;
    auto [entry, idx] = repr::quantize(z, codebook);
    CHECK(idx == 1);
    CHECK(entry(0) == 10.0);
  }
  {
    Eigen::VectorXd z(1);
    z << 1.2;
    auto [entry, idx] = repr::quantize(z, codebook);
    CHECK(idx == 3);
  }
  {
    // Equidistant between entries 2 (-1) and 3 (+1): lowest index wins.
    Eigen::VectorXd z(1);
    z << 0.5;
    Mat cb(2, 1);
    cb << -1.0, 2.0;  // distances 1.5 / 1.5
    auto [entry, idx] = repr::quantize(z, cb);
    CHECK(idx == 0);
  }
}

TEST_CASE("vqvae loss: commitment weight 0 removes the commitment term") {
  repr::ReprConfig cfg;
  cfg.obs_dim = 8;
  cfg.d_z = 4;
  cfg.hidden = 12;
  cfg.codebook_size = 6;
  nn::ParamSet p = fresh_params(cfg, 3);
  const Mat batch = random_obs(5, 8, 4);

  repr::ReprConfig no_commit = cfg;
  no_commit.commitment_weight = 0.0;
  double recon_a = 0.0, recon_b = 0.0;
  const double with_commit = repr::vqvae_loss(p, cfg, batch, nullptr, &recon_a);
  const double without = repr::vqvae_loss(p, no_commit, batch, nullptr, &recon_b);
  CHECK(recon_a == doctest::Approx(recon_b));
  CHECK(with_commit > without);  // commitment adds a nonnegative term
}

TEST_CASE("vqvae decoder gradients match finite differences") {
  // The straight-through estimator makes encoder gradients deliberately differ
  // from the true (zero) derivative through the hard assignment, so only the
  // smooth decoder path is finite-difference checkable.
  repr::ReprConfig cfg;
  cfg.obs_dim = 6;
  cfg.d_z = 3;
  cfg.hidden = 10;
  cfg.codebook_size = 5;
  const nn::ParamSet full = fresh_params(cfg, 5);
  const Mat batch = random_obs(4, 6, 6);

  nn::ParamSet dec_only = full.subset("vqdec.");
  nn::LossFn fn = [&](const nn::ParamSet& params, nn::GradMap* grads) {
    nn::ParamSet merged = full;
    for (const auto& [name, t] : params.tensors) merged.tensors[name] = t;
    nn::GradMap all;
    const double loss = repr::vqvae_loss(merged, cfg, batch, grads ? &all : nullptr, nullptr);
    if (grads) {
      for (const auto& [name, gmat] : all) {
        if (params.has(name)) (*grads)[name] = gmat;
      }
    }
    return loss;
  };
  std::mt19937_64 rng(7);
  CHECK(nn::grad_check(fn, dec_only, 1e-6, 6, rng) < 1e-4);
}

TEST_CASE("straight-through gradient reaches the encoder") {
  repr::ReprConfig cfg;
  cfg.obs_dim = 6;
  cfg.d_z = 3;
  cfg.hidden = 10;
  cfg.codebook_size = 5;
  nn::ParamSet p = fresh_params(cfg, 8);
  const Mat batch = random_obs(4, 6, 9);
  nn::GradMap grads;
  repr::vqvae_loss(p, cfg, batch, &grads, nullptr);
  CHECK(grads.count("enc.w0") == 1);
  CHECK(grads.at("enc.w0").cwiseAbs().maxCoeff() > 0.0);
  CHECK(grads.count("vq.codebook") == 1);
  CHECK(grads.at("vq.codebook").cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("pretraining a single repeated observation drives reconstruction to ~0") {
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  data::Dataset d = data::collect_episodes(spec, "noisy-waypoint-follower", 1, 8);
  // Collapse the episode to one repeated frame.
  for (auto& obs : d.episodes[0].obs) obs = d.episodes[0].obs[0];

  repr::ReprConfig cfg;
  cfg.pretrain_steps = 800;
  cfg.batch_size = 16;
  nn::ParamSet p = fresh_params(cfg, 9);
  repr::PretrainReport rep = repr::pretrain_encoder(d, p, cfg, 10);
  CHECK(rep.final_recon < 1e-3);
  CHECK(p.all_finite());
}

TEST_CASE("pretraining is deterministic given the seed") {
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  data::Dataset d = data::collect_episodes(spec, "noisy-waypoint-follower", 2, 11);
  repr::ReprConfig cfg;
  cfg.pretrain_steps = 60;
  auto run = [&] {
    nn::ParamSet p = fresh_params(cfg, 12);
    repr::pretrain_encoder(d, p, cfg, 13);
    return nn::param_hash(p);
  };
  CHECK(run() == run());
}

TEST_CASE("representation is distribution-sensitive after pretraining") {
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  data::Dataset d = data::collect_episodes(spec, "noisy-waypoint-follower", 12, 14);
  repr::ReprConfig cfg;
  cfg.pretrain_steps = 1200;
  nn::ParamSet p = fresh_params(cfg, 15);
  repr::pretrain_encoder(d, p, cfg, 16);

  // Base-world held-out frames vs novel-obstacle frames at matched poses.
  sim::World base = sim::make_world("corridor");
  sim::World novel = sim::make_world("corridor-novel");
  auto recon_err = [&](const sim::World& w, double x) {
    sim::Observation o = sim::observe({x, 3.0, 0.0}, w, 32, 12.0);
    Mat row = o.features(12.0).transpose();
    double recon = 0.0;
    repr::vqvae_loss(p, cfg, row, nullptr, &recon);
    return recon;
  };
  double base_err = 0.0, novel_err = 0.0;
  // Poses looking at the novel pillars (x just behind each pillar site).
  for (double x : {12.0, 24.0, 36.0, 48.0}) {
    base_err += recon_err(base, x);
    novel_err += recon_err(novel, x);
  }
  CHECK(base_err < novel_err);
}

TEST_CASE("all_features stacks every frame in episode order") {
  data::CollectSpec spec;
  spec.world_kind = "corridor";
  data::Dataset d = data::collect_episodes(spec, "noisy-waypoint-follower", 2, 17);
  Mat f = repr::all_features(d);
  size_t frames = 0;
  for (const auto& e : d.episodes) frames += e.obs.size();
  CHECK(static_cast<size_t>(f.rows()) == frames);
  CHECK(f.cols() == 65);
  CHECK((f.row(0).transpose() -
         d.episodes[0].obs[0].features(d.meta.sim.max_range)).norm() == 0.0);
}
