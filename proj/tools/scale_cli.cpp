#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scale/config.hpp"
#include "scale/runtime.hpp"

namespace fs = std::filesystem;
using namespace scale;

namespace {

constexpr const char* kVersion = "0.3.0";

cfg::RunConfig load_or_default(const std::string& config_path, uint64_t seed,
                               bool seed_given) {
  cfg::RunConfig rc;
  if (!config_path.empty()) rc = cfg::load_config(config_path);
  if (seed_given) rc.seed = seed;
  return rc;
}

data::Dataset load_merged(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::runtime_error("no --dataset given");
  data::Dataset d = data::read_dataset(paths[0]);
  for (size_t i = 1; i < paths.size(); ++i) d = data::merge(d, data::read_dataset(paths[i]));
  return d;
}

int cmd_collect(const std::string& world, const std::string& policy, int episodes,
                uint64_t seed, const std::string& out, double xmin, double xmax,
                int timeout) {
  data::CollectSpec spec;
  spec.world_kind = world;
  spec.region_xmin = xmin;
  spec.region_xmax = xmax;
  spec.timeout_steps = timeout;
  data::Dataset d = data::collect_episodes(spec, policy, episodes, seed);
  data::write_dataset(d, out);
  size_t steps = d.total_steps();
  std::printf("collected %zu episodes (%zu steps) in %s -> %s\n", d.episodes.size(),
              steps, world.c_str(), out.c_str());
  return 0;
}

int cmd_train(const std::vector<std::string>& datasets, const std::string& checkpoint,
              int stage, bool all, const std::string& config_path, uint64_t seed,
              bool seed_given, const std::string& loss_csv, bool no_rnn_variant,
              const std::string& no_rnn_out) {
  cfg::RunConfig rc = load_or_default(config_path, seed, seed_given);
  data::Dataset d = load_merged(datasets);

  nn::ParamSet model;
  if (fs::exists(checkpoint)) model = nn::load_checkpoint(checkpoint);

  if (all) {
    runtime::train_all(d, model, rc, loss_csv);
  } else if (stage == 1) {
    runtime::train_stage1(d, model, rc);
  } else if (stage == 2) {
    runtime::train_stage2(d, model, rc, loss_csv);
  } else if (stage == 3) {
    runtime::train_stage3(d, model, rc);
  } else {
    throw std::runtime_error("train: pass --all or --stage 1|2|3");
  }
  nn::save_checkpoint(model, checkpoint);
  std::printf("checkpoint %s (hash %016llx)\n", checkpoint.c_str(),
              static_cast<unsigned long long>(nn::param_hash(model)));

  if (no_rnn_variant) {
    nn::ParamSet variant = runtime::make_no_rnn_variant(d, model, rc);
    const std::string out = no_rnn_out.empty() ? checkpoint + ".no-rnn" : no_rnn_out;
    nn::save_checkpoint(variant, out);
    std::printf("no-rnn affordance checkpoint %s\n", out.c_str());
  }
  return 0;
}

int cmd_build_map(const std::string& dataset, const std::string& checkpoint,
                  const std::string& out, int stride, double edge_threshold,
                  double max_edge_pose_dist, const std::string& config_path,
                  uint64_t seed, bool seed_given) {
  cfg::RunConfig rc = load_or_default(config_path, seed, seed_given);
  if (stride > 0) rc.topo.node_stride = stride;
  if (std::isfinite(edge_threshold)) rc.topo.edge_threshold = edge_threshold;
  if (std::isfinite(max_edge_pose_dist)) rc.topo.max_edge_pose_dist = max_edge_pose_dist;
  data::Dataset d = data::read_dataset(dataset);
  nn::ParamSet model = nn::load_checkpoint(checkpoint);
  topo::TopoMap map = topo::build_map(d, model, rc.repr, rc.iql, rc.topo);
  topo::save_map(map, out);
  std::printf("map %s: %zu nodes, %zu edges\n", out.c_str(), map.nodes.size(),
              map.edges.size());
  return 0;
}

int cmd_eval(const std::string& suite, int trials, const std::string& checkpoint,
             const std::string& no_rnn_checkpoint, const std::string& corridor_map_path,
             const std::string& rooms_map_path, const std::string& out,
             const std::string& config_path, uint64_t seed, bool seed_given) {
  cfg::RunConfig rc = load_or_default(config_path, seed, seed_given);
  nn::ParamSet model = nn::load_checkpoint(checkpoint);
  nn::ParamSet no_rnn;
  runtime::EvalModels models;
  models.model = &model;
  if (!no_rnn_checkpoint.empty()) {
    no_rnn = nn::load_checkpoint(no_rnn_checkpoint);
    models.model_no_rnn = &no_rnn;
  }
  topo::TopoMap cmap, rmap;
  if (!corridor_map_path.empty()) {
    cmap = topo::load_map(corridor_map_path, topo::map_model_hash(model));
    models.corridor_map = &cmap;
  }
  if (!rooms_map_path.empty()) {
    rmap = topo::load_map(rooms_map_path, topo::map_model_hash(model));
    models.rooms_map = &rmap;
  }
  std::vector<runtime::EvalRow> rows = runtime::run_suite(suite, trials, models, rc, rc.seed);
  std::string csv = runtime::rows_to_csv(rows);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("eval: cannot write " + out);
    f << csv;
  }
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_navigate(const std::string& scenario, const std::string& checkpoint,
                 const std::string& map_path, const std::string& config_path,
                 uint64_t seed, bool seed_given) {
  cfg::RunConfig rc = load_or_default(config_path, seed, seed_given);
  nn::ParamSet model = nn::load_checkpoint(checkpoint);
  topo::TopoMap map = topo::load_map(map_path, topo::map_model_hash(model));

  runtime::NavTask task;
  runtime::FaultSpec fault;
  if (scenario.rfind("case-", 0) == 0) {
    task = runtime::make_case_task(scenario, rc.seed, &fault);
  } else {
    sim::ScenarioInstance inst =
        sim::reset_scenario(sim::ScenarioRegistry::builtin(), scenario, rc.seed);
    task = {inst.world, inst.start, inst.goal, inst.has_goal};
  }
  runtime::EpisodeResult r = runtime::navigate(task, map, model, rc, rc.seed, fault);
  std::printf(
      "scenario=%s success=%d steps=%d end=%s distance=%.3f recoveries=%d\n",
      scenario.c_str(), r.success ? 1 : 0, r.steps, r.end_reason.c_str(),
      r.distance_traveled, r.recovery_invocations);
  return 0;
}

int cmd_recover_demo(const std::string& scenario, const std::string& checkpoint,
                     const std::string& map_path, const std::string& out,
                     const std::string& config_path, uint64_t seed, bool seed_given) {
  cfg::RunConfig rc = load_or_default(config_path, seed, seed_given);
  nn::ParamSet model = nn::load_checkpoint(checkpoint);
  topo::TopoMap map = topo::load_map(map_path, topo::map_model_hash(model));

  runtime::NavTask task;
  runtime::FaultSpec fault;
  if (scenario.rfind("case-", 0) == 0) {
    task = runtime::make_case_task(scenario, rc.seed, &fault);
  } else {
    sim::ScenarioInstance inst =
        sim::reset_scenario(sim::ScenarioRegistry::builtin(), scenario, rc.seed);
    task = {inst.world, inst.start, inst.goal, inst.has_goal};
  }

  std::vector<runtime::TraceRow> trace;
  runtime::EpisodeResult r = runtime::navigate(task, map, model, rc, rc.seed, fault, &trace);

  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("recover-demo: cannot write " + out);
  f << "step,novelty,localize_value,lost,plan_cost\n";
  char buf[160];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%d,%.6f\n", row.step, row.novelty,
                  row.localize_value, row.lost ? 1 : 0, row.plan_cost);
    f << buf;
  }
  std::printf("trace %s: %zu rows, success=%d end=%s recoveries=%d\n", out.c_str(),
              trace.size(), r.success ? 1 : 0, r.end_reason.c_str(),
              r.recovery_invocations);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-space navigation with self-correcting localization"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON run configuration");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "override the config seed");

  // collect
  auto* collect = app.add_subcommand("collect", "roll out a scripted data policy");
  std::string c_world = "corridor", c_policy = "noisy-waypoint-follower", c_out;
  int c_eps = 100, c_timeout = 400;
  double c_xmin = -1e9, c_xmax = 1e9;
  collect->add_option("--world", c_world, "world kind");
  collect->add_option("--policy", c_policy, "scripted policy");
  collect->add_option("--episodes", c_eps, "episode count");
  collect->add_option("--region-xmin", c_xmin, "collection region lower x");
  collect->add_option("--region-xmax", c_xmax, "collection region upper x");
  collect->add_option("--timeout", c_timeout, "per-episode step cap");
  collect->add_option("--out", c_out, "output dataset path")->required();

  // train
  auto* train = app.add_subcommand("train", "run one or all training stages");
  std::vector<std::string> t_datasets;
  std::string t_ckpt, t_csv, t_no_rnn_out;
  int t_stage = 0;
  bool t_all = false, t_no_rnn = false;
  train->add_option("--dataset", t_datasets, "dataset path (repeatable; merged)")
      ->required();
  train->add_option("--checkpoint", t_ckpt, "checkpoint path (resumed when present)")
      ->required();
  train->add_option("--stage", t_stage, "stage to run (1|2|3)");
  train->add_flag("--all", t_all, "run every stage");
  train->add_option("--loss-csv", t_csv, "stage-2 loss curve output");
  train->add_flag("--no-rnn-variant", t_no_rnn,
                  "also train the affordance head without the temporal GRU");
  train->add_option("--no-rnn-out", t_no_rnn_out, "no-rnn checkpoint path");

  // build-map
  auto* bmap = app.add_subcommand("build-map", "build a topological map from a dataset");
  std::string m_dataset, m_ckpt, m_out;
  bmap->add_option("--dataset", m_dataset, "dataset path")->required();
  bmap->add_option("--checkpoint", m_ckpt, "model checkpoint")->required();
  bmap->add_option("--out", m_out, "map output path")->required();
  int m_stride = 0;
  double m_edge_threshold = std::numeric_limits<double>::quiet_NaN();
  bmap->add_option("--stride", m_stride, "node subsampling stride (frames)");
  bmap->add_option("--edge-threshold", m_edge_threshold, "minimum edge value");
  double m_edge_dist = std::numeric_limits<double>::quiet_NaN();
  bmap->add_option("--max-edge-pose-dist", m_edge_dist,
                   "drop edges between nodes recorded farther apart (m)");

  // eval
  auto* eval = app.add_subcommand("eval", "run an evaluation suite");
  std::string e_suite = "table1-analog", e_ckpt, e_no_rnn, e_cmap, e_rmap, e_out;
  int e_trials = 20;
  eval->add_option("--suite", e_suite, "table1-analog | table2-analog | fig1-cases");
  eval->add_option("--trials", e_trials, "trials per cell");
  eval->add_option("--checkpoint", e_ckpt, "model checkpoint")->required();
  eval->add_option("--no-rnn-checkpoint", e_no_rnn, "no-rnn affordance checkpoint");
  eval->add_option("--corridor-map", e_cmap, "corridor topological map");
  eval->add_option("--rooms-map", e_rmap, "rooms topological map");
  eval->add_option("--out", e_out, "metrics CSV path");

  // navigate
  auto* nav = app.add_subcommand("navigate", "run one navigation episode");
  std::string n_scenario, n_ckpt, n_map;
  nav->add_option("--scenario", n_scenario, "scenario or case id")->required();
  nav->add_option("--checkpoint", n_ckpt, "model checkpoint")->required();
  nav->add_option("--map", n_map, "topological map")->required();

  // recover-demo
  auto* demo = app.add_subcommand("recover-demo", "episode with a recovery trace CSV");
  std::string d_scenario, d_ckpt, d_map, d_out;
  demo->add_option("--scenario", d_scenario, "scenario or case id")->required();
  demo->add_option("--checkpoint", d_ckpt, "model checkpoint")->required();
  demo->add_option("--map", d_map, "topological map")->required();
  demo->add_option("--out", d_out, "trace CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const bool seed_given = seed_opt->count() > 0;
  try {
    if (collect->parsed()) {
      return cmd_collect(c_world, c_policy, c_eps, seed_given ? seed : 0, c_out, c_xmin,
                         c_xmax, c_timeout);
    }
    if (train->parsed()) {
      return cmd_train(t_datasets, t_ckpt, t_stage, t_all, config_path, seed, seed_given,
                       t_csv, t_no_rnn, t_no_rnn_out);
    }
    if (bmap->parsed()) {
      return cmd_build_map(m_dataset, m_ckpt, m_out, m_stride, m_edge_threshold,
                           m_edge_dist, config_path, seed, seed_given);
    }
    if (eval->parsed()) {
      return cmd_eval(e_suite, e_trials, e_ckpt, e_no_rnn, e_cmap, e_rmap, e_out,
                      config_path, seed, seed_given);
    }
    if (nav->parsed()) {
      return cmd_navigate(n_scenario, n_ckpt, n_map, config_path, seed, seed_given);
    }
    if (demo->parsed()) {
      return cmd_recover_demo(d_scenario, d_ckpt, d_map, d_out, config_path, seed,
                              seed_given);
    }
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
