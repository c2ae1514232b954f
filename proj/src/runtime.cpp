#include "scale/runtime.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace scale::runtime {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

afford::AffordConfig effective_afford(const cfg::RunConfig& rc) {
  afford::AffordConfig a = rc.afford;
  a.use_rnn = a.use_rnn && rc.runtime.use_rnn;
  return a;
}

}  // namespace

repr::PretrainReport train_stage1(const data::Dataset& dataset, nn::ParamSet& model,
                                  const cfg::RunConfig& rc) {
  if (!model.has("enc.w0")) {
    std::mt19937_64 rng(mix_seed(rc.seed, 0xA1));
    model.init_seed = rc.seed;
    repr::init_representation(model, rc.repr, rng);
  }
  return repr::pretrain_encoder(dataset, model, rc.repr, mix_seed(rc.seed, 0xA2));
}

void train_stage2(const data::Dataset& dataset, nn::ParamSet& model,
                  const cfg::RunConfig& rc, const std::string& loss_csv_path) {
  if (!model.has("enc.w0")) {
    throw std::runtime_error("train_stage2: representation stage missing from checkpoint");
  }
  const afford::AffordConfig acfg = effective_afford(rc);
  std::mt19937_64 init_rng(mix_seed(rc.seed, 0xB1));
  if (!model.has("q.w0")) iql::init_iql(model, rc.repr.d_z, rc.iql, init_rng);
  if (!model.has("aff.dec.w0")) {
    afford::init_affordance(model, rc.repr.d_z, acfg, init_rng);
  }

  std::mt19937_64 rng(mix_seed(rc.seed, 0xB2));
  nn::OptimState opt;
  opt.lr = rc.iql.lr;
  opt.weight_decay = rc.iql.weight_decay;

  std::ofstream csv;
  if (!loss_csv_path.empty()) {
    csv.open(loss_csv_path);
    if (!csv) throw std::runtime_error("train_stage2: cannot write " + loss_csv_path);
    csv << "step,l_q,l_v,l_pi,l_afford,mean_v_pos,mean_v_neg\n";
  }

  std::vector<data::GoalPair> pos, neg;
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int step = 0; step < rc.iql.steps; ++step) {
    data::sample_batch(dataset, rc.sample, rng, pos, neg);
    iql::IQLBatch batch = iql::make_batch(pos, neg);
    nn::GradMap grads;
    iql::LossReport rep = iql::iql_losses(model, rc.repr, rc.iql, batch, &grads);

    afford::AffordBatch ab = afford::make_afford_batch(
        dataset, model, rc.repr, acfg, rc.sample.batch_size, rc.sample.d_max, rng);
    nn::Mat noise(ab.z_target.rows(), acfg.d_u);
    for (long i = 0; i < noise.size(); ++i) noise.data()[i] = n01(rng);
    afford::AffordLoss al =
        afford::affordance_loss(model, acfg, rc.repr.d_z, ab, noise, &grads);

    nn::optimizer_step(model, grads, opt);
    nn::soft_update(model, "qt.", model, "q.", rc.iql.rho);

    if (csv.is_open() && (step % 100 == 0 || step + 1 == rc.iql.steps)) {
      char line[256];
      std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", step,
                    rep.l_q, rep.l_v, rep.l_pi, al.total, rep.mean_v_pos, rep.mean_v_neg);
      csv << line;
    }
  }
}

rnd::TrainReport train_stage3(const data::Dataset& dataset, nn::ParamSet& model,
                              const cfg::RunConfig& rc) {
  if (!model.has("enc.w0")) {
    throw std::runtime_error("train_stage3: representation stage missing from checkpoint");
  }
  std::mt19937_64 rng(mix_seed(rc.seed, 0xC1));
  if (!model.has("rnd.prior.w0")) rnd::init_rnd(model, rc.repr.d_z, rc.rnd, rng);
  nn::Mat latents = repr::encode(model, rc.repr, repr::all_features(dataset));
  rnd::TrainReport rep =
      rnd::train_rnd(latents, model, rc.repr.d_z, rc.rnd, mix_seed(rc.seed, 0xC2));
  // Calibration for the active-initialization exit test: median post-training
  // novelty over the mapped data, stored alongside the weights.
  Eigen::VectorXd scores = rnd::novelty_scores(model, rc.repr.d_z, rc.rnd, latents);
  std::vector<double> sv(scores.data(), scores.data() + scores.size());
  std::nth_element(sv.begin(), sv.begin() + sv.size() / 2, sv.end());
  model.tensors["rnd.tmed"] = nn::Mat::Constant(1, 1, sv[sv.size() / 2]);
  return rep;
}

void train_all(const data::Dataset& dataset, nn::ParamSet& model, const cfg::RunConfig& rc,
               const std::string& loss_csv_path) {
  train_stage1(dataset, model, rc);
  train_stage2(dataset, model, rc, loss_csv_path);
  train_stage3(dataset, model, rc);
}

nn::ParamSet make_no_rnn_variant(const data::Dataset& dataset, const nn::ParamSet& model,
                                 const cfg::RunConfig& rc) {
  nn::ParamSet out = model;
  for (auto it = out.tensors.begin(); it != out.tensors.end();) {
    if (it->first.rfind("aff.", 0) == 0) {
      it = out.tensors.erase(it);
    } else {
      ++it;
    }
  }
  afford::AffordConfig acfg = rc.afford;
  acfg.use_rnn = false;
  std::mt19937_64 rng(mix_seed(rc.seed, 0xD1));
  afford::init_affordance(out, rc.repr.d_z, acfg, rng);
  afford::train_affordance(dataset, out, rc.repr, acfg, rc.sample.batch_size,
                           rc.sample.d_max, mix_seed(rc.seed, 0xD2));
  return out;
}

// --- navigation ------------------------------------------------------------

// Reactive clearance governor. The platform translates along its current
// heading, so the central depth rays predict the swept path exactly; cap the
// forward speed so one step never reaches closer than a small margin, and when
// the cap bites hard, steer toward the freer side instead of stalling against
// the surface. Reverse is blind (no rear rays) and any contact ends the run,
// so it is kept to a crawl.
static sim::Action clearance_guard(const sim::Observation& obs, sim::Action a,
                                   const sim::SimConfig& sc) {
  a.v = std::max(a.v, -0.1);
  if (a.v <= 0.0) return a;
  const int r = obs.rays();
  const double margin = 0.1;
  const double cone = 8.0 * M_PI / 180.0;
  double ahead = obs.depths.maxCoeff(), left = 0.0, right = 0.0;
  for (int i = 0; i < r; ++i) {
    const double ang = -sc.fov / 2.0 + sc.fov * i / (r - 1);
    if (std::abs(ang) <= cone) ahead = std::min(ahead, obs.depths(i));
    (ang > 0.0 ? left : right) += obs.depths(i);
  }
  const double cap = std::max(0.0, ahead - margin) / sc.dt;
  if (a.v > cap) {
    a.v = cap;
    if (std::abs(a.w) < 0.5 * sc.w_max) {
      a.w = (left >= right ? sc.w_max : -sc.w_max);
    }
  }
  return a;
}

EpisodeResult navigate(const NavTask& task, const topo::TopoMap& map,
                       const nn::ParamSet& model, const cfg::RunConfig& rc, uint64_t seed,
                       const FaultSpec& fault, std::vector<TraceRow>* trace) {
  if (map.d_z != rc.repr.d_z) {
    throw std::runtime_error("navigate: map latent dim does not match model");
  }
  const afford::AffordConfig acfg = effective_afford(rc);
  const recovery::Models planner_models{model,  rc.repr, rc.iql,
                                        acfg,   rc.rnd,  rc.sim.dt};
  const recovery::Ablations abl{rc.runtime.use_rnd && model.has("rnd.prior.w0"),
                                acfg.use_rnn};
  const bool has_rnd = model.has("rnd.prior.w0");

  std::unordered_map<uint32_t, const topo::TopoNode*> node_by_id;
  for (const auto& n : map.nodes) node_by_id[n.node_id] = &n;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);

  std::optional<Eigen::VectorXd> z_g;
  uint32_t goal_node = 0;
  if (task.has_goal) {
    sim::Observation gobs = sim::observe(task.goal, task.world, rc.sim.rays,
                                         rc.sim.max_range, rc.sim.fov);
    z_g = repr::encode_one(model, rc.repr, gobs.features(rc.sim.max_range));
    // Route toward the node that reaches the goal view most cheaply
    // (argmax V(node -> goal)), not the node that merely looks like the goal:
    // the goal pose may hug a wall no collection episode ever matched.
    nn::Mat z_nodes(map.nodes.size(), map.d_z);
    for (size_t i = 0; i < map.nodes.size(); ++i) z_nodes.row(i) = map.nodes[i].z;
    const Eigen::VectorXd to_goal =
        iql::v_values(model, rc.repr.d_z, rc.iql.hidden, z_nodes,
                      z_g->transpose().replicate(map.nodes.size(), 1));
    int gi = 0;
    to_goal.maxCoeff(&gi);
    goal_node = map.nodes[gi].node_id;
  }

  // Active initialization calibration: a no-goal run only counts as localized
  // once the novelty score drops below the median seen during training.
  const double tmed = model.has("rnd.tmed")
                          ? model.tensors.at("rnd.tmed")(0, 0)
                          : std::numeric_limits<double>::infinity();

  nn::Mat h = nn::Mat::Zero(1, acfg.feature_dim(rc.repr.d_z));
  sim::Pose pose = task.start;
  EpisodeResult res;
  bool was_planning = false;
  std::optional<uint32_t> tracked;  // last confidently-localized node
  int lost_streak = 0;
  // Cadenced waypoint following. V(z, z') is dominated by view alignment --
  // a co-located node facing the other way scores like one ten meters off --
  // so value thresholds cannot detect per-node arrival. Instead each cycle
  // re-plans, scans a full revolution for the heading where V(z, target)
  // peaks, rotates back to it (turn rate is constant, so the argmax offset
  // lands on the scanned heading), and drives a fixed burst.
  const int rev_steps =
      static_cast<int>(std::ceil(2.0 * M_PI / (rc.sim.w_max * rc.sim.dt)));
  const int lookahead_hops = 4;  // route nodes ahead of the best-visible one
  const int drive_len = 12;      // drive steps per cycle before re-planning
  int scan_left = 0;             // remaining scan-revolution steps
  int align_left = 0;            // remaining rotate-back-to-best steps
  int drive_left = 0;            // remaining drive steps this cycle
  std::vector<double> scan_v;
  int target_node = -1;
  Eigen::VectorXd target_z;

  for (int t = 0;; ++t) {
    sim::Observation obs =
        sim::observe(pose, task.world, rc.sim.rays, rc.sim.max_range, rc.sim.fov);
    Eigen::VectorXd z = repr::encode_one(model, rc.repr, obs.features(rc.sim.max_range));
    h = afford::temporal_step(model, acfg, rc.repr.d_z, h, nn::Mat(z.transpose()));
    // Tracked localization: search near the previous node first (aliased views
    // make the global argmax teleport), fall back to the whole map, and only
    // declare LOST after a few consecutive misses.
    topo::LocalizeResult loc =
        tracked ? topo::localize_near(z, map, model, rc.repr, rc.iql, rc.runtime.v_loc,
                                      *tracked, rc.runtime.track_hops)
                : topo::localize(z, map, model, rc.repr, rc.iql, rc.runtime.v_loc);
    if (loc.lost && tracked) {
      loc = topo::localize(z, map, model, rc.repr, rc.iql, rc.runtime.v_loc);
    }
    if (loc.lost) {
      ++lost_streak;
    } else {
      lost_streak = 0;
      tracked = loc.node_id;
    }
    const bool lost_now =
        loc.lost && (!tracked || lost_streak >= rc.runtime.lost_patience);
    if (lost_now) tracked.reset();
    const uint32_t nav_node = (loc.lost && tracked) ? *tracked : loc.node_id;
    const double novelty = (has_rnd && (trace || !task.has_goal))
                               ? rnd::novelty_score(model, rc.repr.d_z, rc.rnd, z)
                               : 0.0;

    TraceRow row;
    if (trace) {
      row.step = t;
      row.novelty = novelty;
      row.localize_value = loc.value;
      row.lost = lost_now;
      row.plan_cost = std::numeric_limits<double>::quiet_NaN();
      row.target_value = std::numeric_limits<double>::quiet_NaN();
      row.x = pose.x;
      row.y = pose.y;
      row.theta = pose.theta;
    }

    if (task.has_goal &&
        std::hypot(pose.x - task.goal.x, pose.y - task.goal.y) <= rc.runtime.goal_radius) {
      res.success = true;
      res.end_reason = "goal";
      if (trace) trace->push_back(row);
      break;
    }
    if (!task.has_goal && !loc.lost && (!has_rnd || novelty <= tmed)) {
      res.success = true;
      res.end_reason = "localized";
      if (trace) trace->push_back(row);
      break;
    }
    if (t >= rc.runtime.step_budget) {
      res.end_reason = "timeout";
      if (trace) trace->push_back(row);
      break;
    }

    sim::Action a;
    // A no-goal run plans against novelty until initialization holds, even if
    // some map node momentarily scores above the localization floor.
    const bool plan_recovery = lost_now || !task.has_goal;
    if (plan_recovery && rc.runtime.use_affordance) {
      if (!was_planning) res.recovery_invocations++;
      recovery::RecoverStep rs = recovery::recover_step(
          planner_models, z, h, z_g, rc.weights, rc.mppi, abl, rng);
      a = rs.action;
      row.plan_cost = rs.plan.cost;
      // Whatever recovery ends up at, re-plan from there.
      scan_left = align_left = drive_left = 0;
      scan_v.clear();
    } else if (lost_now) {
      res.end_reason = "lost";
      if (trace) trace->push_back(row);
      break;
    } else {
      // Waypoint following, one cycle at a time: route on the map from the
      // current localization, steer for a node a few hops past the
      // best-visible route node (or the goal view once the route runs out),
      // scan-and-align to it, drive a short burst, then re-plan. Picking the
      // anchor by value rather than keeping a fixed pointer means a
      // mislocalized nav_node cannot derail the whole route.
      if (scan_left == 0 && align_left == 0 && drive_left == 0) {
        target_node = -1;
        target_z = z_g ? *z_g : z;
        std::vector<uint32_t> route = topo::plan_route(map, nav_node, goal_node);
        if (route.size() > 1) {
          nn::Mat z_route(route.size(), map.d_z);
          for (size_t i = 0; i < route.size(); ++i)
            z_route.row(i) = node_by_id.at(route[i])->z;
          const Eigen::VectorXd vals =
              iql::v_values(model, rc.repr.d_z, rc.iql.hidden,
                            z.transpose().replicate(route.size(), 1), z_route);
          size_t best = 0;
          for (size_t i = 1; i < route.size(); ++i) {
            if (vals(i) > vals(best)) best = i;
          }
          const size_t idx = std::min(best + lookahead_hops, route.size() - 1);
          if (idx + 1 < route.size() || !z_g) {
            target_node = static_cast<int>(route[idx]);
            target_z = node_by_id.at(route[idx])->z;
          }  // else: the route is exhausted, steer for the goal view itself
        }
        scan_left = rev_steps;
        scan_v.clear();
      }
      const double v_target =
          iql::v_value(model, rc.repr.d_z, rc.iql.hidden, z, target_z);
      row.target_node = target_node;
      row.target_value = v_target;
      if (scan_left > 0) {
        scan_v.push_back(v_target);
        a = {0.05, rc.sim.w_max};
        if (--scan_left == 0) {
          int best_i = 0;
          for (size_t i = 1; i < scan_v.size(); ++i) {
            if (scan_v[i] > scan_v[best_i]) best_i = static_cast<int>(i);
          }
          align_left = best_i;
          drive_left = drive_len;
          scan_v.clear();
        }
      } else if (align_left > 0) {
        --align_left;
        a = {0.05, rc.sim.w_max};
      } else {
        --drive_left;
        a = iql::policy_q_action(model, rc.repr.d_z, rc.iql, z, target_z,
                                 rc.runtime.action_candidates, rng);
        // The scan just fixed the heading; the policy refines locally but must
        // not be able to undo it within one burst.
        const double w_cap = 0.35 * rc.sim.w_max;
        a.w = std::clamp(a.w, -w_cap, w_cap);
      }
    }
    was_planning = plan_recovery && rc.runtime.use_affordance;
    if (trace) trace->push_back(row);

    a = clearance_guard(obs, a, rc.sim);

    if (fault.action_noise > 0.0) {
      a.v += fault.action_noise * n01(rng);
      a.w += fault.action_noise * n01(rng);
    }
    auto [next_pose, collided] = sim::step(pose, a, rc.sim.dt, task.world, rc.sim);
    res.steps = t + 1;
    if (collided) {
      res.end_reason = "collision";
      break;
    }
    res.distance_traveled +=
        std::hypot(next_pose.x - pose.x, next_pose.y - pose.y);
    pose = next_pose;
  }
  res.distance_until_intervention = res.distance_traveled;
  return res;
}

// --- evaluation suites ------------------------------------------------------

NavTask make_case_task(const std::string& case_id, uint64_t seed, FaultSpec* fault) {
  const sim::ScenarioRegistry reg = sim::ScenarioRegistry::builtin();
  if (fault) *fault = FaultSpec{};
  NavTask task;
  if (case_id == "case-a-noise") {
    sim::ScenarioInstance inst = sim::reset_scenario(reg, "corridor-medium", seed);
    task = {inst.world, inst.start, inst.goal, inst.has_goal};
    if (fault) fault->action_noise = 0.45;
  } else if (case_id == "case-b-near-obstacle") {
    sim::ScenarioInstance inst = sim::reset_scenario(reg, "corridor-medium", seed);
    task = {inst.world, inst.start, inst.goal, inst.has_goal};
    // Start almost touching a wall, facing it.
    std::mt19937_64 rng(mix_seed(seed, 0xE1));
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    task.start.y = task.world.ymin + 0.55;
    task.start.theta = -M_PI / 2.0 + jitter(rng);
  } else if (case_id == "case-c-novel") {
    sim::ScenarioInstance inst = sim::reset_scenario(reg, "corridor-novel", seed);
    task = {inst.world, inst.start, inst.goal, inst.has_goal};
  } else if (case_id == "case-d-unmapped") {
    sim::ScenarioInstance inst = sim::reset_scenario(reg, "rooms-unmapped", seed);
    task = {inst.world, inst.start, inst.goal, inst.has_goal};
  } else {
    throw std::runtime_error("make_case_task: unknown case " + case_id);
  }
  return task;
}

namespace {

struct Cell {
  std::string scenario, difficulty, variant, ablation;
};

const topo::TopoMap& map_for(const std::string& scenario, const EvalModels& models) {
  const bool rooms = scenario.rfind("rooms", 0) == 0 || scenario == "case-d-unmapped";
  const topo::TopoMap* m = rooms ? models.rooms_map : models.corridor_map;
  if (!m) throw std::runtime_error("run_suite: missing map for " + scenario);
  return *m;
}

void apply_ablation(cfg::RunConfig& rc, const std::string& ablation) {
  if (ablation == "recovery" || ablation == "full") return;
  if (ablation == "no-recovery" || ablation == "no-affordance") {
    rc.runtime.use_affordance = false;
  } else if (ablation == "no-rnd") {
    rc.runtime.use_rnd = false;
  } else if (ablation == "no-rnn") {
    rc.runtime.use_rnn = false;
  } else if (ablation == "no-rnn-no-rnd") {
    rc.runtime.use_rnn = false;
    rc.runtime.use_rnd = false;
  } else {
    throw std::runtime_error("run_suite: unknown ablation " + ablation);
  }
}

const nn::ParamSet& model_for(const std::string& ablation, const EvalModels& models) {
  if (ablation == "no-rnn" || ablation == "no-rnn-no-rnd") {
    if (!models.model_no_rnn) {
      throw std::runtime_error("run_suite: ablation " + ablation +
                               " needs the no-rnn affordance checkpoint");
    }
    return *models.model_no_rnn;
  }
  if (!models.model) throw std::runtime_error("run_suite: missing model");
  return *models.model;
}

EvalRow eval_cell(const std::string& suite, const Cell& cell, int trials,
                  const EvalModels& models, const cfg::RunConfig& base_rc, uint64_t seed) {
  cfg::RunConfig rc = base_rc;
  apply_ablation(rc, cell.ablation);
  const nn::ParamSet& model = model_for(cell.ablation, models);

  const bool is_case = cell.scenario.rfind("case-", 0) == 0;
  const sim::ScenarioRegistry reg = sim::ScenarioRegistry::builtin();
  const uint64_t cell_seed =
      mix_seed(seed, fnv1a(suite + "/" + cell.scenario + "/" + cell.ablation));

  double succ = 0.0, dist = 0.0, recov = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const uint64_t ts = mix_seed(cell_seed, static_cast<uint64_t>(trial));
    FaultSpec fault;
    NavTask task;
    if (is_case) {
      task = make_case_task(cell.scenario, ts, &fault);
    } else {
      sim::ScenarioInstance inst = sim::reset_scenario(reg, cell.scenario, ts);
      task = {inst.world, inst.start, inst.goal, inst.has_goal};
    }
    EpisodeResult r =
        navigate(task, map_for(cell.scenario, models), model, rc, ts, fault);
    succ += r.success ? 1.0 : 0.0;
    dist += r.distance_until_intervention;
    recov += r.recovery_invocations;
  }
  EvalRow row;
  row.suite = suite;
  row.scenario = cell.scenario;
  row.difficulty = cell.difficulty;
  row.variant = cell.variant;
  row.ablation = cell.ablation;
  row.trials = trials;
  row.success_rate = succ / trials;
  row.mean_dist_until_intervention = dist / trials;
  row.mean_recovery_invocations = recov / trials;
  return row;
}

}  // namespace

std::vector<EvalRow> run_suite(const std::string& suite, int trials,
                               const EvalModels& models, const cfg::RunConfig& rc,
                               uint64_t seed) {
  if (trials < 1) throw std::runtime_error("run_suite: trials must be >= 1");
  std::vector<Cell> cells;
  if (suite == "table1-analog") {
    for (const char* abl : {"recovery", "no-recovery"}) {
      cells.push_back({"corridor-easy", "easy", "base", abl});
      cells.push_back({"corridor-medium", "medium", "base", abl});
      cells.push_back({"corridor-hard", "hard", "base", abl});
    }
  } else if (suite == "fig1-cases") {
    for (const char* abl : {"recovery", "no-recovery"}) {
      cells.push_back({"case-a-noise", "-", "noise", abl});
      cells.push_back({"case-b-near-obstacle", "-", "near-obstacle", abl});
      cells.push_back({"case-c-novel", "-", "novel-obstacle", abl});
      cells.push_back({"case-d-unmapped", "-", "unmapped", abl});
    }
  } else if (suite == "table2-analog") {
    for (const char* abl :
         {"full", "no-rnd", "no-rnn", "no-rnn-no-rnd", "no-affordance"}) {
      cells.push_back({"case-a-noise", "-", "noise", abl});
      cells.push_back({"case-c-novel", "-", "novel-obstacle", abl});
      cells.push_back({"case-d-unmapped", "-", "unmapped", abl});
    }
  } else {
    throw std::runtime_error("run_suite: unknown suite " + suite);
  }

  std::vector<EvalRow> rows;
  rows.reserve(cells.size());
  for (const Cell& c : cells) rows.push_back(eval_cell(suite, c, trials, models, rc, seed));
  return rows;
}

std::string rows_to_csv(const std::vector<EvalRow>& rows) {
  std::string out =
      "schema_version,suite,scenario,difficulty,variant,ablation,trials,"
      "success_rate,mean_dist_until_intervention,mean_recovery_invocations\n";
  char buf[512];
  for (const EvalRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "1,%s,%s,%s,%s,%s,%d,%.6f,%.6f,%.6f\n",
                  r.suite.c_str(), r.scenario.c_str(), r.difficulty.c_str(),
                  r.variant.c_str(), r.ablation.c_str(), r.trials, r.success_rate,
                  r.mean_dist_until_intervention, r.mean_recovery_invocations);
    out += buf;
  }
  return out;
}

}  // namespace scale::runtime
