#include "scale/config.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace scale::cfg {

using json = nlohmann::json;

namespace {

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void from_json_sim(const json& j, sim::SimConfig& c) {
  get(j, "dt", c.dt);
  get(j, "v_max", c.v_max);
  get(j, "w_max", c.w_max);
  get(j, "rays", c.rays);
  get(j, "max_range", c.max_range);
  get(j, "fov", c.fov);
}

json to_json_sim(const sim::SimConfig& c) {
  return {{"dt", c.dt},   {"v_max", c.v_max},         {"w_max", c.w_max},
          {"rays", c.rays}, {"max_range", c.max_range}, {"fov", c.fov}};
}

}  // namespace

void RunConfig::validate() const {
  if (repr.obs_dim != sim::obs_feature_dim(sim.rays)) {
    throw std::runtime_error("config: repr.obs_dim does not match 2*rays+1");
  }
  if (sample.d_max < 1) throw std::runtime_error("config: sample.d_max must be >= 1");
  if (afford.k_steps < 1) throw std::runtime_error("config: afford.k_steps must be >= 1");
  if (mppi.n_candidates < 2) {
    throw std::runtime_error("config: mppi.n_candidates must be >= 2");
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config: parse error in " + path + ": " + e.what());
  }

  RunConfig c;
  if (j.contains("sim")) from_json_sim(j["sim"], c.sim);
  if (j.contains("sample")) {
    const json& s = j["sample"];
    get(s, "batch_size", c.sample.batch_size);
    get(s, "d_max", c.sample.d_max);
    get(s, "gap_geometric_p", c.sample.gap_geometric_p);
    get(s, "negative_fraction", c.sample.negative_fraction);
    get(s, "cross_episode_negatives", c.sample.cross_episode_negatives);
    get(s, "min_negative_feature_dist", c.sample.min_negative_feature_dist);
    get(s, "min_negative_pose_dist", c.sample.min_negative_pose_dist);
    get(s, "calibration_fraction", c.sample.calibration_fraction);
    get(s, "calibration_radius", c.sample.calibration_radius);
  }
  if (j.contains("repr")) {
    const json& s = j["repr"];
    get(s, "obs_dim", c.repr.obs_dim);
    get(s, "d_z", c.repr.d_z);
    get(s, "hidden", c.repr.hidden);
    get(s, "codebook_size", c.repr.codebook_size);
    get(s, "commitment_weight", c.repr.commitment_weight);
    get(s, "pretrain_steps", c.repr.pretrain_steps);
    get(s, "batch_size", c.repr.batch_size);
    get(s, "lr", c.repr.lr);
    get(s, "weight_decay", c.repr.weight_decay);
  }
  if (j.contains("iql")) {
    const json& s = j["iql"];
    get(s, "gamma", c.iql.gamma);
    get(s, "tau", c.iql.tau);
    get(s, "beta_awr", c.iql.beta_awr);
    get(s, "v_min", c.iql.v_min);
    get(s, "adv_clip", c.iql.adv_clip);
    get(s, "sigma_min", c.iql.sigma_min);
    get(s, "sigma_max", c.iql.sigma_max);
    get(s, "hidden", c.iql.hidden);
    get(s, "lr", c.iql.lr);
    get(s, "weight_decay", c.iql.weight_decay);
    get(s, "rho", c.iql.rho);
    get(s, "steps", c.iql.steps);
    get(s, "action_v_max", c.iql.action_v_max);
    get(s, "action_w_max", c.iql.action_w_max);
  }
  if (j.contains("afford")) {
    const json& s = j["afford"];
    get(s, "d_u", c.afford.d_u);
    get(s, "d_h", c.afford.d_h);
    get(s, "history", c.afford.history);
    get(s, "k_steps", c.afford.k_steps);
    get(s, "beta_vib", c.afford.beta_vib);
    get(s, "hidden", c.afford.hidden);
    get(s, "lr", c.afford.lr);
    get(s, "weight_decay", c.afford.weight_decay);
    get(s, "steps", c.afford.steps);
    get(s, "use_rnn", c.afford.use_rnn);
  }
  if (j.contains("rnd")) {
    const json& s = j["rnd"];
    get(s, "d_rnd", c.rnd.d_rnd);
    get(s, "hidden", c.rnd.hidden);
    get(s, "lr", c.rnd.lr);
    get(s, "weight_decay", c.rnd.weight_decay);
    get(s, "steps", c.rnd.steps);
    get(s, "batch_size", c.rnd.batch_size);
    get(s, "augment_sigma", c.rnd.augment_sigma);
  }
  if (j.contains("topo")) {
    const json& s = j["topo"];
    get(s, "node_stride", c.topo.node_stride);
    get(s, "edge_threshold", c.topo.edge_threshold);
    get(s, "max_episodes", c.topo.max_episodes);
    get(s, "max_edge_pose_dist", c.topo.max_edge_pose_dist);
  }
  if (j.contains("weights")) {
    const json& s = j["weights"];
    get(s, "lambda_goal", c.weights.lambda_goal);
    get(s, "eta_reach", c.weights.eta_reach);
    get(s, "eta_prob", c.weights.eta_prob);
    get(s, "eta_aggr", c.weights.eta_aggr);
    get(s, "v_loc", c.weights.v_loc);
    get(s, "delta_theta_min", c.weights.delta_theta_min);
  }
  if (j.contains("mppi")) {
    const json& s = j["mppi"];
    get(s, "n_candidates", c.mppi.n_candidates);
    get(s, "k_steps", c.mppi.k_steps);
    get(s, "iters", c.mppi.iters);
    get(s, "temperature", c.mppi.temperature);
  }
  if (j.contains("runtime")) {
    const json& s = j["runtime"];
    get(s, "use_affordance", c.runtime.use_affordance);
    get(s, "use_rnn", c.runtime.use_rnn);
    get(s, "use_rnd", c.runtime.use_rnd);
    get(s, "step_budget", c.runtime.step_budget);
    get(s, "goal_radius", c.runtime.goal_radius);
    get(s, "v_adv", c.runtime.v_adv);
    get(s, "v_arrive", c.runtime.v_arrive);
    get(s, "v_loc", c.runtime.v_loc);
    get(s, "action_candidates", c.runtime.action_candidates);
    get(s, "v_acquire", c.runtime.v_acquire);
    get(s, "track_hops", c.runtime.track_hops);
    get(s, "lost_patience", c.runtime.lost_patience);
  }
  get(j, "seed", c.seed);

  c.afford.use_rnn = c.runtime.use_rnn && c.afford.use_rnn;
  c.weights.v_loc = c.runtime.v_loc;
  c.validate();
  return c;
}

void save_config(const RunConfig& c, const std::string& path) {
  json j;
  j["sim"] = to_json_sim(c.sim);
  j["sample"] = {{"batch_size", c.sample.batch_size},
                 {"d_max", c.sample.d_max},
                 {"gap_geometric_p", c.sample.gap_geometric_p},
                 {"negative_fraction", c.sample.negative_fraction},
                 {"cross_episode_negatives", c.sample.cross_episode_negatives},
                 {"min_negative_feature_dist", c.sample.min_negative_feature_dist},
                 {"min_negative_pose_dist", c.sample.min_negative_pose_dist},
                 {"calibration_fraction", c.sample.calibration_fraction},
                 {"calibration_radius", c.sample.calibration_radius}};
  j["repr"] = {{"obs_dim", c.repr.obs_dim},
               {"d_z", c.repr.d_z},
               {"hidden", c.repr.hidden},
               {"codebook_size", c.repr.codebook_size},
               {"commitment_weight", c.repr.commitment_weight},
               {"pretrain_steps", c.repr.pretrain_steps},
               {"batch_size", c.repr.batch_size},
               {"lr", c.repr.lr},
               {"weight_decay", c.repr.weight_decay}};
  j["iql"] = {{"gamma", c.iql.gamma},       {"tau", c.iql.tau},
              {"beta_awr", c.iql.beta_awr}, {"v_min", c.iql.v_min},
              {"adv_clip", c.iql.adv_clip}, {"sigma_min", c.iql.sigma_min},
              {"sigma_max", c.iql.sigma_max}, {"hidden", c.iql.hidden},
              {"lr", c.iql.lr},             {"weight_decay", c.iql.weight_decay},
              {"rho", c.iql.rho},           {"steps", c.iql.steps},
              {"action_v_max", c.iql.action_v_max}, {"action_w_max", c.iql.action_w_max}};
  j["afford"] = {{"d_u", c.afford.d_u},
                 {"d_h", c.afford.d_h},
                 {"history", c.afford.history},
                 {"k_steps", c.afford.k_steps},
                 {"beta_vib", c.afford.beta_vib},
                 {"hidden", c.afford.hidden},
                 {"lr", c.afford.lr},
                 {"weight_decay", c.afford.weight_decay},
                 {"steps", c.afford.steps},
                 {"use_rnn", c.afford.use_rnn}};
  j["rnd"] = {{"d_rnd", c.rnd.d_rnd},   {"hidden", c.rnd.hidden},
              {"lr", c.rnd.lr},         {"weight_decay", c.rnd.weight_decay},
              {"steps", c.rnd.steps},   {"batch_size", c.rnd.batch_size},
              {"augment_sigma", c.rnd.augment_sigma}};
  j["topo"] = {{"node_stride", c.topo.node_stride},
               {"edge_threshold", c.topo.edge_threshold},
               {"max_episodes", c.topo.max_episodes},
               {"max_edge_pose_dist", c.topo.max_edge_pose_dist}};
  j["weights"] = {{"lambda_goal", c.weights.lambda_goal},
                  {"eta_reach", c.weights.eta_reach},
                  {"eta_prob", c.weights.eta_prob},
                  {"eta_aggr", c.weights.eta_aggr},
                  {"v_loc", c.weights.v_loc},
                  {"delta_theta_min", c.weights.delta_theta_min}};
  j["mppi"] = {{"n_candidates", c.mppi.n_candidates},
               {"k_steps", c.mppi.k_steps},
               {"iters", c.mppi.iters},
               {"temperature", c.mppi.temperature}};
  j["runtime"] = {{"use_affordance", c.runtime.use_affordance},
                  {"use_rnn", c.runtime.use_rnn},
                  {"use_rnd", c.runtime.use_rnd},
                  {"step_budget", c.runtime.step_budget},
                  {"goal_radius", c.runtime.goal_radius},
                  {"v_adv", c.runtime.v_adv},
                  {"v_arrive", c.runtime.v_arrive},
                  {"v_loc", c.runtime.v_loc},
                  {"action_candidates", c.runtime.action_candidates},
                  {"v_acquire", c.runtime.v_acquire},
                  {"track_hops", c.runtime.track_hops},
                  {"lost_patience", c.runtime.lost_patience}};
  j["seed"] = c.seed;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace scale::cfg
