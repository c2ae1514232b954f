#pragma once

#include <string>

#include "scale/recovery.hpp"
#include "scale/sampling.hpp"
#include "scale/topo.hpp"

namespace scale::cfg {

struct RuntimeConfig {
  bool use_affordance = true;
  bool use_rnn = true;
  bool use_rnd = true;
  int step_budget = 400;
  double goal_radius = 0.5;
  double v_adv = -3.0;    // waypoint-advance threshold
  double v_arrive = -5.0; // a held waypoint counts as reached above this
  double v_loc = -10.0;  // localization threshold
  int action_candidates = 8;  // policy samples re-ranked by Q at decision time
  double v_acquire = -9.0;    // below this the waypoint is out of view: rotate
  int track_hops = 3;         // localization search radius around the last node
  int lost_patience = 3;      // consecutive lost frames before recovery engages
};

struct RunConfig {
  sim::SimConfig sim;
  data::SampleConfig sample;
  repr::ReprConfig repr;
  iql::IQLConfig iql;
  afford::AffordConfig afford;
  rnd::RNDConfig rnd;
  topo::TopoConfig topo;
  recovery::CostWeights weights;
  recovery::MppiConfig mppi;
  RuntimeConfig runtime;
  uint64_t seed = 0;

  void validate() const;  // flag consistency etc.
};

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

}  // namespace scale::cfg
