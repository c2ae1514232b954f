#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scale/config.hpp"
#include "scale/recovery.hpp"
#include "scale/topo.hpp"

namespace scale::runtime {

// --- staged training -------------------------------------------------------

// Stage 1: representation pretraining (initializes the model when empty).
repr::PretrainReport train_stage1(const data::Dataset& dataset, nn::ParamSet& model,
                                  const cfg::RunConfig& rc);

// Stage 2: value/policy learning with interleaved affordance updates and
// encoder fine-tuning through the Q loss.
void train_stage2(const data::Dataset& dataset, nn::ParamSet& model,
                  const cfg::RunConfig& rc, const std::string& loss_csv_path = "");

// Stage 3: novelty detector on the dataset latents.
rnd::TrainReport train_stage3(const data::Dataset& dataset, nn::ParamSet& model,
                              const cfg::RunConfig& rc);

void train_all(const data::Dataset& dataset, nn::ParamSet& model, const cfg::RunConfig& rc,
               const std::string& loss_csv_path = "");

// Retrains the affordance head without the temporal GRU (history = current
// latent). Shares every other tensor with `model`.
nn::ParamSet make_no_rnn_variant(const data::Dataset& dataset, const nn::ParamSet& model,
                                 const cfg::RunConfig& rc);

// --- navigation ------------------------------------------------------------

struct NavTask {
  sim::World world;
  sim::Pose start;
  sim::Pose goal;
  bool has_goal = true;  // false: succeed on localization (active initialization)
};

struct FaultSpec {
  double action_noise = 0.0;  // stddev added to executed (v, w)
};

struct TraceRow {
  int step = 0;
  double novelty = 0.0;
  double localize_value = 0.0;
  bool lost = false;
  double plan_cost = 0.0;         // NaN outside recovery
  double x = 0.0, y = 0.0, theta = 0.0;  // ground-truth pose (diagnostics)
  int target_node = -1;           // route node steered for, -1 = goal view / none
  double target_value = 0.0;      // V(current, target), NaN outside waypointing
};

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  double distance_traveled = 0.0;
  double distance_until_intervention = 0.0;
  int recovery_invocations = 0;  // localized -> lost transitions handled
  std::string end_reason;        // goal | localized | collision | lost | timeout
};

EpisodeResult navigate(const NavTask& task, const topo::TopoMap& map,
                       const nn::ParamSet& model, const cfg::RunConfig& rc, uint64_t seed,
                       const FaultSpec& fault = {}, std::vector<TraceRow>* trace = nullptr);

// --- evaluation suites ------------------------------------------------------

struct EvalRow {
  std::string suite, scenario, difficulty, variant, ablation;
  int trials = 0;
  double success_rate = 0.0;
  double mean_dist_until_intervention = 0.0;
  double mean_recovery_invocations = 0.0;
};

struct EvalModels {
  const nn::ParamSet* model = nullptr;         // full model
  const nn::ParamSet* model_no_rnn = nullptr;  // required for the no-rnn ablations
  const topo::TopoMap* corridor_map = nullptr;
  const topo::TopoMap* rooms_map = nullptr;
};

// suites: "table1-analog" | "table2-analog" | "fig1-cases"
std::vector<EvalRow> run_suite(const std::string& suite, int trials,
                               const EvalModels& models, const cfg::RunConfig& rc,
                               uint64_t seed);

// Stable, byte-reproducible CSV (schema header included).
std::string rows_to_csv(const std::vector<EvalRow>& rows);

uint64_t mix_seed(uint64_t seed, uint64_t salt);

// NavTask for one named evaluation cell; fig1 cases are
// "case-a-noise", "case-b-near-obstacle", "case-c-novel", "case-d-unmapped".
NavTask make_case_task(const std::string& case_id, uint64_t seed, FaultSpec* fault);

}  // namespace scale::runtime
