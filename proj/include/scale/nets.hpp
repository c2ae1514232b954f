#pragma once

#include <random>
#include <string>
#include <vector>

#include "scale/params.hpp"

namespace scale::nn {

// Tanh-activated MLP with a linear output layer. When `layernorm` is set,
// each hidden pre-activation is layer-normalized (no affine) before tanh.
struct MLPSpec {
  std::string prefix;
  std::vector<int> sizes;  // [in, hidden..., out]
  bool layernorm = false;
};

void init_mlp(ParamSet& params, const MLPSpec& spec, std::mt19937_64& rng);
ad::Var mlp_forward(ad::Graph& g, const ParamVars& vars, const MLPSpec& spec, ad::Var x);
Mat mlp_forward(const ParamSet& params, const MLPSpec& spec, const Mat& x);

Mat layernorm_rows_plain(const Mat& x, double eps = 1e-5);

struct GRUSpec {
  std::string prefix;
  int in = 0;
  int hidden = 0;
};

void init_gru(ParamSet& params, const GRUSpec& spec, std::mt19937_64& rng);
ad::Var gru_step(ad::Graph& g, const ParamVars& vars, const GRUSpec& spec, ad::Var h,
                 ad::Var x);
Mat gru_step(const ParamSet& params, const GRUSpec& spec, const Mat& h, const Mat& x);

}  // namespace scale::nn
