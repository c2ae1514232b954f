#pragma once

#include "scale/params.hpp"

namespace scale::nn {

struct OptimState {
  std::map<std::string, Mat> m;  // first moments
  std::map<std::string, Mat> v;  // second moments
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// AdamW with decoupled weight decay. Throws on non-finite gradients,
// naming the offending tensor.
void optimizer_step(ParamSet& params, const GradMap& grads, OptimState& opt);

// target <- (1 - rho) * target + rho * online, over the given prefix.
void soft_update(ParamSet& target, const std::string& target_prefix,
                 const ParamSet& online, const std::string& online_prefix, double rho);

}  // namespace scale::nn
