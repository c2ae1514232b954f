#pragma once

#include <functional>
#include <random>

#include "scale/params.hpp"

namespace scale::nn {

// Deterministic loss: returns the scalar loss and, when `grads` is non-null,
// fills analytic gradients for every tensor in `params`.
using LossFn = std::function<double(const ParamSet& params, GradMap* grads)>;

// Compares analytic gradients to central finite differences on a sampled
// subset of coordinates. Returns the maximum relative error found.
double grad_check(const LossFn& loss_fn, const ParamSet& params, double epsilon,
                  int coords_per_tensor, std::mt19937_64& rng);

}  // namespace scale::nn
