#include "scale/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace scale::nn {

double grad_check(const LossFn& loss_fn, const ParamSet& params, double epsilon,
                  int coords_per_tensor, std::mt19937_64& rng) {
  GradMap analytic;
  loss_fn(params, &analytic);

  double max_rel = 0.0;
  for (const auto& [name, grad] : analytic) {
    const long size = grad.size();
    if (size == 0) continue;
    std::vector<long> coords;
    if (size <= coords_per_tensor) {
      coords.resize(size);
      for (long i = 0; i < size; ++i) coords[i] = i;
    } else {
      std::uniform_int_distribution<long> pick(0, size - 1);
      for (int i = 0; i < coords_per_tensor; ++i) coords.push_back(pick(rng));
    }
    for (long c : coords) {
      ParamSet perturbed = params;
      Mat& t = perturbed.at(name);
      const double orig = t.data()[c];
      t.data()[c] = orig + epsilon;
      const double lp = loss_fn(perturbed, nullptr);
      t.data()[c] = orig - epsilon;
      const double lm = loss_fn(perturbed, nullptr);
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double a = grad.data()[c];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace scale::nn
