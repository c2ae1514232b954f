#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "scale/graph.hpp"

namespace scale::nn {

using Mat = Eigen::MatrixXd;

// Named tensor container. Iteration order is lexicographic, which keeps
// initialization, updates and serialization deterministic.
struct ParamSet {
  std::map<std::string, Mat> tensors;
  uint64_t init_seed = 0;

  Mat& at(const std::string& name);
  const Mat& at(const std::string& name) const;
  bool has(const std::string& name) const { return tensors.count(name) > 0; }
  bool all_finite() const;

  // Subset view by prefix (copies).
  ParamSet subset(const std::string& prefix) const;
};

using GradMap = std::map<std::string, Mat>;

// Leaf Vars for every tensor, requires_grad on.
struct ParamVars {
  std::map<std::string, ad::Var> vars;
  ad::Var at(const std::string& name) const;
};

ParamVars make_vars(ad::Graph& g, const ParamSet& p);
// Same but only tensors with the given prefix get gradients; the rest are
// constants (used to freeze networks inside a joint graph).
ParamVars make_vars(ad::Graph& g, const ParamSet& p, const std::string& trainable_prefix);

void collect_grads(ad::Graph& g, const ParamVars& vars, GradMap& out);

void save_checkpoint(const ParamSet& p, const std::string& path);
ParamSet load_checkpoint(const std::string& path);
uint64_t param_hash(const ParamSet& p);
uint64_t param_hash(const ParamSet& p, const std::string& prefix);

}  // namespace scale::nn
