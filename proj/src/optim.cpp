#include "scale/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace scale::nn {

void optimizer_step(ParamSet& params, const GradMap& grads, OptimState& opt) {
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (const auto& [name, grad] : grads) {
    if (!grad.allFinite()) {
      throw std::runtime_error("optimizer_step: non-finite gradient for " + name);
    }
    Mat& p = params.at(name);
    if (p.rows() != grad.rows() || p.cols() != grad.cols()) {
      throw std::runtime_error("optimizer_step: shape mismatch for " + name);
    }
    auto [mit, inserted_m] = opt.m.try_emplace(name, Mat::Zero(p.rows(), p.cols()));
    auto [vit, inserted_v] = opt.v.try_emplace(name, Mat::Zero(p.rows(), p.cols()));
    Mat& m = mit->second;
    Mat& v = vit->second;
    m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
    v = opt.beta2 * v.array() + (1.0 - opt.beta2) * grad.array().square();
    const Mat m_hat = m / bc1;
    const Mat v_hat = v / bc2;
    p.array() -= opt.lr * (m_hat.array() / (v_hat.array().sqrt() + opt.eps) +
                           opt.weight_decay * p.array());
  }
}

void soft_update(ParamSet& target, const std::string& target_prefix,
                 const ParamSet& online, const std::string& online_prefix, double rho) {
  for (auto& [name, t] : target.tensors) {
    if (name.rfind(target_prefix, 0) != 0) continue;
    const std::string online_name = online_prefix + name.substr(target_prefix.size());
    const Mat& o = online.at(online_name);
    if (t.rows() != o.rows() || t.cols() != o.cols()) {
      throw std::runtime_error("soft_update: shape mismatch for " + name);
    }
    t = (1.0 - rho) * t + rho * o;
  }
}

}  // namespace scale::nn
