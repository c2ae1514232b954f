#include "scale/nets.hpp"

#include <cmath>

namespace scale::nn {

static Mat glorot(int rows, int cols, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> u(-s, s);
  Mat m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

void init_mlp(ParamSet& params, const MLPSpec& spec, std::mt19937_64& rng) {
  for (size_t l = 0; l + 1 < spec.sizes.size(); ++l) {
    const std::string id = std::to_string(l);
    params.tensors[spec.prefix + ".w" + id] = glorot(spec.sizes[l], spec.sizes[l + 1], rng);
    params.tensors[spec.prefix + ".b" + id] = Mat::Zero(1, spec.sizes[l + 1]);
  }
}

ad::Var mlp_forward(ad::Graph& g, const ParamVars& vars, const MLPSpec& spec, ad::Var x) {
  ad::Var h = x;
  const size_t n_layers = spec.sizes.size() - 1;
  for (size_t l = 0; l < n_layers; ++l) {
    const std::string id = std::to_string(l);
    h = ad::affine(h, vars.at(spec.prefix + ".w" + id), vars.at(spec.prefix + ".b" + id));
    if (l + 1 < n_layers) {
      if (spec.layernorm) h = ad::layernorm_rows(h);
      h = ad::tanh_(h);
    }
  }
  return h;
}

Mat layernorm_rows_plain(const Mat& x, double eps) {
  Eigen::VectorXd mean = x.rowwise().mean();
  Mat centered = x.colwise() - mean;
  Eigen::VectorXd var = centered.array().square().rowwise().mean();
  Eigen::VectorXd inv_std = (var.array() + eps).sqrt().inverse();
  return centered.array().colwise() * inv_std.array();
}

Mat mlp_forward(const ParamSet& params, const MLPSpec& spec, const Mat& x) {
  Mat h = x;
  const size_t n_layers = spec.sizes.size() - 1;
  for (size_t l = 0; l < n_layers; ++l) {
    const std::string id = std::to_string(l);
    h = (h * params.at(spec.prefix + ".w" + id)).rowwise() +
        Eigen::RowVectorXd(params.at(spec.prefix + ".b" + id).row(0));
    if (l + 1 < n_layers) {
      if (spec.layernorm) h = layernorm_rows_plain(h);
      h = h.array().tanh();
    }
  }
  return h;
}

void init_gru(ParamSet& params, const GRUSpec& spec, std::mt19937_64& rng) {
  auto& t = params.tensors;
  t[spec.prefix + ".wxr"] = glorot(spec.in, spec.hidden, rng);
  t[spec.prefix + ".whr"] = glorot(spec.hidden, spec.hidden, rng);
  t[spec.prefix + ".br"] = Mat::Zero(1, spec.hidden);
  t[spec.prefix + ".wxz"] = glorot(spec.in, spec.hidden, rng);
  t[spec.prefix + ".whz"] = glorot(spec.hidden, spec.hidden, rng);
  t[spec.prefix + ".bz"] = Mat::Zero(1, spec.hidden);
  t[spec.prefix + ".wxn"] = glorot(spec.in, spec.hidden, rng);
  t[spec.prefix + ".whn"] = glorot(spec.hidden, spec.hidden, rng);
  t[spec.prefix + ".bnx"] = Mat::Zero(1, spec.hidden);
  t[spec.prefix + ".bnh"] = Mat::Zero(1, spec.hidden);
}

ad::Var gru_step(ad::Graph& g, const ParamVars& v, const GRUSpec& s, ad::Var h, ad::Var x) {
  using namespace ad;
  Var r = sigmoid_(add(affine(x, v.at(s.prefix + ".wxr"), v.at(s.prefix + ".br")),
                       matmul(h, v.at(s.prefix + ".whr"))));
  Var z = sigmoid_(add(affine(x, v.at(s.prefix + ".wxz"), v.at(s.prefix + ".bz")),
                       matmul(h, v.at(s.prefix + ".whz"))));
  Var n = tanh_(add(affine(x, v.at(s.prefix + ".wxn"), v.at(s.prefix + ".bnx")),
                    mul(r, affine(h, v.at(s.prefix + ".whn"), v.at(s.prefix + ".bnh")))));
  // h' = (1 - z) * n + z * h
  Var one_minus_z = add_scalar(scale(z, -1.0), 1.0);
  return add(mul(one_minus_z, n), mul(z, h));
}

static Mat sigmoid_plain(const Mat& x) { return 1.0 / (1.0 + (-x.array()).exp()); }

Mat gru_step(const ParamSet& p, const GRUSpec& s, const Mat& h, const Mat& x) {
  auto lin = [&](const Mat& in, const std::string& w, const std::string& b) {
    return Mat((in * p.at(s.prefix + w)).rowwise() +
               Eigen::RowVectorXd(p.at(s.prefix + b).row(0)));
  };
  Mat r = sigmoid_plain(lin(x, ".wxr", ".br") + h * p.at(s.prefix + ".whr"));
  Mat z = sigmoid_plain(lin(x, ".wxz", ".bz") + h * p.at(s.prefix + ".whz"));
  Mat n = (lin(x, ".wxn", ".bnx").array() +
           (r.array() * lin(h, ".whn", ".bnh").array()))
              .tanh();
  return (1.0 - z.array()) * n.array() + z.array() * h.array();
}

}  // namespace scale::nn
