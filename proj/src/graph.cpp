#include "scale/graph.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace scale::ad {

const Mat& Var::val() const { return g->node(idx).val; }

Var Graph::leaf(Mat v, bool requires_grad) {
  nodes_.push_back(Node{std::move(v), {}, requires_grad, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::make(Mat v, bool requires_grad, std::function<void(Graph&, Node&)> back) {
  nodes_.push_back(Node{std::move(v), {}, requires_grad, std::move(back)});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Mat& Graph::grad_of(int idx) {
  Node& n = nodes_[idx];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
  return n.grad;
}

void Graph::backward(const Var& loss) {
  if (loss.val().rows() != 1 || loss.val().cols() != 1) {
    throw std::runtime_error("backward: loss must be 1x1");
  }
  grad_of(loss.idx)(0, 0) = 1.0;
  for (int i = loss.idx; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.grad.size() != 0 && n.requires_grad) n.back(*this, n);
  }
}

static bool rg(Var a) { return a.g->node(a.idx).requires_grad; }

Var add(Var a, Var b) {
  Graph& g = *a.g;
  return g.make(a.val() + b.val(), rg(a) || rg(b), [a, b](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx) += n.grad;
    if (rg(b)) g.grad_of(b.idx) += n.grad;
  });
}

Var sub(Var a, Var b) {
  Graph& g = *a.g;
  return g.make(a.val() - b.val(), rg(a) || rg(b), [a, b](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx) += n.grad;
    if (rg(b)) g.grad_of(b.idx) -= n.grad;
  });
}

Var mul(Var a, Var b) {
  Graph& g = *a.g;
  return g.make(a.val().cwiseProduct(b.val()), rg(a) || rg(b),
                [a, b](Graph& g, Graph::Node& n) {
                  if (rg(a)) g.grad_of(a.idx) += n.grad.cwiseProduct(b.val());
                  if (rg(b)) g.grad_of(b.idx) += n.grad.cwiseProduct(a.val());
                });
}

Var scale(Var a, double s) {
  Graph& g = *a.g;
  return g.make(a.val() * s, rg(a), [a, s](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx) += n.grad * s;
  });
}

Var add_scalar(Var a, double s) {
  Graph& g = *a.g;
  return g.make(a.val().array() + s, rg(a), [a](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx) += n.grad;
  });
}

Var matmul(Var a, Var b) {
  Graph& g = *a.g;
  return g.make(a.val() * b.val(), rg(a) || rg(b), [a, b](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx) += n.grad * b.val().transpose();
    if (rg(b)) g.grad_of(b.idx) += a.val().transpose() * n.grad;
  });
}

Var add_rowvec(Var x, Var b) {
  Graph& g = *x.g;
  Mat out = x.val();
  out.rowwise() += Eigen::RowVectorXd(b.val().row(0));
  return g.make(std::move(out), rg(x) || rg(b), [x, b](Graph& g, Graph::Node& n) {
    if (rg(x)) g.grad_of(x.idx) += n.grad;
    if (rg(b)) g.grad_of(b.idx).row(0) += n.grad.colwise().sum();
  });
}

Var mul_rowvec(Var x, Var v) {
  Graph& g = *x.g;
  Mat out = x.val().array().rowwise() * v.val().row(0).array();
  return g.make(std::move(out), rg(x) || rg(v), [x, v](Graph& g, Graph::Node& n) {
    if (rg(x)) g.grad_of(x.idx).array() += n.grad.array().rowwise() * v.val().row(0).array();
    if (rg(v)) g.grad_of(v.idx).row(0) += n.grad.cwiseProduct(x.val()).colwise().sum();
  });
}

Var tanh_(Var a) {
  Graph& g = *a.g;
  Mat out = a.val().array().tanh();
  Var r = g.make(out, rg(a), nullptr);
  g.node(r.idx).back = [a, r](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx).array() += n.grad.array() * (1.0 - r.val().array().square());
  };
  return r;
}

Var sigmoid_(Var a) {
  Graph& g = *a.g;
  Mat out = (1.0 / (1.0 + (-a.val().array()).exp()));
  Var r = g.make(out, rg(a), nullptr);
  g.node(r.idx).back = [a, r](Graph& g, Graph::Node& n) {
    if (rg(a))
      g.grad_of(a.idx).array() += n.grad.array() * r.val().array() * (1.0 - r.val().array());
  };
  return r;
}

Var exp_(Var a) {
  Graph& g = *a.g;
  Mat out = a.val().array().exp();
  Var r = g.make(out, rg(a), nullptr);
  g.node(r.idx).back = [a, r](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx).array() += n.grad.array() * r.val().array();
  };
  return r;
}

Var log_(Var a) {
  Graph& g = *a.g;
  return g.make(a.val().array().log(), rg(a), [a](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx).array() += n.grad.array() / a.val().array();
  });
}

Var square(Var a) {
  Graph& g = *a.g;
  return g.make(a.val().array().square(), rg(a), [a](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx).array() += 2.0 * n.grad.array() * a.val().array();
  });
}

Var reciprocal(Var a) {
  Graph& g = *a.g;
  return g.make(a.val().cwiseInverse(), rg(a), [a](Graph& g, Graph::Node& n) {
    if (rg(a))
      g.grad_of(a.idx).array() -= n.grad.array() / a.val().array().square();
  });
}

Var sum_all(Var a) {
  Graph& g = *a.g;
  return g.make(Mat::Constant(1, 1, a.val().sum()), rg(a), [a](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx).array() += n.grad(0, 0);
  });
}

Var mean_all(Var a) {
  Graph& g = *a.g;
  const double inv = 1.0 / static_cast<double>(a.val().size());
  return g.make(Mat::Constant(1, 1, a.val().sum() * inv), rg(a),
                [a, inv](Graph& g, Graph::Node& n) {
                  if (rg(a)) g.grad_of(a.idx).array() += n.grad(0, 0) * inv;
                });
}

Var rowsum(Var a) {
  Graph& g = *a.g;
  return g.make(a.val().rowwise().sum(), rg(a), [a](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx).colwise() += Eigen::VectorXd(n.grad.col(0));
  });
}

Var concat_cols(Var a, Var b) {
  Graph& g = *a.g;
  Mat out(a.val().rows(), a.val().cols() + b.val().cols());
  out << a.val(), b.val();
  const int ca = static_cast<int>(a.val().cols());
  const int cb = static_cast<int>(b.val().cols());
  return g.make(std::move(out), rg(a) || rg(b), [a, b, ca, cb](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx) += n.grad.leftCols(ca);
    if (rg(b)) g.grad_of(b.idx) += n.grad.rightCols(cb);
  });
}

Var slice_cols(Var a, int j0, int nc) {
  Graph& g = *a.g;
  return g.make(a.val().middleCols(j0, nc), rg(a), [a, j0, nc](Graph& g, Graph::Node& n) {
    if (rg(a)) g.grad_of(a.idx).middleCols(j0, nc) += n.grad;
  });
}

Var layernorm_rows(Var a, double eps) {
  Graph& g = *a.g;
  const Mat& x = a.val();
  const int d = static_cast<int>(x.cols());
  Eigen::VectorXd mean = x.rowwise().mean();
  Mat centered = x.colwise() - mean;
  Eigen::VectorXd var = centered.array().square().rowwise().mean();
  Eigen::VectorXd inv_std = (var.array() + eps).sqrt().inverse();
  Mat y = centered.array().colwise() * inv_std.array();
  Var r = g.make(y, rg(a), nullptr);
  g.node(r.idx).back = [a, r, inv_std, d](Graph& g, Graph::Node& n) {
    if (!rg(a)) return;
    const Mat& y = r.val();
    const Mat& dy = n.grad;
    Eigen::VectorXd m1 = dy.rowwise().mean();
    Eigen::VectorXd m2 = dy.cwiseProduct(y).rowwise().mean();
    Mat dx = dy;
    dx.colwise() -= m1;
    dx.array() -= y.array().colwise() * m2.array();
    dx.array() = dx.array().colwise() * inv_std.array();
    g.grad_of(a.idx) += dx;
  };
  return r;
}

Var gather_rows(Var m, const std::vector<int>& indices) {
  Graph& g = *m.g;
  Mat out(indices.size(), m.val().cols());
  for (size_t i = 0; i < indices.size(); ++i) out.row(i) = m.val().row(indices[i]);
  return g.make(std::move(out), rg(m), [m, indices](Graph& g, Graph::Node& n) {
    if (!rg(m)) return;
    Mat& grad = g.grad_of(m.idx);
    for (size_t i = 0; i < indices.size(); ++i) grad.row(indices[i]) += n.grad.row(i);
  });
}

Var stopgrad(Var a) { return a.g->leaf(a.val()); }

Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

Var mean_sq_dist(Var a, Var b) { return scale(mean_all(square(sub(a, b))), b.val().cols()); }

}  // namespace scale::ad
