#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace scale::ad {

using Mat = Eigen::MatrixXd;

class Graph;

// Handle into a Graph; cheap to copy.
struct Var {
  Graph* g = nullptr;
  int idx = -1;

  const Mat& val() const;
  int rows() const { return static_cast<int>(val().rows()); }
  int cols() const { return static_cast<int>(val().cols()); }
  double scalar() const { return val()(0, 0); }
};

// Reverse-mode tape over dense matrices. Nodes are created in topological
// order, so the backward sweep is a single reverse pass.
class Graph {
 public:
  struct Node {
    Mat val;
    Mat grad;
    bool requires_grad = false;
    std::function<void(Graph&, Node&)> back;
  };

  Var leaf(Mat v, bool requires_grad = false);
  Var constant(double v) { return leaf(Mat::Constant(1, 1, v)); }

  Var make(Mat v, bool requires_grad, std::function<void(Graph&, Node&)> back);

  Node& node(int idx) { return nodes_[idx]; }
  const Node& node(int idx) const { return nodes_[idx]; }
  Mat& grad_of(int idx);

  // Seeds `loss` (must be 1x1) with gradient 1 and back-propagates.
  void backward(const Var& loss);

  size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

// --- ops -------------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);
Var add_rowvec(Var x, Var b);   // b: 1 x m, broadcast over rows
Var mul_rowvec(Var x, Var v);   // v: 1 x m, broadcast over rows
Var tanh_(Var a);
Var sigmoid_(Var a);
Var exp_(Var a);
Var log_(Var a);
Var square(Var a);
Var reciprocal(Var a);
Var sum_all(Var a);             // 1 x 1
Var mean_all(Var a);            // 1 x 1
Var rowsum(Var a);              // n x 1
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, int j0, int n);
Var layernorm_rows(Var a, double eps = 1e-5);
Var gather_rows(Var m, const std::vector<int>& indices);
Var stopgrad(Var a);
Var affine(Var x, Var w, Var b);  // x*w + b (b broadcast over rows)

// Mean over rows of the squared L2 norm of each row of (a - b).
Var mean_sq_dist(Var a, Var b);

}  // namespace scale::ad
