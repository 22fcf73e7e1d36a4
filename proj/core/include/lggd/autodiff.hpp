#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lggd::ad {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Var {
  std::size_t id;
};

/// Minimal reverse-mode tape over dense matrices. Nodes are appended in
/// evaluation order; backward() walks them in reverse and accumulates input
/// gradients in a fixed order, so results do not depend on scheduling.
class Tape {
 public:
  /// Backward callback: receives the node's output gradient and the tape, and
  /// adds into the inputs' gradients through accumulate().
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient of the last backward() target; zero matrix when the node did
  /// not influence it.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  Var matmul(Var a, Var b);
  /// A * x for a sparse A that must outlive the tape.
  Var spmm(const SparseMatrix& a, Var x);
  /// x + 1 * bias for a 1 x cols bias row.
  Var add_row(Var x, Var bias);
  Var relu(Var x);
  Var softplus(Var x);
  /// Elementwise product with a constant mask (dropout).
  Var mask(Var x, Matrix mask);
  /// Mean softmax cross-entropy of the selected rows of `logits`.
  Var softmax_cross_entropy(Var logits, std::vector<std::size_t> rows, std::vector<int> labels);

  /// Arbitrary differentiable node. `backward` must call accumulate() for
  /// each input that requires a gradient.
  Var custom(Matrix value, std::vector<Var> inputs, Backward backward);

  void accumulate(Var v, const Matrix& g);

  /// Seeds d(target)/d(target) = 1 for a 1x1 target and runs the reverse pass.
  void backward(Var target);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Matrix value, bool requires_grad, Backward backward);
  bool any_requires_grad(std::initializer_list<Var> inputs) const;

  std::vector<Node> nodes_;
};

double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

}  // namespace lggd::ad
