#include "lggd/autodiff.hpp"

#include <cmath>

#include "lggd/error.hpp"

namespace lggd::ad {

double softplus(double x) noexcept { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, requires_grad ? std::move(backward) : Backward{}});
  return Var{nodes_.size() - 1};
}

bool Tape::any_requires_grad(std::initializer_list<Var> inputs) const {
  for (auto v : inputs) {
    if (nodes_[v.id].requires_grad) return true;
  }
  return false;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }
Var Tape::parameter(Matrix value) { return push(std::move(value), true, {}); }

Matrix Tape::grad(Var v) const {
  const auto& node = nodes_[v.id];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  auto& node = nodes_[v.id];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw Error(ErrorCode::ShapeMismatch, "matmul inner dimensions");
  Matrix out = value(a) * value(b);
  return push(std::move(out), any_requires_grad({a, b}), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var Tape::spmm(const SparseMatrix& a, Var x) {
  if (a.cols() != value(x).rows()) throw Error(ErrorCode::ShapeMismatch, "spmm inner dimensions");
  Matrix out = a * value(x);
  const SparseMatrix* ap = &a;
  return push(std::move(out), requires_grad(x), [ap, x](Tape& t, const Matrix& g) {
    t.accumulate(x, ap->transpose() * g);
  });
}

Var Tape::add_row(Var x, Var bias) {
  if (value(bias).rows() != 1 || value(bias).cols() != value(x).cols()) {
    throw Error(ErrorCode::ShapeMismatch, "bias must be 1 x cols");
  }
  Matrix out = value(x);
  out.rowwise() += value(bias).row(0);
  return push(std::move(out), any_requires_grad({x, bias}), [x, bias](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, g);
    if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
  });
}

Var Tape::relu(Var x) {
  Matrix out = value(x).cwiseMax(0.0);
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, (t.value(x).array() > 0.0).select(g, 0.0));
  });
}

Var Tape::softplus(Var x) {
  Matrix out = value(x).unaryExpr([](double v) { return ad::softplus(v); });
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(t.value(x).unaryExpr([](double v) { return sigmoid(v); })));
  });
}

Var Tape::mask(Var x, Matrix m) {
  if (m.rows() != value(x).rows() || m.cols() != value(x).cols()) throw Error(ErrorCode::ShapeMismatch, "mask shape");
  Matrix out = value(x).cwiseProduct(m);
  return push(std::move(out), requires_grad(x), [x, m = std::move(m)](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(m));
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::vector<std::size_t> rows, std::vector<int> labels) {
  const Matrix& z = value(logits);
  if (rows.empty()) throw Error(ErrorCode::EmptySplit, "cross-entropy over no rows");
  if (rows.size() != labels.size()) throw Error(ErrorCode::SizeMismatch, "rows/labels");
  Matrix probs(static_cast<Eigen::Index>(rows.size()), z.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = z.row(static_cast<Eigen::Index>(rows[r]));
    if (labels[r] < 0 || labels[r] >= z.cols()) throw Error(ErrorCode::LabelOutOfRange, "label");
    const double mx = row.maxCoeff();
    const auto shifted = (row.array() - mx).exp();
    const double denom = shifted.sum();
    probs.row(static_cast<Eigen::Index>(r)) = shifted / denom;
    loss += mx + std::log(denom) - row(labels[r]);
  }
  const double scale = 1.0 / static_cast<double>(rows.size());
  Matrix out(1, 1);
  out(0, 0) = loss * scale;
  return push(std::move(out), requires_grad(logits),
              [logits, rows = std::move(rows), labels = std::move(labels), probs = std::move(probs), scale](
                  Tape& t, const Matrix& g) {
                Matrix dz = Matrix::Zero(t.value(logits).rows(), t.value(logits).cols());
                for (std::size_t r = 0; r < rows.size(); ++r) {
                  auto drow = dz.row(static_cast<Eigen::Index>(rows[r]));
                  drow += probs.row(static_cast<Eigen::Index>(r)) * (scale * g(0, 0));
                  drow(labels[r]) -= scale * g(0, 0);
                }
                t.accumulate(logits, dz);
              });
}

Var Tape::custom(Matrix value, std::vector<Var> inputs, Backward backward) {
  bool needs = false;
  for (auto v : inputs) needs = needs || requires_grad(v);
  return push(std::move(value), needs, std::move(backward));
}

void Tape::backward(Var target) {
  if (value(target).rows() != 1 || value(target).cols() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "backward target must be a scalar");
  }
  for (auto& node : nodes_) node.grad.resize(0, 0);
  nodes_[target.id].grad = Matrix::Ones(1, 1);
  for (std::size_t id = target.id + 1; id-- > 0;) {
    auto& node = nodes_[id];
    if (!node.backward || node.grad.size() == 0) continue;
    // Copy: the callback may grow other nodes' gradients but never this one's.
    const Matrix g = node.grad;
    node.backward(*this, g);
  }
}

}  // namespace lggd::ad
