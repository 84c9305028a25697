#include "igsd/tensor.hpp"

#include <cmath>
#include <utility>

namespace igsd {

namespace {

thread_local std::vector<Tape*> g_tape_stack;
thread_local int g_nograd_depth = 0;

using NodePtr = std::shared_ptr<detail::TensorNode>;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
}

}  // namespace

Tensor make_op_output(Mat value, const std::vector<Tensor>& parents, const char* op,
                      std::function<void(detail::TensorNode&)> backward) {
  if (!value.allFinite()) throw NumericalError(std::string(op) + ": produced non-finite values");
  bool needs_grad = false;
  if (Tape::recording())
    for (const Tensor& p : parents) needs_grad = needs_grad || p.requires_grad();
  auto node = std::make_shared<detail::TensorNode>(std::move(value), needs_grad);
  if (needs_grad) {
    node->tape = Tape::active();
    Tape::active()->record(node, std::move(backward));
  }
  return Tensor(node);
}

Tensor Tensor::leaf(Mat value, bool requires_grad) {
  if (!value.allFinite()) throw NumericalError("leaf tensor holds non-finite values");
  return Tensor(std::make_shared<detail::TensorNode>(std::move(value), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  Mat m(1, 1);
  m(0, 0) = value;
  return leaf(std::move(m), requires_grad);
}

double Tensor::item() const {
  if (!is_scalar()) throw ShapeError("item: tensor is not scalar");
  return node_->value(0, 0);
}

const Mat& Tensor::grad() const {
  if (!node_->has_grad) throw StateError("tensor has no gradient");
  return node_->grad;
}

void Tensor::ensure_grad() {
  if (!node_->has_grad) {
    node_->grad = Mat::Zero(rows(), cols());
    node_->has_grad = true;
  }
}

Tape::Tape() { g_tape_stack.push_back(this); }

Tape::~Tape() {
  if (!g_tape_stack.empty() && g_tape_stack.back() == this) g_tape_stack.pop_back();
}

Tape* Tape::active() { return g_tape_stack.empty() ? nullptr : g_tape_stack.back(); }

bool Tape::recording() { return active() != nullptr && g_nograd_depth == 0; }

void Tape::record(std::shared_ptr<detail::TensorNode> out,
                  std::function<void(detail::TensorNode&)> fn) {
  records_.push_back({std::move(out), std::move(fn)});
}

void Tape::replay_backward(const std::shared_ptr<detail::TensorNode>& loss) {
  // Intermediate gradients are scratch state of one sweep; only leaves
  // (parameters) accumulate across sweeps.
  for (Record& r : records_) r.out->clear_grad();
  loss->accumulate(Mat::Ones(1, 1));
  for (auto it = records_.rbegin(); it != records_.rend(); ++it)
    if (it->out->has_grad) it->fn(*it->out);
}

NoGrad::NoGrad() { ++g_nograd_depth; }
NoGrad::~NoGrad() { --g_nograd_depth; }

void backward(const Tensor& loss) {
  if (!loss.defined()) throw StateError("backward: undefined tensor");
  if (!loss.is_scalar()) throw ShapeError("backward: loss must be a scalar");
  detail::TensorNode* node = loss.node().get();
  if (node->tape == nullptr || node->tape != Tape::active())
    throw StateError("backward: loss is not on the active tape");
  node->tape->replay_backward(loss.node());
}

// ---- kernels ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  NodePtr an = a.node(), bn = b.node();
  return make_op_output(an->value * bn->value, {a, b}, "matmul", [an, bn](detail::TensorNode& out) {
    if (an->requires_grad) an->accumulate(out.grad * bn->value.transpose());
    if (bn->requires_grad) bn->accumulate(an->value.transpose() * out.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  NodePtr an = a.node(), bn = b.node();
  if (b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols()) {
    Mat value = an->value.rowwise() + bn->value.row(0);
    return make_op_output(std::move(value), {a, b}, "add", [an, bn](detail::TensorNode& out) {
      if (an->requires_grad) an->accumulate(out.grad);
      if (bn->requires_grad) bn->accumulate(out.grad.colwise().sum());
    });
  }
  check_same_shape(a, b, "add");
  return make_op_output(an->value + bn->value, {a, b}, "add", [an, bn](detail::TensorNode& out) {
    if (an->requires_grad) an->accumulate(out.grad);
    if (bn->requires_grad) bn->accumulate(out.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  NodePtr an = a.node(), bn = b.node();
  if (b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols()) {
    Mat value = an->value.rowwise() - bn->value.row(0);
    return make_op_output(std::move(value), {a, b}, "sub", [an, bn](detail::TensorNode& out) {
      if (an->requires_grad) an->accumulate(out.grad);
      if (bn->requires_grad) bn->accumulate(-out.grad.colwise().sum());
    });
  }
  check_same_shape(a, b, "sub");
  return make_op_output(an->value - bn->value, {a, b}, "sub", [an, bn](detail::TensorNode& out) {
    if (an->requires_grad) an->accumulate(out.grad);
    if (bn->requires_grad) bn->accumulate(-out.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  NodePtr an = a.node(), bn = b.node();
  return make_op_output(an->value.cwiseProduct(bn->value), {a, b}, "mul",
                        [an, bn](detail::TensorNode& out) {
                          if (an->requires_grad) an->accumulate(out.grad.cwiseProduct(bn->value));
                          if (bn->requires_grad) bn->accumulate(out.grad.cwiseProduct(an->value));
                        });
}

Tensor scale(const Tensor& x, double c) {
  NodePtr xn = x.node();
  return make_op_output(c * xn->value, {x}, "scale", [xn, c](detail::TensorNode& out) {
    if (xn->requires_grad) xn->accumulate(c * out.grad);
  });
}

Tensor affine(const Tensor& x, double a, double b) {
  NodePtr xn = x.node();
  Mat value = (a * xn->value).array() + b;
  return make_op_output(std::move(value), {x}, "affine", [xn, a](detail::TensorNode& out) {
    if (xn->requires_grad) xn->accumulate(a * out.grad);
  });
}

Tensor relu(const Tensor& x) {
  NodePtr xn = x.node();
  return make_op_output(xn->value.cwiseMax(0.0), {x}, "relu", [xn](detail::TensorNode& out) {
    if (xn->requires_grad)
      xn->accumulate((xn->value.array() > 0.0).select(out.grad, Mat::Zero(out.grad.rows(), out.grad.cols())));
  });
}

Tensor exp(const Tensor& x) {
  NodePtr xn = x.node();
  return make_op_output(xn->value.array().exp().matrix(), {x}, "exp", [xn](detail::TensorNode& out) {
    if (xn->requires_grad) xn->accumulate(out.grad.cwiseProduct(out.value));
  });
}

Tensor log(const Tensor& x) {
  NodePtr xn = x.node();
  if ((xn->value.array() <= 0.0).any()) throw NumericalError("log: non-positive input");
  return make_op_output(xn->value.array().log().matrix(), {x}, "log", [xn](detail::TensorNode& out) {
    if (xn->requires_grad) xn->accumulate(out.grad.cwiseQuotient(xn->value));
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row counts differ");
  NodePtr an = a.node(), bn = b.node();
  Mat value(a.rows(), a.cols() + b.cols());
  value << an->value, bn->value;
  const auto ca = a.cols();
  return make_op_output(std::move(value), {a, b}, "concat_cols", [an, bn, ca](detail::TensorNode& out) {
    if (an->requires_grad) an->accumulate(out.grad.leftCols(ca));
    if (bn->requires_grad) bn->accumulate(out.grad.rightCols(out.grad.cols() - ca));
  });
}

Tensor sum_rows(const Tensor& x) {
  NodePtr xn = x.node();
  Mat value = xn->value.colwise().sum();
  const auto n = x.rows();
  return make_op_output(std::move(value), {x}, "sum_rows", [xn, n](detail::TensorNode& out) {
    if (xn->requires_grad) xn->accumulate(out.grad.replicate(n, 1));
  });
}

Tensor sum_all(const Tensor& x) {
  NodePtr xn = x.node();
  Mat value(1, 1);
  value(0, 0) = xn->value.sum();
  return make_op_output(std::move(value), {x}, "sum_all", [xn](detail::TensorNode& out) {
    if (xn->requires_grad)
      xn->accumulate(Mat::Constant(xn->value.rows(), xn->value.cols(), out.grad(0, 0)));
  });
}

Tensor l2_normalize_rows(const Tensor& x) {
  NodePtr xn = x.node();
  Vec norms = xn->value.rowwise().norm();
  if ((norms.array() < 1e-12).any())
    throw NumericalError("l2_normalize_rows: row with near-zero norm");
  Mat value = norms.cwiseInverse().asDiagonal() * xn->value;
  return make_op_output(std::move(value), {x}, "l2_normalize_rows",
                        [xn, norms](detail::TensorNode& out) {
                          if (!xn->requires_grad) return;
                          Mat dx(out.grad.rows(), out.grad.cols());
                          for (Eigen::Index i = 0; i < out.grad.rows(); ++i) {
                            const auto g = out.grad.row(i);
                            const auto y = out.value.row(i);
                            dx.row(i) = (g - g.dot(y) * y) / norms(i);
                          }
                          xn->accumulate(dx);
                        });
}

Tensor softmax_rows(const Tensor& x) {
  NodePtr xn = x.node();
  Mat value = xn->value;
  for (Eigen::Index i = 0; i < value.rows(); ++i) {
    const double m = value.row(i).maxCoeff();
    value.row(i) = (value.row(i).array() - m).exp();
    value.row(i) /= value.row(i).sum();
  }
  return make_op_output(std::move(value), {x}, "softmax_rows", [xn](detail::TensorNode& out) {
    if (!xn->requires_grad) return;
    Mat dx(out.grad.rows(), out.grad.cols());
    for (Eigen::Index i = 0; i < out.grad.rows(); ++i) {
      const auto g = out.grad.row(i);
      const auto y = out.value.row(i);
      dx.row(i) = (y.array() * (g.array() - g.dot(y))).matrix();
    }
    xn->accumulate(dx);
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  NodePtr xn = x.node();
  Mat value = xn->value;
  for (Eigen::Index i = 0; i < value.rows(); ++i) {
    const double m = value.row(i).maxCoeff();
    const double lse = m + std::log((value.row(i).array() - m).exp().sum());
    value.row(i) = value.row(i).array() - lse;
  }
  return make_op_output(std::move(value), {x}, "log_softmax_rows", [xn](detail::TensorNode& out) {
    if (!xn->requires_grad) return;
    Mat dx(out.grad.rows(), out.grad.cols());
    for (Eigen::Index i = 0; i < out.grad.rows(); ++i) {
      const auto g = out.grad.row(i);
      const Eigen::RowVectorXd s = out.value.row(i).array().exp();
      dx.row(i) = g - g.sum() * s;
    }
    xn->accumulate(dx);
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: empty input");
  const auto d = rows.front().cols();
  Mat value(static_cast<Eigen::Index>(rows.size()), d);
  std::vector<NodePtr> parents;
  parents.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].rows() != 1 || rows[i].cols() != d)
      throw ShapeError("stack_rows: every input must be 1 x d with matching d");
    value.row(static_cast<Eigen::Index>(i)) = rows[i].value().row(0);
    parents.push_back(rows[i].node());
  }
  return make_op_output(std::move(value), rows, "stack_rows",
                        [parents](detail::TensorNode& out) {
                          for (std::size_t i = 0; i < parents.size(); ++i)
                            if (parents[i]->requires_grad)
                              parents[i]->accumulate(out.grad.row(static_cast<Eigen::Index>(i)));
                        });
}

Tensor pick_per_row(const Tensor& x, const std::vector<int>& cols) {
  if (static_cast<Eigen::Index>(cols.size()) != x.rows())
    throw ShapeError("pick_per_row: need one column index per row");
  NodePtr xn = x.node();
  Mat value(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (cols[i] < 0 || cols[i] >= x.cols()) throw ShapeError("pick_per_row: column index out of range");
    value(i, 0) = xn->value(i, cols[i]);
  }
  return make_op_output(std::move(value), {x}, "pick_per_row", [xn, cols](detail::TensorNode& out) {
    if (!xn->requires_grad) return;
    Mat dx = Mat::Zero(xn->value.rows(), xn->value.cols());
    for (Eigen::Index i = 0; i < out.grad.rows(); ++i) dx(i, cols[i]) = out.grad(i, 0);
    xn->accumulate(dx);
  });
}

std::vector<Tensor> param_values(const ParamMap& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& [name, tensor] : params) out.push_back(tensor);
  return out;
}

}  // namespace igsd
