#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "igsd/types.hpp"

namespace igsd {

class Tape;

namespace detail {

struct TensorNode {
  Mat value;
  Mat grad;
  bool requires_grad = false;
  bool has_grad = false;
  Tape* tape = nullptr;  // tape this node was recorded on (op outputs only)

  TensorNode(Mat v, bool rg) : value(std::move(v)), requires_grad(rg) {}

  void accumulate(const Mat& g) {
    if (!has_grad) {
      grad = Mat::Zero(value.rows(), value.cols());
      has_grad = true;
    }
    grad += g;
  }
  void clear_grad() {
    has_grad = false;
    grad.resize(0, 0);
  }
};

}  // namespace detail

/// Handle to a dense double-precision matrix participating in reverse-mode
/// differentiation. Rank-1 data is represented as a 1 x n or n x 1 matrix.
class Tensor {
 public:
  Tensor() = default;

  /// A leaf tensor; set requires_grad for trainable parameters.
  static Tensor leaf(Mat value, bool requires_grad = false);
  /// A constant (never receives gradient).
  static Tensor constant(Mat value) { return leaf(std::move(value), false); }
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  Mat& value() { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->has_grad; }
  const Mat& grad() const;
  void zero_grad() { node_->clear_grad(); }
  /// Ensure a (possibly zero) gradient buffer exists; used by training loops
  /// for parameters that legitimately sit outside the current loss path.
  void ensure_grad();

  /// Deep copy of the value into a fresh leaf (no tape history).
  Tensor detached_copy() const { return leaf(node_->value, false); }

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
  friend class Tape;
  friend Tensor make_op_output(Mat value, const std::vector<Tensor>& parents, const char* op,
                               std::function<void(detail::TensorNode&)> backward);
};

/// Ordered record of differentiable operations. Constructing a Tape makes it
/// the active tape for the current thread; ops record themselves onto it in
/// forward order and backward() replays them in exact reverse order.
/// Single-threaded by contract.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();
  /// True when ops should record (a tape is active and no NoGrad guard is).
  static bool recording();

  std::size_t size() const { return records_.size(); }

  void record(std::shared_ptr<detail::TensorNode> out, std::function<void(detail::TensorNode&)> fn);
  void replay_backward(const std::shared_ptr<detail::TensorNode>& loss);

 private:
  struct Record {
    std::shared_ptr<detail::TensorNode> out;
    std::function<void(detail::TensorNode&)> fn;
  };
  std::vector<Record> records_;
};

/// RAII guard that suspends gradient recording (teacher paths, evaluation).
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;
};

/// Reverse pass from a scalar loss recorded on the active tape. Gradients of
/// leaf parameters accumulate across calls; intermediate gradients are
/// recomputed each call.
void backward(const Tensor& loss);

// ---- differentiable kernels ----------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
/// Elementwise add; `b` may also be a 1 x c row broadcast across a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise (Hadamard) product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
/// Elementwise a*x + b with constant coefficients.
Tensor affine(const Tensor& x, double a, double b);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// Sum over rows: [n x c] -> [1 x c].
Tensor sum_rows(const Tensor& x);
Tensor sum_all(const Tensor& x);
/// Scale every row to unit L2 norm; rows with norm < 1e-12 raise.
Tensor l2_normalize_rows(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
/// Numerically stable log-softmax per row.
Tensor log_softmax_rows(const Tensor& x);
/// Stack B tensors of shape [1 x d] into [B x d].
Tensor stack_rows(const std::vector<Tensor>& rows);
/// Select one column per row: out[i, 0] = x[i, cols[i]].
Tensor pick_per_row(const Tensor& x, const std::vector<int>& cols);

/// Named parameter collection (ordered for deterministic iteration).
using ParamMap = std::map<std::string, Tensor>;

std::vector<Tensor> param_values(const ParamMap& params);

}  // namespace igsd
