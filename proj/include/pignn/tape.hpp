#pragma once

#include <Eigen/Dense>

#include "pignn/errors.hpp"

#include <functional>
#include <string>
#include <vector>

// Reverse-mode differentiation over dense float64 matrices.
//
// Every value is a matrix; vectors are n x 1 columns and scalars are 1 x 1.
// Nodes are appended to a Tape in creation order, which is a topological
// order, so backward is a single reverse sweep.
namespace pignn::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  // Zero matrix of the value's shape until a backward pass reaches the node.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  int id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

  // Scalar value of a 1 x 1 tensor.
  double item() const;

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the node's accumulated output gradient and adds into parents.
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Matrix value, bool requires_grad = true);
  Tensor constant(Matrix value) { return leaf(std::move(value), false); }

  // Records an operation. backward is dropped when no parent requires grad.
  Tensor record(Matrix value, std::vector<Tensor> parents, BackwardFn backward);

  // Seeds d root / d root = 1 and sweeps back. Intermediate gradients are
  // recomputed each call; leaf gradients accumulate until zero_grad().
  void backward(const Tensor& root);
  void zero_grad();

  // Adds g into the gradient slot of t (used by backward functions).
  void accumulate(const Tensor& t, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Tensor;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool is_leaf = true;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// --- primitives -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);  // derivative at 0 is 0
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor row_sum(const Tensor& a);  // n x p -> n x 1
Tensor col_sum(const Tensor& a);  // n x p -> 1 x p
Tensor sum(const Tensor& a);      // -> 1 x 1
Tensor mean(const Tensor& a);     // -> 1 x 1

// v is n x 1 (applied per row) or 1 x p (applied per column) for an n x p m.
Tensor broadcast_add(const Tensor& m, const Tensor& v);
Tensor broadcast_divide(const Tensor& m, const Tensor& v);
// 1 x 1 tensor repeated to rows x cols.
Tensor broadcast_scalar(const Tensor& s, Eigen::Index rows, Eigen::Index cols);

// Row-major flatten to (rows * cols) x 1.
Tensor flatten(const Tensor& a);
Tensor concat_rows(const Tensor& top, const Tensor& bottom);  // vertical stack
Tensor concat_cols(const Tensor& left, const Tensor& right);  // side by side
Tensor slice(const Tensor& a, Eigen::Index row, Eigen::Index col, Eigen::Index rows,
             Eigen::Index cols);

Tensor logsumexp_rows(const Tensor& a);  // n x p -> n x 1
Tensor logsumexp_cols(const Tensor& a);  // n x p -> 1 x p

// (x - mean) / sqrt(var + eps) * gamma + beta over a column vector x with
// population variance. gamma and beta have x's shape.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// x W + 1 b^T with x n x in, W in x out, b 1 x out.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// --- losses -------------------------------------------------------------------

// logits is k x 1; softmax is folded in.
Tensor softmax_cross_entropy(const Tensor& logits, int class_id);
Tensor l1_loss(const Tensor& pred, const Matrix& target);   // mean |pred - target|
Tensor mse_loss(const Tensor& pred, const Matrix& target);  // mean (pred - target)^2

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

}  // namespace pignn::ad
