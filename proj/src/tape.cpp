#include "pignn/tape.hpp"

#include <cmath>
#include <limits>

namespace pignn::ad {

namespace {

std::string shape(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

std::string shape(const Tensor& t) { return shape(t.value()); }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw SizeError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

void require_same_tape(const char* op, const Tensor& a, const Tensor& b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op) + ": tensors on different tapes");
}

enum class Axis { PerRow, PerCol };

Axis broadcast_axis(const char* op, const Tensor& m, const Tensor& v) {
  if (v.cols() == 1 && v.rows() == m.rows()) return Axis::PerRow;
  if (v.rows() == 1 && v.cols() == m.cols()) return Axis::PerCol;
  throw SizeError(std::string(op) + ": cannot broadcast " + shape(v) + " over " + shape(m));
}

// Row-wise log-sum-exp of m, stable under large entries.
Eigen::VectorXd lse_rows(const Matrix& m) {
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    if (!std::isfinite(mx)) {
      out[i] = mx;
      continue;
    }
    out[i] = mx + std::log((m.row(i).array() - mx).exp().sum());
  }
  return out;
}

}  // namespace

const Matrix& Tensor::value() const { return tape_->nodes_.at(id_).value; }
const Matrix& Tensor::grad() const { return tape_->nodes_.at(id_).grad; }
bool Tensor::requires_grad() const { return tape_->nodes_.at(id_).requires_grad; }

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw SizeError("item: tensor is " + shape(v) + ", expected 1x1");
  return v(0, 0);
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
  Node node;
  node.grad = Matrix::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.is_leaf = true;
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor Tape::record(Matrix value, std::vector<Tensor> parents, BackwardFn backward) {
  Node node;
  node.grad = Matrix::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.is_leaf = false;
  for (const auto& p : parents) {
    if (&p.tape() != this) throw std::invalid_argument("record: parent on a different tape");
    node.requires_grad = node.requires_grad || p.requires_grad();
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  Node& node = nodes_.at(t.id());
  if (!node.requires_grad) return;
  node.grad += g;
}

void Tape::backward(const Tensor& root) {
  if (&root.tape() != this) throw std::invalid_argument("backward: root on a different tape");
  if (root.value().size() != 1) {
    throw SizeError("backward: root must be scalar, got " + shape(root.value()));
  }
  for (auto& node : nodes_)
    if (!node.is_leaf) node.grad.setZero();
  nodes_[root.id()].grad(0, 0) += 1.0;
  for (int i = root.id(); i >= 0; --i) {
    Node& node = nodes_[i];
    if (node.is_leaf || !node.requires_grad || !node.backward) continue;
    // Copy: backward functions only touch parents (lower ids), but keep the
    // gradient stable regardless.
    const Matrix g = node.grad;
    node.backward(*this, g);
  }
}

void Tape::zero_grad() {
  for (auto& node : nodes_) node.grad.setZero();
}

// --- primitives -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape("matmul", a, b);
  if (a.cols() != b.rows()) throw SizeError("matmul: shape mismatch " + shape(a) + " * " + shape(b));
  return a.tape().record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g * b.value().transpose());
    t.accumulate(b, a.value().transpose() * g);
  });
}

Tensor transpose(const Tensor& a) {
  return a.tape().record(a.value().transpose(), {a},
                         [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_tape("add", a, b);
  require_same_shape("add", a, b);
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_tape("sub", a, b);
  require_same_shape("sub", a, b);
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_tape("mul", a, b);
  require_same_shape("mul", a, b);
  return a.tape().record(a.value().cwiseProduct(b.value()), {a, b},
                         [a, b](Tape& t, const Matrix& g) {
                           t.accumulate(a, g.cwiseProduct(b.value()));
                           t.accumulate(b, g.cwiseProduct(a.value()));
                         });
}

Tensor scale(const Tensor& a, double s) {
  return a.tape().record(a.value() * s, {a},
                         [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Tensor relu(const Tensor& a) {
  return a.tape().record(a.value().cwiseMax(0.0), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
  });
}

Tensor exp(const Tensor& a) {
  Matrix out = a.value().array().exp();
  return a.tape().record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(out));
  });
}

Tensor log(const Tensor& a) {
  return a.tape().record(a.value().array().log(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseQuotient(a.value()));
  });
}

Tensor sqrt(const Tensor& a) {
  Matrix out = a.value().cwiseSqrt();
  return a.tape().record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a, (0.5 * g.array() / out.array()).matrix());
  });
}

Tensor row_sum(const Tensor& a) {
  return a.tape().record(a.value().rowwise().sum(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g * Matrix::Ones(1, a.cols()));
  });
}

Tensor col_sum(const Tensor& a) {
  return a.tape().record(a.value().colwise().sum(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Ones(a.rows(), 1) * g);
  });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(out, {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  if (a.value().size() == 0) throw SizeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Tensor broadcast_add(const Tensor& m, const Tensor& v) {
  require_same_tape("broadcast_add", m, v);
  const Axis axis = broadcast_axis("broadcast_add", m, v);
  Matrix out = m.value();
  if (axis == Axis::PerRow) {
    out.colwise() += v.value().col(0);
  } else {
    out.rowwise() += v.value().row(0);
  }
  return m.tape().record(std::move(out), {m, v}, [m, v, axis](Tape& t, const Matrix& g) {
    t.accumulate(m, g);
    t.accumulate(v, axis == Axis::PerRow ? Matrix(g.rowwise().sum()) : Matrix(g.colwise().sum()));
  });
}

Tensor broadcast_divide(const Tensor& m, const Tensor& v) {
  require_same_tape("broadcast_divide", m, v);
  const Axis axis = broadcast_axis("broadcast_divide", m, v);
  Matrix out = m.value();
  if (axis == Axis::PerRow) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= v.value()(i, 0);
  } else {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j) /= v.value()(0, j);
  }
  return m.tape().record(out, {m, v}, [m, v, axis, out](Tape& t, const Matrix& g) {
    Matrix gm = g;
    if (axis == Axis::PerRow) {
      for (Eigen::Index i = 0; i < gm.rows(); ++i) gm.row(i) /= v.value()(i, 0);
      // d(out_ij)/d(v_i) = -out_ij / v_i
      Matrix gv = -(g.cwiseProduct(out)).rowwise().sum();
      gv = gv.cwiseQuotient(v.value());
      t.accumulate(v, gv);
    } else {
      for (Eigen::Index j = 0; j < gm.cols(); ++j) gm.col(j) /= v.value()(0, j);
      Matrix gv = -(g.cwiseProduct(out)).colwise().sum();
      gv = gv.cwiseQuotient(v.value());
      t.accumulate(v, gv);
    }
    t.accumulate(m, gm);
  });
}

Tensor broadcast_scalar(const Tensor& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.value().size() != 1) throw SizeError("broadcast_scalar: expected 1x1, got " + shape(s));
  return s.tape().record(Matrix::Constant(rows, cols, s.item()), {s},
                         [s](Tape& t, const Matrix& g) {
                           t.accumulate(s, Matrix::Constant(1, 1, g.sum()));
                         });
}

Tensor flatten(const Tensor& a) {
  const Eigen::Index r = a.rows(), c = a.cols();
  Matrix out(r * c, 1);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) out(i * c + j, 0) = a.value()(i, j);
  return a.tape().record(std::move(out), {a}, [a, r, c](Tape& t, const Matrix& g) {
    Matrix ga(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) ga(i, j) = g(i * c + j, 0);
    t.accumulate(a, ga);
  });
}

Tensor concat_rows(const Tensor& top, const Tensor& bottom) {
  require_same_tape("concat_rows", top, bottom);
  if (top.cols() != bottom.cols()) {
    throw SizeError("concat_rows: column mismatch " + shape(top) + " vs " + shape(bottom));
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top.value(), bottom.value();
  const Eigen::Index split = top.rows();
  return top.tape().record(std::move(out), {top, bottom},
                           [top, bottom, split](Tape& t, const Matrix& g) {
                             t.accumulate(top, g.topRows(split));
                             t.accumulate(bottom, g.bottomRows(g.rows() - split));
                           });
}

Tensor concat_cols(const Tensor& left, const Tensor& right) {
  require_same_tape("concat_cols", left, right);
  if (left.rows() != right.rows()) {
    throw SizeError("concat_cols: row mismatch " + shape(left) + " vs " + shape(right));
  }
  Matrix out(left.rows(), left.cols() + right.cols());
  out << left.value(), right.value();
  const Eigen::Index split = left.cols();
  return left.tape().record(std::move(out), {left, right},
                            [left, right, split](Tape& t, const Matrix& g) {
                              t.accumulate(left, g.leftCols(split));
                              t.accumulate(right, g.rightCols(g.cols() - split));
                            });
}

Tensor slice(const Tensor& a, Eigen::Index row, Eigen::Index col, Eigen::Index rows,
             Eigen::Index cols) {
  if (row < 0 || col < 0 || rows < 0 || cols < 0 || row + rows > a.rows() || col + cols > a.cols()) {
    throw SizeError("slice: block (" + std::to_string(row) + "," + std::to_string(col) + ") of " +
                    std::to_string(rows) + "x" + std::to_string(cols) + " outside " + shape(a));
  }
  return a.tape().record(a.value().block(row, col, rows, cols), {a},
                         [a, row, col, rows, cols](Tape& t, const Matrix& g) {
                           Matrix ga = Matrix::Zero(a.rows(), a.cols());
                           ga.block(row, col, rows, cols) = g;
                           t.accumulate(a, ga);
                         });
}

Tensor logsumexp_rows(const Tensor& a) {
  Matrix out = lse_rows(a.value());
  return a.tape().record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    // d lse_i / d a_ij = softmax_ij
    Matrix soft = a.value();
    for (Eigen::Index i = 0; i < soft.rows(); ++i) {
      soft.row(i) = (soft.row(i).array() - out(i, 0)).exp().matrix() * g(i, 0);
    }
    t.accumulate(a, soft);
  });
}

Tensor logsumexp_cols(const Tensor& a) {
  Matrix out = lse_rows(a.value().transpose()).transpose();
  return a.tape().record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    Matrix soft = a.value();
    for (Eigen::Index j = 0; j < soft.cols(); ++j) {
      soft.col(j) = (soft.col(j).array() - out(0, j)).exp().matrix() * g(0, j);
    }
    t.accumulate(a, soft);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_same_tape("layer_norm", x, gamma);
  require_same_tape("layer_norm", x, beta);
  if (x.cols() != 1 || x.rows() < 2) {
    throw SizeError("layer_norm: expected column vector of length >= 2, got " + shape(x));
  }
  require_same_shape("layer_norm", x, gamma);
  require_same_shape("layer_norm", x, beta);
  if (!(eps > 0)) throw std::invalid_argument("layer_norm: eps must be positive");

  const double n = static_cast<double>(x.rows());
  const double mu = x.value().mean();
  const Matrix centered = x.value().array() - mu;
  const double var = centered.squaredNorm() / n;
  const double inv_std = 1.0 / std::sqrt(var + eps);
  const Matrix xhat = centered * inv_std;
  Matrix out = xhat.cwiseProduct(gamma.value()) + beta.value();
  return x.tape().record(std::move(out), {x, gamma, beta},
                         [x, gamma, beta, xhat, inv_std, n](Tape& t, const Matrix& g) {
                           t.accumulate(gamma, g.cwiseProduct(xhat));
                           t.accumulate(beta, g);
                           const Matrix gh = g.cwiseProduct(gamma.value());
                           const double mean_gh = gh.mean();
                           const double mean_ghx = gh.cwiseProduct(xhat).sum() / n;
                           Matrix gx = (gh.array() - mean_gh - xhat.array() * mean_ghx) * inv_std;
                           t.accumulate(x, gx);
                         });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return broadcast_add(matmul(x, w), b);
}

Tensor softmax_cross_entropy(const Tensor& logits, int class_id) {
  if (logits.cols() != 1) throw SizeError("softmax_cross_entropy: logits must be k x 1, got " + shape(logits));
  if (class_id < 0 || class_id >= logits.rows()) {
    throw std::out_of_range("softmax_cross_entropy: class id " + std::to_string(class_id) +
                            " outside [0," + std::to_string(logits.rows()) + ")");
  }
  const Matrix& z = logits.value();
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  Matrix out(1, 1);
  out(0, 0) = lse - z(class_id, 0);
  return logits.tape().record(std::move(out), {logits},
                              [logits, class_id, lse](Tape& t, const Matrix& g) {
                                Matrix grad = (logits.value().array() - lse).exp();
                                grad(class_id, 0) -= 1.0;
                                t.accumulate(logits, grad * g(0, 0));
                              });
}

Tensor l1_loss(const Tensor& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw SizeError("l1_loss: shape mismatch " + shape(pred) + " vs " + shape(target));
  }
  const Matrix diff = pred.value() - target;
  const double count = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.cwiseAbs().sum() / count;
  return pred.tape().record(std::move(out), {pred}, [pred, diff, count](Tape& t, const Matrix& g) {
    // sign(0) = 0
    Matrix grad = diff.unaryExpr([](double d) { return static_cast<double>((d > 0) - (d < 0)); });
    t.accumulate(pred, grad * (g(0, 0) / count));
  });
}

Tensor mse_loss(const Tensor& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw SizeError("mse_loss: shape mismatch " + shape(pred) + " vs " + shape(target));
  }
  const Matrix diff = pred.value() - target;
  const double count = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / count;
  return pred.tape().record(std::move(out), {pred}, [pred, diff, count](Tape& t, const Matrix& g) {
    t.accumulate(pred, diff * (2.0 * g(0, 0) / count));
  });
}

}  // namespace pignn::ad
