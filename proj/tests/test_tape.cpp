#include <doctest.h>

#include "pignn/tape.hpp"
#include "support.hpp"

#include <cmath>
#include <functional>

using namespace pignn;
using ad::Matrix;
using ad::Tape;
using ad::Tensor;
namespace ts = testing_support;

namespace {

using Fn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

Matrix value_of(const Fn& f, const std::vector<Matrix>& inputs) {
  Tape tape;
  std::vector<Tensor> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
  return f(tape, leaves).value();
}

// Reduces a tensor output to a scalar with fixed pseudo-random weights so the
// whole Jacobian is exercised.
Fn weighted(const Fn& f, std::uint64_t seed) {
  return [f, seed](Tape& tape, const std::vector<Tensor>& in) {
    const Tensor out = f(tape, in);
    std::mt19937_64 rng(seed);
    const Tensor w = tape.constant(ts::uniform_matrix(rng, out.rows(), out.cols(), -1, 1));
    return ad::sum(ad::mul(out, w));
  };
}

// Largest relative error between tape gradients and central differences.
double max_rel_error(const Fn& scalar_fn, const std::vector<Matrix>& inputs, double h = 1e-5) {
  Tape tape;
  std::vector<Tensor> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
  tape.backward(scalar_fn(tape, leaves));
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      std::vector<Matrix> plus = inputs, minus = inputs;
      plus[k].data()[i] += h;
      minus[k].data()[i] -= h;
      const double fd = (value_of(scalar_fn, plus)(0, 0) - value_of(scalar_fn, minus)(0, 0)) / (2 * h);
      const double g = leaves[k].grad().data()[i];
      worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-6}));
    }
  }
  return worst;
}

Matrix rand(std::mt19937_64& rng, int r, int c, double lo = -2, double hi = 2) {
  return ts::uniform_matrix(rng, r, c, lo, hi);
}

}  // namespace

TEST_CASE("backward basics") {
  Tape tape;
  const Tensor x = tape.leaf(Matrix::Constant(1, 1, 2.0));
  tape.backward(3.0 * x);
  CHECK(x.grad()(0, 0) == 3.0);

  Tape t2;
  Matrix v(2, 1);
  v << 1, 2;
  const Tensor y = t2.leaf(v);
  t2.backward(ad::matmul(ad::transpose(y), y));
  CHECK(y.grad()(0, 0) == 2.0);
  CHECK(y.grad()(1, 0) == 4.0);

  CHECK_THROWS_AS(t2.backward(y), SizeError);
}

TEST_CASE("gradients accumulate across backward calls until cleared") {
  std::mt19937_64 rng(1);
  Tape tape;
  const Tensor a = tape.leaf(rand(rng, 3, 3));
  const Tensor loss = ad::sum(ad::exp(ad::matmul(a, a)));
  tape.backward(loss);
  const Matrix once = a.grad();
  tape.backward(loss);
  // a enters twice, so the sum is ((x + y) + x) + y rather than exactly 2 (x + y).
  CHECK((a.grad() - 2.0 * once).norm() <= 1e-14 * once.norm());
  tape.zero_grad();
  CHECK(a.grad().isZero());
  tape.backward(loss);
  CHECK(a.grad() == once);
}

TEST_CASE("relu subgradient") {
  Tape tape;
  Matrix x(3, 1);
  x << 2, -2, 0;
  const Tensor t = tape.leaf(x);
  tape.backward(ad::sum(ad::relu(t)));
  CHECK(t.grad()(0, 0) == 1.0);
  CHECK(t.grad()(1, 0) == 0.0);
  CHECK(t.grad()(2, 0) == 0.0);
}

TEST_CASE("shape errors name both shapes") {
  Tape tape;
  const Tensor a = tape.leaf(Matrix::Zero(2, 3));
  const Tensor b = tape.leaf(Matrix::Zero(3, 2));
  try {
    ad::add(a, b);
    FAIL("expected SizeError");
  } catch (const SizeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("3x2") != std::string::npos);
  }
  CHECK_THROWS_AS(ad::matmul(a, a), SizeError);
  CHECK_THROWS_AS(ad::slice(a, 1, 1, 2, 2), SizeError);
  CHECK_THROWS_AS(ad::concat_rows(a, b), SizeError);
}

TEST_CASE("flatten is row-major and reshapes gradients back") {
  Tape tape;
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const Tensor t = tape.leaf(m);
  const Tensor f = ad::flatten(t);
  CHECK(f.rows() == 4);
  CHECK(f.value()(1, 0) == 2);
  Matrix w(4, 1);
  w << 10, 20, 30, 40;
  tape.backward(ad::sum(ad::mul(f, tape.constant(w))));
  Matrix expected(2, 2);
  expected << 10, 20, 30, 40;
  CHECK(t.grad() == expected);
}

TEST_CASE("matmul gradient against finite differences") {
  std::mt19937_64 rng(2);
  const Fn f = weighted([](Tape&, const std::vector<Tensor>& in) { return ad::matmul(in[0], in[1]); }, 3);
  CHECK(max_rel_error(f, {rand(rng, 3, 4), rand(rng, 4, 2)}) < 1e-6);
}

TEST_CASE("every primitive matches finite differences") {
  struct Case {
    const char* name;
    Fn fn;
    std::vector<std::pair<int, int>> shapes;
    double lo = -2, hi = 2;
  };
  const std::vector<Case> cases = {
      {"transpose", [](Tape&, const auto& in) { return ad::transpose(in[0]); }, {{3, 2}}},
      {"add", [](Tape&, const auto& in) { return ad::add(in[0], in[1]); }, {{2, 3}, {2, 3}}},
      {"sub", [](Tape&, const auto& in) { return ad::sub(in[0], in[1]); }, {{2, 3}, {2, 3}}},
      {"mul", [](Tape&, const auto& in) { return ad::mul(in[0], in[1]); }, {{2, 3}, {2, 3}}},
      {"scale", [](Tape&, const auto& in) { return ad::scale(in[0], -1.7); }, {{2, 2}}},
      {"relu", [](Tape&, const auto& in) { return ad::relu(in[0]); }, {{3, 3}}},
      {"exp", [](Tape&, const auto& in) { return ad::exp(in[0]); }, {{2, 3}}},
      {"log", [](Tape&, const auto& in) { return ad::log(in[0]); }, {{2, 3}}, 0.5, 2},
      {"sqrt", [](Tape&, const auto& in) { return ad::sqrt(in[0]); }, {{2, 3}}, 0.5, 2},
      {"row_sum", [](Tape&, const auto& in) { return ad::row_sum(in[0]); }, {{3, 4}}},
      {"col_sum", [](Tape&, const auto& in) { return ad::col_sum(in[0]); }, {{3, 4}}},
      {"mean", [](Tape&, const auto& in) { return ad::mean(in[0]); }, {{3, 4}}},
      {"broadcast_add rows", [](Tape&, const auto& in) { return ad::broadcast_add(in[0], in[1]); }, {{3, 4}, {3, 1}}},
      {"broadcast_add cols", [](Tape&, const auto& in) { return ad::broadcast_add(in[0], in[1]); }, {{3, 4}, {1, 4}}},
      {"broadcast_divide rows", [](Tape&, const auto& in) { return ad::broadcast_divide(in[0], in[1]); },
       {{3, 4}, {3, 1}}, 0.5, 2},
      {"broadcast_divide cols", [](Tape&, const auto& in) { return ad::broadcast_divide(in[0], in[1]); },
       {{3, 4}, {1, 4}}, 0.5, 2},
      {"broadcast_scalar", [](Tape&, const auto& in) { return ad::broadcast_scalar(in[0], 2, 3); }, {{1, 1}}},
      {"flatten", [](Tape&, const auto& in) { return ad::flatten(in[0]); }, {{3, 2}}},
      {"concat_rows", [](Tape&, const auto& in) { return ad::concat_rows(in[0], in[1]); }, {{2, 3}, {1, 3}}},
      {"concat_cols", [](Tape&, const auto& in) { return ad::concat_cols(in[0], in[1]); }, {{2, 3}, {2, 2}}},
      {"slice", [](Tape&, const auto& in) { return ad::slice(in[0], 1, 1, 2, 2); }, {{3, 4}}},
      {"logsumexp_rows", [](Tape&, const auto& in) { return ad::logsumexp_rows(in[0]); }, {{3, 4}}},
      {"logsumexp_cols", [](Tape&, const auto& in) { return ad::logsumexp_cols(in[0]); }, {{3, 4}}},
      {"layer_norm", [](Tape&, const auto& in) { return ad::layer_norm(in[0], in[1], in[2]); },
       {{5, 1}, {5, 1}, {5, 1}}},
      {"affine", [](Tape&, const auto& in) { return ad::affine(in[0], in[1], in[2]); }, {{3, 4}, {4, 2}, {1, 2}}},
      {"l1_loss", [](Tape&, const auto& in) { return ad::l1_loss(in[0], Matrix::Constant(3, 1, 0.25)); }, {{3, 1}}},
      {"mse_loss", [](Tape&, const auto& in) { return ad::mse_loss(in[0], Matrix::Constant(3, 1, 0.25)); }, {{3, 1}}},
      {"softmax_cross_entropy", [](Tape&, const auto& in) { return ad::softmax_cross_entropy(in[0], 2); }, {{4, 1}}},
  };
  std::mt19937_64 rng(17);
  for (const auto& c : cases) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Matrix> inputs;
      for (const auto& [r, k] : c.shapes) inputs.push_back(rand(rng, r, k, c.lo, c.hi));
      CAPTURE(c.name);
      CHECK(max_rel_error(weighted(c.fn, trial), inputs) < 1e-5);
    }
  }
}

TEST_CASE("logsumexp is stable for large inputs") {
  Tape tape;
  Matrix m(1, 3);
  m << 1000, 1000, 1000;
  const Tensor r = ad::logsumexp_rows(tape.leaf(m));
  CHECK(r.value()(0, 0) == doctest::Approx(1000 + std::log(3.0)));
}

TEST_CASE("layer_norm values") {
  Tape tape;
  Matrix x(2, 1);
  x << 1, 3;
  const Tensor ones = tape.constant(Matrix::Ones(2, 1));
  const Tensor zeros = tape.constant(Matrix::Zero(2, 1));
  const Tensor y = ad::layer_norm(tape.leaf(x), ones, zeros);
  CHECK(y.value()(0, 0) == doctest::Approx(-1.0 / std::sqrt(1.0 + 1e-5)));
  CHECK(y.value()(1, 0) == doctest::Approx(1.0 / std::sqrt(1.0 + 1e-5)));

  Matrix beta(3, 1);
  beta << 0.5, -1, 2;
  const Tensor c = ad::layer_norm(tape.leaf(Matrix::Constant(3, 1, 4.0)), tape.constant(Matrix::Ones(3, 1)),
                                  tape.constant(beta));
  CHECK((c.value() - beta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(ad::layer_norm(tape.leaf(Matrix::Ones(1, 1)), tape.constant(Matrix::Ones(1, 1)),
                                 tape.constant(Matrix::Zero(1, 1))),
                  SizeError);
}

TEST_CASE("losses") {
  Tape tape;
  const Tensor logits = tape.leaf(Matrix::Zero(5, 1));
  const Tensor ce = ad::softmax_cross_entropy(logits, 3);
  CHECK(ce.item() == doctest::Approx(std::log(5.0)));
  CHECK_THROWS_AS(ad::softmax_cross_entropy(logits, 5), std::out_of_range);
  CHECK_THROWS_AS(ad::softmax_cross_entropy(logits, -1), std::out_of_range);

  std::mt19937_64 rng(4);
  const Matrix x = rand(rng, 3, 1);
  CHECK(ad::l1_loss(tape.leaf(x), x).item() == 0.0);
  CHECK(ad::mse_loss(tape.leaf(x), x).item() == 0.0);

  // d CE / d logits = softmax - onehot.
  Tape t2;
  const Matrix z = rand(rng, 4, 1);
  const Tensor zl = t2.leaf(z);
  t2.backward(ad::softmax_cross_entropy(zl, 1));
  Eigen::VectorXd soft = (z.array() - z.maxCoeff()).exp();
  soft /= soft.sum();
  soft[1] -= 1;
  CHECK((zl.grad() - Matrix(soft)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward evaluation is bitwise deterministic") {
  std::mt19937_64 rng(5);
  const Matrix a = rand(rng, 6, 5), b = rand(rng, 5, 4);
  auto run = [&] {
    Tape tape;
    const Tensor x = tape.leaf(a), y = tape.leaf(b);
    const Tensor out = ad::logsumexp_cols(ad::exp(ad::matmul(x, y)));
    tape.backward(ad::sum(out));
    return std::make_pair(out.value(), x.grad());
  };
  const auto r1 = run(), r2 = run();
  CHECK(r1.first == r2.first);
  CHECK(r1.second == r2.second);
}

TEST_CASE("constants receive no gradient") {
  Tape tape;
  const Tensor c = tape.constant(Matrix::Ones(2, 2));
  const Tensor x = tape.leaf(Matrix::Ones(2, 2));
  tape.backward(ad::sum(ad::mul(c, x)));
  CHECK(!c.requires_grad());
  CHECK(c.grad().isZero());
  CHECK(x.grad() == Matrix::Ones(2, 2));
}
