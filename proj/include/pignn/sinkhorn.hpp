#pragma once

#include <Eigen/Dense>

#include "pignn/errors.hpp"
#include "pignn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

// Entropy-regularized optimal transport in the log domain.
//
// For scores S (n x p) and marginals a (n), b (p), the plan
//   D = exp(S / eps + u 1^T + 1 v^T)
// maximizes <S, D> + eps * H(D) subject to D 1 = a, D^T 1 = b. Each iteration
// updates u (rows) then v (columns), so column sums are exact after every
// iteration and marginal_error is driven by the rows.
namespace pignn::sinkhorn {

struct SinkhornConfig {
  double epsilon = 1.0;
  int max_iterations = 20;
  double tolerance = 1e-6;

  void validate() const {
    if (!(epsilon > 0) || max_iterations < 1 || !(tolerance >= 0)) {
      throw std::invalid_argument("SinkhornConfig: epsilon > 0, max_iterations >= 1, tolerance >= 0");
    }
  }
};

template <typename Scalar>
struct TransportPlan {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mat plan;
  Vec row_marginal;
  Vec col_marginal;
  int iterations_used = 0;
  Scalar marginal_error = 0;
  std::vector<Scalar> error_history;  // marginal_error after each iteration
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logsumexp_rows(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m) {
  using std::exp;
  using std::log;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Scalar mx = m.row(i).maxCoeff();
    if (!std::isfinite(static_cast<double>(mx))) {
      out[i] = mx;
      continue;
    }
    out[i] = mx + log((m.row(i).array() - mx).exp().sum());
  }
  return out;
}

template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar max_marginal_error(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& plan,
                          const Eigen::MatrixBase<DerivedA>& a,
                          const Eigen::MatrixBase<DerivedB>& b) {
  const Scalar rows = (plan.rowwise().sum() - a).cwiseAbs().maxCoeff();
  const Scalar cols = (plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

template <typename DerivedS, typename DerivedA, typename DerivedB>
void check_inputs(const Eigen::MatrixBase<DerivedS>& s, const Eigen::MatrixBase<DerivedA>& a,
                  const Eigen::MatrixBase<DerivedB>& b) {
  if (s.rows() < 1 || s.cols() < 1) throw SizeError("sinkhorn: empty score matrix");
  if (a.size() != s.rows() || b.size() != s.cols()) {
    throw SizeError("sinkhorn: marginal sizes (" + std::to_string(a.size()) + "," +
                    std::to_string(b.size()) + ") do not match scores " +
                    std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
  }
  if (!s.allFinite()) throw std::invalid_argument("sinkhorn: non-finite scores");
  if ((a.array() <= 0).any() || (b.array() <= 0).any()) {
    throw std::invalid_argument("sinkhorn: marginals must be strictly positive");
  }
  const double sa = static_cast<double>(a.sum()), sb = static_cast<double>(b.sum());
  if (std::abs(sa - sb) > 1e-9 * std::max(1.0, std::max(std::abs(sa), std::abs(sb)))) {
    throw std::invalid_argument("sinkhorn: marginal mass mismatch " + std::to_string(sa) +
                                " vs " + std::to_string(sb));
  }
}

}  // namespace detail

template <typename DerivedS, typename DerivedA, typename DerivedB>
TransportPlan<typename DerivedS::Scalar> solve(const Eigen::MatrixBase<DerivedS>& scores,
                                               const Eigen::MatrixBase<DerivedA>& a,
                                               const Eigen::MatrixBase<DerivedB>& b,
                                               const SinkhornConfig& cfg = {}) {
  using Scalar = typename DerivedS::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  cfg.validate();
  detail::check_inputs(scores, a, b);

  const Mat kernel = scores * (Scalar(1) / Scalar(cfg.epsilon));
  const Vec log_a = a.array().log();
  const Vec log_b = b.array().log();
  Vec u = Vec::Zero(scores.rows());
  Vec v = Vec::Zero(scores.cols());

  TransportPlan<Scalar> result;
  result.row_marginal = a;
  result.col_marginal = b;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    Mat shifted = kernel;
    shifted.rowwise() += v.transpose();
    u = log_a - detail::logsumexp_rows<Scalar>(shifted);
    shifted = kernel;
    shifted.colwise() += u;
    v = log_b - detail::logsumexp_rows<Scalar>(Mat(shifted.transpose()));

    Mat log_plan = kernel;
    log_plan.colwise() += u;
    log_plan.rowwise() += v.transpose();
    result.plan = log_plan.array().exp();
    result.iterations_used = it + 1;
    result.marginal_error = detail::max_marginal_error<Scalar>(result.plan, a, b);
    result.error_history.push_back(result.marginal_error);
    if (result.marginal_error < Scalar(cfg.tolerance)) break;
  }
  return result;
}

// Appends a row and a column of z (including the corner).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> expand_dustbin(
    const Eigen::MatrixBase<Derived>& s, typename Derived::Scalar z) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat out = Mat::Constant(s.rows() + 1, s.cols() + 1, z);
  out.topLeftCorner(s.rows(), s.cols()) = s;
  return out;
}

struct DustbinMarginals {
  Eigen::VectorXd a;  // (1, ..., 1, p)
  Eigen::VectorXd b;  // (1, ..., 1, n)
};

inline DustbinMarginals dustbin_marginals(int n, int p) {
  if (n < 1 || p < 1) throw SizeError("dustbin_marginals: n and p must be >= 1");
  DustbinMarginals m{Eigen::VectorXd::Ones(n + 1), Eigen::VectorXd::Ones(p + 1)};
  m.a[n] = p;
  m.b[p] = n;
  return m;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> drop_dustbin(
    const Eigen::MatrixBase<Derived>& plan) {
  if (plan.rows() < 2 || plan.cols() < 2) throw SizeError("drop_dustbin: plan too small");
  return plan.topLeftCorner(plan.rows() - 1, plan.cols() - 1);
}

// Greedy conflict-free assignment: repeatedly take the largest entry among
// unassigned rows and columns (ties: lowest row, then lowest column). Returns
// perm with perm[row] = column.
template <typename Derived>
std::vector<int> round_to_permutation(const Eigen::MatrixBase<Derived>& plan) {
  if (plan.rows() != plan.cols()) throw SizeError("round_to_permutation: plan must be square");
  const int n = static_cast<int>(plan.rows());
  std::vector<int> perm(n, -1);
  std::vector<char> col_used(n, 0);
  for (int step = 0; step < n; ++step) {
    int best_r = -1, best_c = -1;
    for (int r = 0; r < n; ++r) {
      if (perm[r] >= 0) continue;
      for (int c = 0; c < n; ++c) {
        if (col_used[c]) continue;
        if (best_r < 0 || plan(r, c) > plan(best_r, best_c)) {
          best_r = r;
          best_c = c;
        }
      }
    }
    perm[best_r] = best_c;
    col_used[best_c] = 1;
  }
  return perm;
}

// Differentiable counterpart of solve(): records every normalization step on
// the scores' tape so gradients are exact for the computed forward. The
// iteration count is chosen from the forward values with the same stopping
// rule as solve().
struct TapePlan {
  ad::Tensor plan;
  int iterations_used = 0;
  double marginal_error = 0;
};

TapePlan solve_on_tape(const ad::Tensor& scores, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const SinkhornConfig& cfg);

// Soft assignment of n vertices to p latent slots: rows sum to 1, columns to
// n / p. With a dustbin score z (1 x 1 tensor) the scores are expanded, solved
// with dustbin marginals and the dustbin row/column dropped again.
TapePlan soft_assignment(const ad::Tensor& scores, const SinkhornConfig& cfg,
                         const ad::Tensor* dustbin_score = nullptr);

}  // namespace pignn::sinkhorn
