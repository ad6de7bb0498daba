#include "pignn/sinkhorn.hpp"

namespace pignn::sinkhorn {

TapePlan solve_on_tape(const ad::Tensor& scores, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const SinkhornConfig& cfg) {
  cfg.validate();
  detail::check_inputs(scores.value(), a, b);
  ad::Tape& tape = scores.tape();

  const ad::Tensor kernel = ad::scale(scores, 1.0 / cfg.epsilon);
  const ad::Tensor log_a = tape.constant(a.array().log().matrix());
  const ad::Tensor log_b = tape.constant(b.array().log().matrix().transpose());
  ad::Tensor u;
  ad::Tensor v = tape.constant(ad::Matrix::Zero(1, scores.cols()));

  TapePlan out;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    u = ad::sub(log_a, ad::logsumexp_rows(ad::broadcast_add(kernel, v)));
    v = ad::sub(log_b, ad::logsumexp_cols(ad::broadcast_add(kernel, u)));

    ad::Matrix log_plan = kernel.value();
    log_plan.colwise() += u.value().col(0);
    log_plan.rowwise() += v.value().row(0);
    const Eigen::MatrixXd plan = log_plan.array().exp();
    out.iterations_used = it + 1;
    out.marginal_error = detail::max_marginal_error<double>(plan, a, b);
    if (out.marginal_error < cfg.tolerance) break;
  }
  out.plan = ad::exp(ad::broadcast_add(ad::broadcast_add(kernel, u), v));
  return out;
}

TapePlan soft_assignment(const ad::Tensor& scores, const SinkhornConfig& cfg,
                         const ad::Tensor* dustbin_score) {
  const int n = static_cast<int>(scores.rows());
  const int p = static_cast<int>(scores.cols());
  if (!dustbin_score) {
    const Eigen::VectorXd a = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd b = Eigen::VectorXd::Constant(p, static_cast<double>(n) / p);
    return solve_on_tape(scores, a, b, cfg);
  }
  const ad::Tensor& z = *dustbin_score;
  const ad::Tensor with_col = ad::concat_cols(scores, ad::broadcast_scalar(z, n, 1));
  const ad::Tensor expanded = ad::concat_rows(with_col, ad::broadcast_scalar(z, 1, p + 1));
  const DustbinMarginals m = dustbin_marginals(n, p);
  TapePlan full = solve_on_tape(expanded, m.a, m.b, cfg);
  full.plan = ad::slice(full.plan, 0, 0, n, p);
  return full;
}

}  // namespace pignn::sinkhorn
