#include "pignn/model.hpp"

#include <cmath>
#include <random>

namespace pignn {

namespace {

struct Branches {
  bool has_attrs;
  bool adj_plan;  // structural scores feed the plan
  bool att_plan;  // attribute scores feed the plan
  bool adj_head;  // v_adj feeds the heads
  bool att_head;  // v_att feeds the heads
};

// alpha = 1 drops everything attribute-side, alpha = 0 everything structural.
Branches branches(const PiGnnConfig& cfg, const ModelDims& dims) {
  Branches b;
  b.has_attrs = dims.attr_dim > 0;
  b.adj_plan = !b.has_attrs || cfg.alpha > 0.0;
  b.att_plan = b.has_attrs && cfg.alpha < 1.0;
  b.adj_head = b.adj_plan;
  b.att_head = b.att_plan;
  return b;
}

Eigen::MatrixXd uniform_weights(int fan_in, int fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd w(fan_in, fan_out);
  // Row-major fill order so the draw sequence does not depend on storage.
  for (int i = 0; i < fan_in; ++i)
    for (int j = 0; j < fan_out; ++j) w(i, j) = dist(rng);
  return w;
}

ad::Tensor dense_relu(const ad::Tensor& x, const ad::Tensor& w, const ad::Tensor& b) {
  return ad::relu(ad::affine(x, w, b));
}

}  // namespace

void PiGnnConfig::validate() const {
  if (num_latent < 2) throw std::invalid_argument("PiGnnConfig: num_latent must be >= 2");
  if (feature_hidden < 1) throw std::invalid_argument("PiGnnConfig: feature_hidden must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("PiGnnConfig: alpha must lie in [0,1]");
  if (head_hidden.first < 1 || head_hidden.second < 1) {
    throw std::invalid_argument("PiGnnConfig: head sizes must be positive");
  }
  if (task.output_dim() < 1) throw std::invalid_argument("PiGnnConfig: task output dimension must be >= 1");
  if (!(layer_norm_eps > 0)) throw std::invalid_argument("PiGnnConfig: layer_norm_eps must be positive");
  sinkhorn.validate();
}

std::size_t parameter_count(const PiGnnParams& params) {
  std::size_t total = 0;
  for_each_param(params, [&](const char*, const Eigen::MatrixXd& m) { total += m.size(); });
  return total;
}

ModelDims ModelDims::from_schema(const FeatureSchema& schema) {
  ModelDims d;
  d.label_alphabet = schema.label_alphabet;
  d.attr_dim = schema.attr_dim;
  d.feature_dim = 2 + schema.label_alphabet;
  return d;
}

PiGnnParams init_params(const PiGnnConfig& cfg, const ModelDims& dims, std::uint64_t seed) {
  cfg.validate();
  if (dims.feature_dim < 1 || dims.attr_dim < 0) throw std::invalid_argument("init_params: bad dimensions");
  const Branches br = branches(cfg, dims);
  const int p = cfg.num_latent;
  const int hid = cfg.feature_hidden;
  const auto [h1, h2] = cfg.head_hidden;
  std::mt19937_64 rng(seed);

  PiGnnParams prm;
  prm.feat_w = uniform_weights(dims.feature_dim, hid, rng);
  prm.feat_b = Eigen::MatrixXd::Zero(1, hid);
  // Anchors are scored by inner product with hidden features: fan_in = hid.
  prm.latent = uniform_weights(hid, p, rng).transpose();
  if (br.att_plan) prm.latent_att = uniform_weights(dims.attr_dim, p, rng).transpose();
  if (cfg.use_dustbin) prm.dustbin = Eigen::MatrixXd::Constant(1, 1, 1.0);

  int concat = 0;
  if (br.adj_head) {
    const int in = p * p;
    prm.ln_adj_gamma = Eigen::MatrixXd::Ones(in, 1);
    prm.ln_adj_beta = Eigen::MatrixXd::Zero(in, 1);
    prm.adj_w1 = uniform_weights(in, h1, rng);
    prm.adj_b1 = Eigen::MatrixXd::Zero(1, h1);
    prm.adj_w2 = uniform_weights(h1, h2, rng);
    prm.adj_b2 = Eigen::MatrixXd::Zero(1, h2);
    concat += h2;
  }
  if (br.att_head) {
    const int in = p * dims.attr_dim;
    if (in < 2) throw std::invalid_argument("init_params: attribute projection needs p * d_x >= 2");
    prm.ln_att_gamma = Eigen::MatrixXd::Ones(in, 1);
    prm.ln_att_beta = Eigen::MatrixXd::Zero(in, 1);
    prm.att_w1 = uniform_weights(in, h1, rng);
    prm.att_b1 = Eigen::MatrixXd::Zero(1, h1);
    prm.att_w2 = uniform_weights(h1, h2, rng);
    prm.att_b2 = Eigen::MatrixXd::Zero(1, h2);
    concat += h2;
  }
  prm.out_w1 = uniform_weights(concat, h2, rng);
  prm.out_b1 = Eigen::MatrixXd::Zero(1, h2);
  prm.out_w2 = uniform_weights(h2, cfg.task.output_dim(), rng);
  prm.out_b2 = Eigen::MatrixXd::Zero(1, cfg.task.output_dim());
  return prm;
}

BoundParams bind_params(ad::Tape& tape, const PiGnnParams& params, bool requires_grad) {
  BoundParams bound;
  zip_params(params, bound, [&](const char*, const Eigen::MatrixXd& m, ad::Tensor& t) {
    t = tape.leaf(m, requires_grad);
  });
  return bound;
}

PiGnnParams gradients(const BoundParams& bound) {
  PiGnnParams grads;
  zip_params(bound, grads, [](const char*, const ad::Tensor& t, Eigen::MatrixXd& g) { g = t.grad(); });
  return grads;
}

ForwardResult forward(ad::Tape& tape, const Graph& g, const BoundParams& params,
                      const PiGnnConfig& cfg, const ModelDims& dims, ForwardOptions opts) {
  const Branches br = branches(cfg, dims);
  const int n = g.num_vertices();
  const int p = cfg.num_latent;
  if (br.has_attrs && (!g.node_attrs() || g.node_attrs()->cols() != dims.attr_dim)) {
    throw SchemaError("forward: model expects " + std::to_string(dims.attr_dim) +
                      "-dim node attributes");
  }
  if (!br.has_attrs && g.node_attrs()) {
    throw SchemaError("forward: graph carries attributes but the model has no attribute branch");
  }

  ForwardResult fr;
  const ad::Tensor* dustbin = cfg.use_dustbin ? &params.dustbin : nullptr;
  ad::Tensor x;
  if (br.has_attrs) x = tape.constant(*g.node_attrs());

  if (cfg.plan_mode == PlanMode::FrozenUniform) {
    fr.plan = tape.constant(Eigen::MatrixXd::Constant(n, p, 1.0 / p));
  } else {
    ad::Tensor d_adj, d_att;
    if (br.adj_plan) {
      // Attributes feed their own plan, not Q.
      const FeatureSchema full{dims.label_alphabet, g.node_attrs() ? static_cast<int>(g.node_attrs()->cols()) : 0};
      const ad::Tensor q =
          tape.constant(build_vertex_matrix(g, full).leftCols(dims.structural_schema().dim()));
      const ad::Tensor hidden = dense_relu(q, params.feat_w, params.feat_b);
      const ad::Tensor scores = ad::relu(ad::matmul(hidden, ad::transpose(params.latent)));
      const auto sol = sinkhorn::soft_assignment(scores, cfg.sinkhorn, dustbin);
      d_adj = sol.plan;
      fr.sinkhorn_iterations = sol.iterations_used;
      fr.marginal_error = sol.marginal_error;
    }
    if (br.att_plan) {
      const ad::Tensor scores = ad::relu(ad::matmul(x, ad::transpose(params.latent_att)));
      const auto sol = sinkhorn::soft_assignment(scores, cfg.sinkhorn, dustbin);
      d_att = sol.plan;
      fr.sinkhorn_iterations = std::max(fr.sinkhorn_iterations, sol.iterations_used);
      fr.marginal_error = std::max(fr.marginal_error, sol.marginal_error);
    }
    if (br.adj_plan && br.att_plan) {
      fr.plan = ad::add(ad::scale(d_adj, cfg.alpha), ad::scale(d_att, 1.0 - cfg.alpha));
    } else {
      fr.plan = br.adj_plan ? d_adj : d_att;
    }
  }

  const ad::Tensor a = tape.constant(adjacency(g));
  const ad::Tensor plan_t = ad::transpose(fr.plan);
  fr.v_adj = ad::flatten(ad::matmul(plan_t, ad::matmul(a, fr.plan)));
  if (br.has_attrs) fr.v_att = ad::flatten(ad::matmul(plan_t, x));
  if (!opts.with_heads) return fr;

  ad::Tensor joined;
  if (br.adj_head) {
    ad::Tensor h = ad::transpose(
        ad::layer_norm(fr.v_adj, params.ln_adj_gamma, params.ln_adj_beta, cfg.layer_norm_eps));
    h = dense_relu(h, params.adj_w1, params.adj_b1);
    joined = dense_relu(h, params.adj_w2, params.adj_b2);
  }
  if (br.att_head) {
    ad::Tensor h = ad::transpose(
        ad::layer_norm(fr.v_att, params.ln_att_gamma, params.ln_att_beta, cfg.layer_norm_eps));
    h = dense_relu(h, params.att_w1, params.att_b1);
    h = dense_relu(h, params.att_w2, params.att_b2);
    joined = joined.valid() ? ad::concat_cols(joined, h) : h;
  }
  ad::Tensor out = dense_relu(joined, params.out_w1, params.out_b1);
  out = ad::affine(out, params.out_w2, params.out_b2);
  fr.output = ad::transpose(out);
  return fr;
}

ad::Tensor graph_loss(const ForwardResult& fr, const Graph& g, const PiGnnConfig& cfg) {
  if (cfg.task.is_classification()) {
    const int* cls = std::get_if<int>(&g.target());
    if (!cls) throw SchemaError("graph_loss: classification graph without class id");
    return ad::softmax_cross_entropy(fr.output, *cls);
  }
  const auto* y = std::get_if<Eigen::VectorXd>(&g.target());
  if (!y) throw SchemaError("graph_loss: regression graph without target vector");
  return ad::l1_loss(fr.output, *y);
}

Eigen::VectorXd embed(const Graph& g, const PiGnnParams& params, const PiGnnConfig& cfg,
                      const ModelDims& dims) {
  ad::Tape tape;
  const BoundParams bound = bind_params(tape, params, false);
  const ForwardResult fr = forward(tape, g, bound, cfg, dims, {.with_heads = false});
  return fr.v_adj.value().col(0);
}

double model_distance(const Graph& g1, const Graph& g2, const PiGnnParams& params,
                      const PiGnnConfig& cfg, const ModelDims& dims) {
  return (embed(g1, params, cfg, dims) - embed(g2, params, cfg, dims)).norm();
}

Eigen::VectorXd predict(const Graph& g, const PiGnnParams& params, const PiGnnConfig& cfg,
                        const ModelDims& dims) {
  ad::Tape tape;
  const BoundParams bound = bind_params(tape, params, false);
  return forward(tape, g, bound, cfg, dims).output.value().col(0);
}

double evaluate_loss(const Graph& g, const PiGnnParams& params, const PiGnnConfig& cfg,
                     const ModelDims& dims) {
  ad::Tape tape;
  const BoundParams bound = bind_params(tape, params, false);
  return graph_loss(forward(tape, g, bound, cfg, dims), g, cfg).item();
}

}  // namespace pignn
