#pragma once

#include <Eigen/Dense>

#include "pignn/graph.hpp"
#include "pignn/sinkhorn.hpp"
#include "pignn/tape.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <type_traits>
#include <utility>

namespace pignn {

enum class PlanMode {
  Learned,        // Sinkhorn on learned scores
  FrozenUniform,  // every entry 1/p, no scores involved
};

struct PiGnnConfig {
  int num_latent = 7;       // p
  int feature_hidden = 32;  // width of the vertex feature transform
  double alpha = 0.5;       // weight of the structural plan when attributes exist
  bool use_dustbin = false;
  sinkhorn::SinkhornConfig sinkhorn;
  std::pair<int, int> head_hidden{256, 128};
  TaskSpec task = TaskSpec::regression(1);
  PlanMode plan_mode = PlanMode::Learned;
  double layer_norm_eps = 1e-5;

  void validate() const;
};

// Every trainable tensor of the model. The field type is a matrix for stored
// parameters and an ad::Tensor for parameters bound to a tape. Row vectors
// (1 x k) hold biases; layer-norm gains/biases are column vectors.
template <typename T>
struct ParamSet {
  T feat_w, feat_b;                  // vertex feature transform
  T latent;                          // p x hidden latent anchors
  T latent_att;                      // p x d_x attribute anchors
  T dustbin;                         // 1 x 1 dustbin score z
  T ln_adj_gamma, ln_adj_beta;       // over v_adj
  T ln_att_gamma, ln_att_beta;       // over v_att
  T adj_w1, adj_b1, adj_w2, adj_b2;  // MLP on v_adj
  T att_w1, att_b1, att_w2, att_b2;  // MLP on v_att
  T out_w1, out_b1, out_w2, out_b2;  // final MLP

  static constexpr std::array<std::pair<const char*, T ParamSet::*>, 21> fields() {
    return {{{"feat_w", &ParamSet::feat_w},
             {"feat_b", &ParamSet::feat_b},
             {"latent", &ParamSet::latent},
             {"latent_att", &ParamSet::latent_att},
             {"dustbin", &ParamSet::dustbin},
             {"ln_adj_gamma", &ParamSet::ln_adj_gamma},
             {"ln_adj_beta", &ParamSet::ln_adj_beta},
             {"ln_att_gamma", &ParamSet::ln_att_gamma},
             {"ln_att_beta", &ParamSet::ln_att_beta},
             {"adj_w1", &ParamSet::adj_w1},
             {"adj_b1", &ParamSet::adj_b1},
             {"adj_w2", &ParamSet::adj_w2},
             {"adj_b2", &ParamSet::adj_b2},
             {"att_w1", &ParamSet::att_w1},
             {"att_b1", &ParamSet::att_b1},
             {"att_w2", &ParamSet::att_w2},
             {"att_b2", &ParamSet::att_b2},
             {"out_w1", &ParamSet::out_w1},
             {"out_b1", &ParamSet::out_b1},
             {"out_w2", &ParamSet::out_w2},
             {"out_b2", &ParamSet::out_b2}}};
  }
};

using PiGnnParams = ParamSet<Eigen::MatrixXd>;

inline bool is_present(const Eigen::MatrixXd& m) { return m.size() > 0; }
inline bool is_present(const ad::Tensor& t) { return t.valid(); }

// Calls f(name, value) for every present parameter, in a fixed order.
template <typename Params, typename F>
void for_each_param(Params& params, F&& f) {
  for (const auto& [name, member] : std::remove_const_t<Params>::fields()) {
    auto& m = params.*member;
    if (is_present(m)) f(name, m);
  }
}

// Calls f(name, a_value, b_value) over parameters present in a.
template <typename A, typename B, typename F>
void zip_params(A& a, B& b, F&& f) {
  constexpr auto fa = std::remove_const_t<A>::fields();
  constexpr auto fb = std::remove_const_t<B>::fields();
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (!is_present(a.*(fa[i].second))) continue;
    f(fa[i].first, a.*(fa[i].second), b.*(fb[i].second));
  }
}

std::size_t parameter_count(const PiGnnParams& params);

// Dimensions the parameters were built for.
struct ModelDims {
  int feature_dim = 2;  // columns of the structural vertex matrix
  int attr_dim = 0;     // 0 disables the attribute branch
  int label_alphabet = 0;

  static ModelDims from_schema(const FeatureSchema& schema);
  FeatureSchema structural_schema() const { return {label_alphabet, 0}; }
};

// Weights ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)), biases 0, z = 1, layer-norm
// gain 1 and bias 0. Deterministic in seed.
PiGnnParams init_params(const PiGnnConfig& cfg, const ModelDims& dims, std::uint64_t seed);

// Tape-bound view of the parameters.
using BoundParams = ParamSet<ad::Tensor>;
BoundParams bind_params(ad::Tape& tape, const PiGnnParams& params, bool requires_grad);
PiGnnParams gradients(const BoundParams& bound);

struct ForwardResult {
  ad::Tensor output;  // logits (k x 1) or regression vector (t x 1); invalid for embed-only
  ad::Tensor v_adj;   // raw flatten(D^T A D), length p^2
  ad::Tensor v_att;   // flatten(D^T X), length p * d_x; invalid without attributes
  ad::Tensor plan;    // n x p soft assignment
  int sinkhorn_iterations = 0;
  double marginal_error = 0;
};

struct ForwardOptions {
  bool with_heads = true;
};

// Vertex features -> scores -> soft assignment(s) -> fixed-size projections
// -> layer norm -> MLP heads.
ForwardResult forward(ad::Tape& tape, const Graph& g, const BoundParams& params,
                      const PiGnnConfig& cfg, const ModelDims& dims, ForwardOptions opts = {});

// Loss of a single graph: cross-entropy on logits or L1 on the regression output.
ad::Tensor graph_loss(const ForwardResult& fr, const Graph& g, const PiGnnConfig& cfg);

// Raw v_adj = flatten(D^T A D) without heads or layer norm.
Eigen::VectorXd embed(const Graph& g, const PiGnnParams& params, const PiGnnConfig& cfg,
                      const ModelDims& dims);

// ||embed(g1) - embed(g2)||_2.
double model_distance(const Graph& g1, const Graph& g2, const PiGnnParams& params,
                      const PiGnnConfig& cfg, const ModelDims& dims);

// Output vector (logits or regression values) for one graph.
Eigen::VectorXd predict(const Graph& g, const PiGnnParams& params, const PiGnnConfig& cfg,
                        const ModelDims& dims);

// Scalar loss for one graph, evaluated without recording gradients.
double evaluate_loss(const Graph& g, const PiGnnParams& params, const PiGnnConfig& cfg,
                     const ModelDims& dims);

}  // namespace pignn
