#include <doctest.h>

#include "pignn/frobenius.hpp"
#include "pignn/model.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

#include <cmath>

using namespace pignn;
namespace ts = testing_support;

namespace {

PiGnnConfig small_config(int p = 4, bool dustbin = false) {
  PiGnnConfig cfg;
  cfg.num_latent = p;
  cfg.feature_hidden = 6;
  cfg.head_hidden = {8, 6};
  cfg.use_dustbin = dustbin;
  cfg.sinkhorn.epsilon = 0.5;
  cfg.sinkhorn.max_iterations = 30;
  cfg.sinkhorn.tolerance = 1e-9;
  return cfg;
}

Graph with_attrs(Graph g, std::mt19937_64& rng, int d) {
  g.set_node_attrs(ts::uniform_matrix(rng, g.num_vertices(), d, -1, 1));
  return g;
}

Eigen::MatrixXd plan_of(const Graph& g, const PiGnnParams& params, const PiGnnConfig& cfg, const ModelDims& dims) {
  ad::Tape tape;
  const BoundParams b = bind_params(tape, params, false);
  return forward(tape, g, b, cfg, dims).plan.value();
}

}  // namespace

TEST_CASE("config validation") {
  PiGnnConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.num_latent = 1;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("init_params") {
  const PiGnnConfig cfg = small_config();
  const ModelDims dims{2, 3, 0};
  const PiGnnParams a = init_params(cfg, dims, 42), b = init_params(cfg, dims, 42);
  zip_params(a, b, [](const char* name, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    CAPTURE(name);
    CHECK(x == y);
  });
  CHECK(init_params(cfg, dims, 43).feat_w != a.feat_w);
  for (const auto* bias : {&a.feat_b, &a.adj_b1, &a.adj_b2, &a.att_b1, &a.att_b2, &a.out_b1, &a.out_b2}) {
    CHECK(bias->isZero());
  }
  CHECK(a.feat_w.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 2));
  CHECK(a.latent.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / cfg.feature_hidden));
  CHECK(a.adj_w1.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 16));
  CHECK(a.latent.rows() == 4);
  CHECK(a.latent_att.rows() == 4);
  CHECK(a.latent_att.cols() == 3);
  CHECK(!is_present(a.dustbin));
  const PiGnnParams withbin = init_params(small_config(4, true), dims, 1);
  CHECK(withbin.dustbin(0, 0) == 1.0);
  CHECK(parameter_count(a) > 0);
}

TEST_CASE("embedding dimensionality does not depend on n") {
  const PiGnnConfig cfg = small_config(5);
  const ModelDims dims{};
  const PiGnnParams params = init_params(cfg, dims, 0);
  for (int n : {2, 3, 6, 9}) {
    CHECK(embed(generate(GraphKind::Path, {.n = n}, 0), params, cfg, dims).size() == 25);
  }
  CHECK(embed(Graph(4, {}), params, cfg, dims).isZero());
}

TEST_CASE("attribute branch shapes and schema errors") {
  std::mt19937_64 rng(1);
  const PiGnnConfig cfg = small_config();
  const ModelDims dims{2, 3, 0};
  const PiGnnParams params = init_params(cfg, dims, 0);
  const Graph g = with_attrs(generate(GraphKind::Cycle, {.n = 5}, 0), rng, 3);
  ad::Tape tape;
  const BoundParams b = bind_params(tape, params, false);
  const ForwardResult fr = forward(tape, g, b, cfg, dims);
  CHECK(fr.v_att.rows() == 12);
  CHECK(fr.v_adj.rows() == 16);
  CHECK(fr.output.rows() == 1);
  CHECK_THROWS_AS(forward(tape, generate(GraphKind::Cycle, {.n = 5}, 0), b, cfg, dims), SchemaError);
  const ModelDims plain{};
  const PiGnnParams pp = init_params(cfg, plain, 0);
  const BoundParams pb = bind_params(tape, pp, false);
  CHECK_THROWS_AS(forward(tape, g, pb, cfg, plain), SchemaError);
}

TEST_CASE("alpha endpoints") {
  std::mt19937_64 rng(2);
  PiGnnConfig cfg = small_config();
  const ModelDims dims{2, 2, 0};
  const Graph base = generate(GraphKind::BarabasiAlbert, {.n = 6, .attach = 2}, 4);
  const Graph g1 = with_attrs(base, rng, 2), g2 = with_attrs(base, rng, 2);

  cfg.alpha = 1.0;
  const PiGnnParams p1 = init_params(cfg, dims, 0);
  CHECK(!is_present(p1.latent_att));
  CHECK((plan_of(g1, p1, cfg, dims) - plan_of(g2, p1, cfg, dims)).cwiseAbs().maxCoeff() == 0.0);

  cfg.alpha = 0.0;
  const PiGnnParams p0 = init_params(cfg, dims, 0);
  CHECK(!is_present(p0.ln_adj_gamma));
  const Graph other = with_attrs(generate(GraphKind::Path, {.n = 6}, 0), rng, 2);
  Graph same_attrs = other;
  same_attrs.set_node_attrs(*g1.node_attrs());
  CHECK(plan_of(g1, p0, cfg, dims) == plan_of(same_attrs, p0, cfg, dims));
  CHECK(predict(g1, p0, cfg, dims).allFinite());

  cfg.alpha = 0.5;
  const PiGnnParams ph = init_params(cfg, dims, 0);
  CHECK((plan_of(g1, ph, cfg, dims) - plan_of(g2, ph, cfg, dims)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("plan marginals") {
  std::mt19937_64 rng(3);
  for (bool dustbin : {false, true}) {
    const PiGnnConfig cfg = small_config(5, dustbin);
    const ModelDims dims{};
    const PiGnnParams params = init_params(cfg, dims, 9);
    for (int trial = 0; trial < 10; ++trial) {
      const Graph g = ts::random_connected_graph(rng, 2, 8);
      ad::Tape tape;
      const ForwardResult fr = forward(tape, g, bind_params(tape, params, false), cfg, dims);
      const Eigen::MatrixXd d = fr.plan.value();
      if (!dustbin) {
        const double tol = std::max(fr.marginal_error, 1e-9) + 1e-12;
        CHECK((d.rowwise().sum().array() - 1).abs().maxCoeff() <= tol);
        CHECK((d.colwise().sum().array() - double(g.num_vertices()) / 5).abs().maxCoeff() <= tol);
      } else {
        CHECK((d.rowwise().sum().array() <= 1 + cfg.sinkhorn.tolerance + fr.marginal_error).all());
      }
    }
  }
}

TEST_CASE("permutation invariance of embeddings") {
  std::mt19937_64 rng(4);
  for (bool dustbin : {false, true}) {
    const PiGnnConfig cfg = small_config(4, dustbin);
    const ModelDims dims{2, 2, 0};
    const PiGnnParams params = init_params(cfg, dims, 5);
    for (int trial = 0; trial < 20; ++trial) {
      const Graph g = with_attrs(ts::random_connected_graph(rng, 2, 8), rng, 2);
      const Graph h = permute_graph(g, ts::random_permutation(rng, g.num_vertices()));
      ad::Tape tape;
      const BoundParams b = bind_params(tape, params, false);
      const ForwardResult fg = forward(tape, g, b, cfg, dims), fh = forward(tape, h, b, cfg, dims);
      CHECK((fg.v_adj.value() - fh.v_adj.value()).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((fg.v_att.value() - fh.v_att.value()).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((fg.output.value() - fh.output.value()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("model distance") {
  std::mt19937_64 rng(5);
  const PiGnnConfig cfg = small_config();
  const ModelDims dims{};
  const PiGnnParams params = init_params(cfg, dims, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph a = ts::random_connected_graph(rng, 2, 7), b = ts::random_connected_graph(rng, 2, 7);
    CHECK(model_distance(a, a, params, cfg, dims) == 0.0);
    CHECK(model_distance(a, b, params, cfg, dims) == model_distance(b, a, params, cfg, dims));
  }
}

TEST_CASE("frozen uniform plan reproduces the uniform baseline") {
  std::mt19937_64 rng(6);
  const int n_max = 7;
  PiGnnConfig cfg = small_config(n_max);
  cfg.plan_mode = PlanMode::FrozenUniform;
  const ModelDims dims{};
  const PiGnnParams params = init_params(cfg, dims, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph a = ts::random_connected_graph(rng, 2, n_max), b = ts::random_connected_graph(rng, 2, n_max);
    CHECK(std::abs(model_distance(a, b, params, cfg, dims) - uniform_soft_distance(a, b, n_max)) < 1e-9);
  }
  // Two non-isomorphic graphs with equal edge counts collapse to one vector.
  const Graph path4 = generate(GraphKind::Path, {.n = 4}, 0);
  const Graph star4 = generate(GraphKind::Star, {.n = 4}, 0);
  CHECK(exact_distance(path4, star4) > 0);
  CHECK((embed(path4, params, cfg, dims) - embed(star4, params, cfg, dims)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("classification output") {
  PiGnnConfig cfg = small_config();
  cfg.task = TaskSpec::classification(3);
  const ModelDims dims{};
  const PiGnnParams params = init_params(cfg, dims, 2);
  Graph g = generate(GraphKind::Cycle, {.n = 5}, 0);
  g.set_target(2);
  CHECK(predict(g, params, cfg, dims).size() == 3);
  CHECK(std::isfinite(evaluate_loss(g, params, cfg, dims)));
  g.set_target(Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(evaluate_loss(g, params, cfg, dims), SchemaError);
}

TEST_CASE("end-to-end gradients match finite differences") {
  std::mt19937_64 rng(7);
  for (bool dustbin : {false, true}) {
    for (bool attrs : {false, true}) {
      PiGnnConfig cfg = small_config(4, dustbin);
      cfg.sinkhorn.tolerance = 0.0;  // fixed unroll length
      cfg.sinkhorn.max_iterations = 10;
      const ModelDims dims{2, attrs ? 2 : 0, 0};
      const PiGnnParams params = init_params(cfg, dims, 11);
      Graph g = ts::random_connected_graph(rng, 4, 5);
      if (attrs) g = with_attrs(g, rng, 2);
      Eigen::VectorXd y(1);
      y << 3.0;
      g.set_target(y);
      const auto errs = ts::gradient_check(g, params, cfg, dims);
      CAPTURE(dustbin);
      CAPTURE(attrs);
      CHECK(ts::fraction_within(errs, 1e-4) >= 0.99);
    }
  }
}
