#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rhgcn/model.hpp"
#include "test_support.hpp"

using namespace rhgcn;
namespace ts = rhgcn::testsupport;
using ts::Rng;

namespace {

ModelConfig small_config(const std::string& signature, double radius, int layers, Eigen::Index input_dim,
                         int classes, std::uint64_t seed = 1) {
  ModelConfig c;
  c.product = build_product(parse_signature(signature), seed, radius);
  c.layers = layers;
  c.input_dim = input_dim;
  c.num_classes = classes;
  return c;
}

// Hand composition of one residual layer on a single component, using only the
// textbook exp/log/transport formulas.
Matrix reference_layer(const Matrix& h, const Matrix& h0, const Matrix& p, const Matrix& w, double alpha,
                       double beta, const Vector& o, bool relu) {
  const Eigen::Index n = h.rows();
  const Eigen::Index w1 = h.cols();
  Matrix logs(n, w1);
  for (Eigen::Index i = 0; i < n; ++i) logs.row(i) = ts::ref_log(o, h.row(i).transpose()).transpose();
  const Matrix agg_t = p * logs;
  Matrix out(n, w1);
  const Matrix m = (1.0 - beta) * Matrix::Identity(w1, w1) + beta * w;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector agg = ts::ref_exp(o, ts::ref_tangent_proj(o, agg_t.row(i).transpose()));
    const Vector a = ts::ref_exp(o, (1.0 - alpha) * ts::ref_log(o, agg));
    const Vector b = ts::ref_exp(o, alpha * ts::ref_log(o, h0.row(i).transpose()));
    const Vector hbar = ts::ref_exp(a, ts::ref_transport(o, a, ts::ref_log(o, b)));
    Vector t = ts::ref_tangent_proj(o, m * ts::ref_log(o, hbar));
    if (relu) t = ts::ref_tangent_proj(o, t.cwiseMax(0.0));
    out.row(i) = ts::ref_exp(o, t).transpose();
  }
  return out;
}

Matrix random_rows(Rng& rng, Eigen::Index n, Eigen::Index d, double r_max) {
  Matrix m(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = rng.point(d, rng.uniform(0.1, r_max)).coords().transpose();
  return m;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("hgc layer identity composition") {
    Rng rng(1);
    const SparseGraph edgeless(4, {});
    const auto o = canonical_origin(2);
    const Matrix h = random_rows(rng, 4, 2, 1.5);
    // P = I needs an edgeless graph: its self-looped normalization is the identity.
    ad::Tape tape;
    const ad::Var out = hgc_layer(tape.constant(h), tape.constant(random_rows(rng, 4, 2, 1.0)), edgeless,
                                  tape.constant(Matrix::Identity(3, 3)), 0.0, 1.0, ad::origin_row(tape, o),
                                  Activation::identity);
    CHECK((out.value() - h).norm() < 1e-10);
  }

  TEST_CASE("alpha = 1 saturates at the initial rows") {
    Rng rng(2);
    const SparseGraph g(3, {{0, 1}, {1, 2}});
    const auto origin = rng.point(2, 0.7);
    const Matrix h0 = random_rows(rng, 3, 2, 1.0);
    ad::Tape tape;
    const ad::Var o = ad::origin_row(tape, origin);
    const ad::Var w_id = tape.constant(Matrix::Identity(3, 3));
    const ad::Var a = hgc_layer(tape.constant(random_rows(rng, 3, 2, 2.0)), tape.constant(h0), g, w_id, 1.0, 0.0, o,
                                Activation::identity);
    const ad::Var b = hgc_layer(tape.constant(random_rows(rng, 3, 2, 2.0)), tape.constant(h0), g, w_id, 1.0, 0.0, o,
                                Activation::identity);
    CHECK((a.value() - h0).norm() < 1e-9);
    CHECK((b.value() - a.value()).norm() < 1e-9);
  }

  TEST_CASE("two-node layer against the hand composition") {
    Rng rng(3);
    const SparseGraph g(2, {{0, 1}});
    const Matrix w = Matrix::Identity(3, 3) + 0.4 * rng.gaussian(3, 3);
    for (int variant = 0; variant < 3; ++variant) {
      const bool canonical = variant != 1;
      const bool relu = variant == 2;
      const auto origin = canonical ? canonical_origin(2) : rng.point(2, 0.8);
      const Matrix h = random_rows(rng, 2, 2, 1.2);
      const Matrix h0 = random_rows(rng, 2, 2, 1.2);
      ad::Tape tape;
      const ad::Var out = hgc_layer(tape.constant(h), tape.constant(h0), g, tape.constant(w), 0.3, 0.6,
                                    ad::origin_row(tape, origin), relu ? Activation::relu : Activation::identity);
      const Matrix expected =
          reference_layer(h, h0, g.dense_adj_norm(), w, 0.3, 0.6, origin.coords(), relu);
      CHECK((out.value() - expected).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  TEST_CASE("forward output is a log-softmax") {
    const auto data = synth_graph(SynthSpec::parse("balanced_tree:b=2,h=3"), 0);
    auto cfg = small_config("2x1", 1.0, 1, data.features.cols(), data.num_classes);
    const auto params = ModelParams::initialize(cfg, 5);
    const Matrix lp = predict(cfg, params, data.features, data.graph);
    CHECK(lp.rows() == 15);
    CHECK(lp.cols() == data.num_classes);
    for (Eigen::Index i = 0; i < lp.rows(); ++i) CHECK(std::abs(lp.row(i).array().exp().sum() - 1.0) < 1e-9);
    CHECK(predict(cfg, params, data.features, data.graph) == lp);

    Matrix wrong = Matrix::Zero(14, data.features.cols());
    CHECK_THROWS_AS(predict(cfg, params, wrong, data.graph), DimensionError);
  }

  TEST_CASE("duplicated components stay identical") {
    const auto data = synth_graph(SynthSpec::parse("path:n=8,period=4,dim=3"), 0);
    const auto one = build_product(parse_signature("2x1"), 4, 1.0);
    ModelConfig cfg;
    cfg.product = product_from_origins(parse_signature("2x2"), {one.components[0].origin, one.components[0].origin},
                                       4, 1.0);
    cfg.layers = 3;
    cfg.input_dim = data.features.cols();
    cfg.num_classes = data.num_classes;
    auto params = ModelParams::initialize(cfg, 9);
    params.input_maps[1] = params.input_maps[0];
    for (auto& layer : params.layers) layer.weights[1] = layer.weights[0];

    ad::Tape tape;
    const auto bound = bind_parameters(tape, params, false);
    ForwardOptions opts;
    opts.record_states = true;
    const auto result = forward(tape, cfg, params, bound, data.features, data.graph, opts);
    REQUIRE(result.states.size() == 4);
    for (const auto& layer : result.states) CHECK(layer[0] == layer[1]);
  }

  TEST_CASE("permutation equivariance") {
    Rng rng(6);
    const int n = 10;
    std::vector<Edge> edges;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (rng.uniform(0, 1) < 0.3) edges.emplace_back(a, b);
      }
    }
    const Matrix x = rng.gaussian(n, 4);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<Edge> pedges;
    for (const auto& [a, b] : edges) pedges.emplace_back(perm[a], perm[b]);
    Matrix px(n, 4);
    for (int i = 0; i < n; ++i) px.row(perm[i]) = x.row(i);

    auto cfg = small_config("3x2", 1.0, 3, 4, 3);
    const auto params = ModelParams::initialize(cfg, 2);
    const Matrix out = predict(cfg, params, x, SparseGraph(n, edges));
    const Matrix pout = predict(cfg, params, px, SparseGraph(n, pedges));
    for (int i = 0; i < n; ++i) CHECK((pout.row(perm[i]) - out.row(i)).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("loss and accuracy") {
    ad::Tape tape;
    Matrix perfect(2, 2);
    perfect << 0.0, -INFINITY, -INFINITY, 0.0;
    const std::vector<int> labels{0, 1};
    const std::vector<int> both{0, 1};
    CHECK(loss(tape.constant(perfect), labels, both).scalar() == 0.0);
    const Matrix uniform = Matrix::Constant(2, 5, -std::log(5.0));
    CHECK(loss(tape.constant(uniform), labels, both).scalar() == doctest::Approx(std::log(5.0)));
    CHECK_THROWS_AS(loss(tape.constant(uniform), labels, std::vector<int>{}), UsageError);
    CHECK(accuracy(perfect, labels, both) == 1.0);
    CHECK(accuracy(perfect, std::vector<int>{1, 1}, both) == 0.5);
  }

  TEST_CASE("configuration") {
    ModelConfig cfg = small_config("2x2", 1.0, 4, 3, 2);
    CHECK(cfg.beta_at(1) == doctest::Approx(std::log(1.5)));
    CHECK(cfg.beta_at(4) == doctest::Approx(std::log(1.125)));
    CHECK_THROWS_AS(cfg.beta_at(0), UsageError);
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.alpha = 0.1;
    cfg.noise.drop_rate = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(parse_activation("relu") == Activation::relu);
    CHECK(activation_name(Activation::identity) == "identity");
    CHECK_THROWS_AS(parse_activation("tanh"), ConfigError);
    CHECK(parse_granularity(granularity_name(NoiseGranularity::per_component)) == NoiseGranularity::per_component);
  }

  TEST_CASE("parameter layout") {
    const ModelConfig cfg = small_config("2x2", 1.0, 2, 3, 4);
    auto params = ModelParams::initialize(cfg, 1);
    const auto names = params.trainable_names();
    const std::vector<std::string> expected{"input_map.0", "input_map.1", "layer.1.W.0", "layer.1.W.1",
                                            "layer.2.W.0", "layer.2.W.1", "classifier",  "bias"};
    CHECK(names == expected);
    const auto mask = params.weight_decay_mask();
    CHECK(mask == std::vector<bool>{false, false, true, true, true, true, false, false});
    CHECK(params.trainable().size() == 8);
    CHECK(params.classifier.rows() == 6);
    CHECK(params.bias.isZero());
    CHECK(params.layers[1].beta == doctest::Approx(std::log(1.25)));
    const auto again = ModelParams::initialize(cfg, 1);
    CHECK(again.layers[0].weights[1] == params.layers[0].weights[1]);
  }

  TEST_CASE("training mode with noise needs an rng") {
    const auto data = synth_graph(SynthSpec::parse("path:n=6"), 0);
    auto cfg = small_config("2x1", 1.0, 1, data.features.cols(), data.num_classes);
    cfg.noise.drop_rate = 0.3;
    const auto params = ModelParams::initialize(cfg, 1);
    ad::Tape tape;
    const auto bound = bind_parameters(tape, params, true);
    ForwardOptions opts;
    opts.training = true;
    CHECK_THROWS_AS(forward(tape, cfg, params, bound, data.features, data.graph, opts), UsageError);
    std::mt19937_64 rng(1);
    opts.rng = &rng;
    const auto r = forward(tape, cfg, params, bound, data.features, data.graph, opts);
    CHECK(r.log_probs.value().allFinite());
    // Evaluation mode ignores the noise.
    CHECK(predict(cfg, params, data.features, data.graph) == predict(cfg, params, data.features, data.graph));
  }
}
