#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "json.hpp"
#include "rhgcn/checkpoint.hpp"
#include "rhgcn/optimizer.hpp"
#include "rhgcn/trainer.hpp"
#include "test_support.hpp"

using namespace rhgcn;
using rhgcn::testsupport::Rng;

namespace {

Checkpoint sample_checkpoint() {
  RunConfig run;
  run.signature = "3x2";
  run.alpha = 0.15;
  run.lr = 0.003;
  const auto data = synth_graph(SynthSpec::parse(run.synth), run.data_seed);
  Checkpoint c;
  c.run = run;
  c.model = make_model_config(run, data);
  c.params = ModelParams::initialize(c.model, 42);
  Rng rng(1);
  c.params.bias = rng.gaussian(1, c.model.num_classes) * (1.0 / 3.0);
  c.epoch = 17;
  return c;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("run config roundtrip") {
    RunConfig a;
    a.signature = "16x1,4x2";
    a.alpha = 0.1 + 0.2;
    a.lr = 1.0 / 3.0;
    a.weight_decay = 5e-300;
    a.seed = 18446744073709551615ULL;
    a.noise_clamp = true;
    a.drop_rate = 0.35;
    const RunConfig b = RunConfig::parse(a.serialize());
    CHECK(b.entries() == a.entries());
    CHECK(b.alpha == a.alpha);
    CHECK(b.lr == a.lr);
    CHECK(b.weight_decay == a.weight_decay);
    CHECK(b.seed == a.seed);
    CHECK(run_config_keys().size() == a.entries().size());
  }

  TEST_CASE("run config parsing errors") {
    const auto parsed = RunConfig::parse("# comment\n\nlayers = 8  \nalpha=0.25 # trailing\n");
    CHECK(parsed.layers == 8);
    CHECK(parsed.alpha == 0.25);
    CHECK_THROWS_AS(RunConfig::parse("layers = 8\nbogus = 1\n"), ConfigError);
    try {
      RunConfig::parse("layers = 8\n\nalpha = abc\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(RunConfig::parse("just words\n"), ConfigError);
    RunConfig c;
    CHECK_THROWS_AS(c.set("layers", "2.5"), ConfigError);
    CHECK_THROWS_AS(c.set("noise_clamp", "maybe"), ConfigError);
    c.drop_rate = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.signature = "2x0";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.optimizer = "rmsprop";
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("run config files") {
    const auto path = std::filesystem::temp_directory_path() / ("rhgcn_cfg_" + std::to_string(std::random_device{}()));
    RunConfig a;
    a.layers = 5;
    a.save(path);
    CHECK(RunConfig::load(path).layers == 5);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(RunConfig::load(path), IoError);
  }

  TEST_CASE("shortest double formatting") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5, 0.0}) {
      CHECK(parse_double(format_double(x), "x") == x);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK_THROWS_AS(parse_double("1.5x", "x"), ConfigError);
  }

  TEST_CASE("config echo omits the output directory") {
    RunConfig a;
    a.out = "somewhere";
    const std::string echo = config_echo(a);
    CHECK(echo.rfind("# version=", 0) == 0);
    CHECK(echo.find("somewhere") == std::string::npos);
    CHECK(echo.find("# layers=2\n") != std::string::npos);
  }

  TEST_CASE("checkpoint roundtrip is bit-exact") {
    const Checkpoint a = sample_checkpoint();
    const Checkpoint b = checkpoint_from_json(checkpoint_to_json(a));
    CHECK(b.epoch == 17);
    CHECK(b.run.entries() == a.run.entries());
    const auto pa = a.params.trainable();
    const auto pb = b.params.trainable();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);
    REQUIRE(b.model.product.size() == a.model.product.size());
    for (std::size_t j = 0; j < a.model.product.size(); ++j) {
      CHECK(b.model.product.components[j].origin.coords() == a.model.product.components[j].origin.coords());
    }
    for (std::size_t l = 0; l < a.params.layers.size(); ++l) {
      CHECK(b.params.layers[l].alpha == a.params.layers[l].alpha);
      CHECK(b.params.layers[l].beta == a.params.layers[l].beta);
    }
    CHECK(checkpoint_to_json(b) == checkpoint_to_json(a));

    const auto data = synth_graph(SynthSpec::parse(a.run.synth), 0);
    CHECK(predict(a.model, a.params, data.features, data.graph) == predict(b.model, b.params, data.features, data.graph));
  }

  TEST_CASE("corrupt checkpoints") {
    const std::string good = checkpoint_to_json(sample_checkpoint());
    CHECK_THROWS_AS(checkpoint_from_json(good.substr(0, good.size() / 2)), FormatError);
    CHECK_THROWS_AS(checkpoint_from_json("{}"), FormatError);
    auto j = nlohmann::json::parse(good);
    j["version"] = 99;
    CHECK_THROWS_AS(checkpoint_from_json(j.dump()), FormatError);
    j = nlohmann::json::parse(good);
    j["params"]["classifier"]["data"].erase(0);
    CHECK_THROWS_AS(checkpoint_from_json(j.dump()), FormatError);
    j = nlohmann::json::parse(good);
    j["format"] = "something-else";
    CHECK_THROWS_AS(checkpoint_from_json(j.dump()), FormatError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/checkpoint.json"), IoError);
  }

  TEST_CASE("optimizers") {
    // Minimize |x - 3|^2 from x = 0.
    for (const char* name : {"sgd", "adam"}) {
      OptimizerConfig cfg;
      cfg.name = name;
      cfg.lr = 0.1;
      auto opt = make_optimizer(cfg);
      Matrix x = Matrix::Zero(1, 2);
      for (int i = 0; i < 500; ++i) {
        const Matrix g = 2.0 * (x.array() - 3.0).matrix();
        opt->step({&x}, {g}, {false});
      }
      CHECK(x(0, 0) == doctest::Approx(3.0).epsilon(1e-3));
    }

    // One plain SGD step: x - lr (g + wd x) on decayed tensors only.
    OptimizerConfig sgd;
    sgd.name = "sgd";
    sgd.lr = 0.5;
    sgd.momentum = 0.0;
    sgd.weight_decay = 0.1;
    auto opt = make_optimizer(sgd);
    Matrix a = Matrix::Constant(1, 1, 2.0), b = Matrix::Constant(1, 1, 2.0);
    opt->step({&a, &b}, {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)}, {true, false});
    CHECK(a(0, 0) == doctest::Approx(2.0 - 0.5 * (1.0 + 0.2)));
    CHECK(b(0, 0) == doctest::Approx(1.5));

    // First Adam step moves every coordinate by lr (bias correction).
    OptimizerConfig adam;
    adam.lr = 0.01;
    auto a_opt = make_optimizer(adam);
    Matrix c(1, 2);
    c << 1.0, -1.0;
    Matrix g(1, 2);
    g << 5.0, -0.001;
    a_opt->step({&c}, {g}, {false});
    CHECK(c(0, 0) == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(c(0, 1) == doctest::Approx(-0.99).epsilon(1e-4));

    CHECK_THROWS_AS(opt->step({&a}, {Matrix::Zero(2, 2)}, {false}), DimensionError);
    OptimizerConfig bad;
    bad.name = "lbfgs";
    CHECK_THROWS_AS(make_optimizer(bad), ConfigError);
  }
}
