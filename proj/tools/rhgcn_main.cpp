#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rhgcn/error.hpp"
#include "rhgcn/trainer.hpp"

namespace {

using namespace rhgcn;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> signature;
  std::optional<int> layers;
  std::optional<double> alpha;
  std::optional<double> beta_base;
  std::optional<double> drop_rate;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<std::string> synth;
  std::optional<int> epochs;
  std::vector<std::string> assignments;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Flat key=value config file");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--signature", o.signature, "Product signature dxm[,dxm...]");
  cmd->add_option("--layers", o.layers, "Number of hgc layers");
  cmd->add_option("--alpha", o.alpha, "Initial-residual weight");
  cmd->add_option("--beta-base", o.beta_base, "beta_l = ln(1 + beta_base / l)");
  cmd->add_option("--drop-rate", o.drop_rate, "HyperDrop rate eta in [0, 1)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--dataset", o.dataset, "Dataset directory");
  cmd->add_option("--synth", o.synth, "Synthetic graph spec, e.g. sbm:blocks=2,size=30");
  cmd->add_option("--epochs", o.epochs, "Maximum training epochs");
  cmd->add_option("--set", o.assignments, "Override any config key: --set key=value")->take_all();
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig run = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  if (o.dataset) {
    run.dataset = *o.dataset;
  }
  if (o.synth) {
    run.synth = *o.synth;
    run.dataset.clear();
  }
  if (o.seed) run.seed = *o.seed;
  if (o.signature) run.signature = *o.signature;
  if (o.layers) run.layers = *o.layers;
  if (o.alpha) run.alpha = *o.alpha;
  if (o.beta_base) run.beta_base = *o.beta_base;
  if (o.drop_rate) run.drop_rate = *o.drop_rate;
  if (o.out) run.out = *o.out;
  if (o.epochs) run.epochs = *o.epochs;
  for (const auto& a : o.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + a + "'");
    run.set(a.substr(0, eq), a.substr(eq + 1));
  }
  run.validate();
  return run;
}

int cmd_train(const CommonOptions& o, std::optional<int> sweep, std::optional<int> threads) {
  RunConfig run = resolve(o);
  if (sweep) run.sweep_seeds = *sweep;
  if (threads) run.threads = *threads;
  run.validate();
  if (run.sweep_seeds > 1) {
    const auto rows = run_sweep(run, run.out);
    double mean = 0.0;
    for (const auto& r : rows) {
      std::cout << "seed=" << r.seed << " best_epoch=" << r.best_epoch << " test_acc=" << format_double(r.test_acc)
                << '\n';
      mean += r.test_acc;
    }
    std::cout << "mean_test_acc=" << format_double(mean / static_cast<double>(rows.size())) << '\n';
    return kExitOk;
  }
  const TrainOutcome out = run_training(run, run.out);
  std::cout << "best_epoch=" << out.best_epoch << " best_val_acc=" << format_double(out.best_val_acc)
            << " test_acc=" << format_double(out.test_acc) << " epochs_run=" << out.epochs_run << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const CommonOptions& o) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  RunConfig data_cfg = ckpt.run;
  if (o.dataset) data_cfg.dataset = *o.dataset;
  if (o.synth) {
    data_cfg.synth = *o.synth;
    data_cfg.dataset.clear();
  }
  const EvalOutcome e = run_eval(ckpt, load_run_dataset(data_cfg));
  std::cout << "epoch=" << e.epoch << " train_acc=" << format_double(e.train_acc)
            << " val_acc=" << format_double(e.val_acc) << " test_acc=" << format_double(e.test_acc) << '\n';
  if (o.out) {
    std::filesystem::create_directories(*o.out);
    nlohmann::json j = {{"artifact", artifact_version()}, {"checkpoint", checkpoint},  {"epoch", e.epoch},
                        {"train_acc", e.train_acc},       {"val_acc", e.val_acc},       {"test_acc", e.test_acc}};
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : data_cfg.entries()) cfg[k] = v;
    j["config"] = cfg;
    std::ofstream(std::filesystem::path(*o.out) / "eval.json") << j.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_gradcheck(const CommonOptions& o, const std::string& fault) {
  CommonOptions opts = o;
  if (!opts.layers && opts.config_path.empty()) opts.layers = 2;
  const RunConfig run = resolve(opts);
  if (fault == "matmul_rhs") {
    ad::testing::inject_fault(ad::testing::Fault::matmul_rhs);
  } else if (!fault.empty()) {
    throw UsageError("unknown fault '" + fault + "'");
  }
  const GradCheckOutcome g = run_gradcheck(run);
  std::cout << "max_rel_error=" << format_double(g.report.max_rel_error) << " checked=" << g.report.checked
            << " excluded=" << g.report.excluded << " threshold=" << format_double(g.threshold) << '\n';
  return g.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_synth(const CommonOptions& o) {
  const std::string spec = o.synth.value_or(RunConfig{}.synth);
  if (!o.out) throw UsageError("synth needs --out <dir>");
  const NodeDataset data = synth_graph(SynthSpec::parse(spec), o.seed.value_or(0));
  write_dataset(data, *o.out);
  std::cout << "wrote " << data.name << " n=" << data.graph.num_nodes() << " edges=" << data.graph.edges().size()
            << " features=" << data.features.cols() << " classes=" << data.num_classes << " to " << *o.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual hyperbolic graph convolutional networks on Lorentz product manifolds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rhgcn::artifact_version());

  CommonOptions train_opts, eval_opts, diag_opts, grad_opts, synth_opts;
  std::optional<int> sweep, threads;
  auto* train = app.add_subcommand("train", "Train a model and write metrics, checkpoint and results");
  add_common(train, train_opts);
  train->add_option("--sweep-seeds", sweep, "Run this many consecutive seeds");
  train->add_option("--threads", threads, "Concurrent sessions in a sweep");

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  std::string mode = "energy";
  rhgcn::DiagnoseOptions diag;
  auto* diagnose = app.add_subcommand("diagnose", "Dirichlet-energy, decay-bound and Lemma 1 diagnostics");
  add_common(diagnose, diag_opts);
  diagnose->add_option("--mode", mode, "energy | bound | lemma1");
  diagnose->add_option("--trials", diag.trials, "Lemma 1 trials per size");
  diagnose->add_option("--n", diag.lemma_sizes, "Lemma 1 matrix sizes")->take_all();
  diagnose->add_option("--alphas", diag.alphas, "Energy mode: residual weights to compare")->take_all();

  std::string fault;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check (exit 1 above 1e-4)");
  add_common(gradcheck, grad_opts);
  gradcheck->add_option("--inject-fault", fault)->group("");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset directory");
  add_common(synth, synth_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rhgcn::kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_opts, sweep, threads);
    if (*eval) return cmd_eval(checkpoint, eval_opts);
    if (*diagnose) {
      diag.mode = rhgcn::parse_diagnose_mode(mode);
      const rhgcn::RunConfig run = resolve(diag_opts);
      return rhgcn::run_diagnose(run, diag, run.out, std::cout);
    }
    if (*gradcheck) return cmd_gradcheck(grad_opts, fault);
    if (*synth) return cmd_synth(synth_opts);
  } catch (const rhgcn::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return rhgcn::kExitNumeric;
  } catch (const rhgcn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rhgcn::kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rhgcn::kExitUsage;
  }
  return rhgcn::kExitUsage;
}
